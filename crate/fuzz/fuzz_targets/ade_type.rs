#![no_main]

use libfuzzer_sys::fuzz_target;
use ssk3::ade::AdeType;

fuzz_target!(|data: &str| {
    if let Ok(t) = data.parse::<AdeType>() {
        let printed = t.to_string();
        let back: AdeType = printed.parse().expect("printed type reparses");
        assert_eq!(back, t);
    }
});
