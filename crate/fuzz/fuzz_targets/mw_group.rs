#![no_main]

use libfuzzer_sys::fuzz_target;
use ssk3::elliptic::{format_mw, parse_mw};

fuzz_target!(|data: &str| {
    if let Ok(mw) = parse_mw(data) {
        assert_eq!(parse_mw(&format_mw(&mw)).unwrap(), mw);
    }
});
