#![no_main]

use libfuzzer_sys::fuzz_target;
use ssk3::tables::parse_fixture;

fuzz_target!(|data: &str| {
    let _ = parse_fixture(data);
});
