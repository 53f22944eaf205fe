#![no_main]

use libfuzzer_sys::fuzz_target;
use ssk3::tables::{decode_code, encode_code, CODE_BITS};

fuzz_target!(|data: [u8; 8]| {
    let code = u64::from_le_bytes(data);
    match decode_code(code) {
        Ok(bits) => {
            assert_eq!(bits.len(), CODE_BITS);
            assert_eq!(encode_code(&bits).unwrap(), code);
        }
        Err(_) => assert!(code >> CODE_BITS != 0),
    }
});
