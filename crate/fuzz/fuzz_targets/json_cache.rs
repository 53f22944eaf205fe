#![no_main]

use libfuzzer_sys::fuzz_target;
use ssk3::cache::{parse_cache, Kind};
use ssk3::elliptic::EllipticOutcome;
use ssk3::rdp::RdpResult;

// Cache files are read back from disk, so any text must give Ok or Err.
fuzz_target!(|data: &str| {
    let _ = parse_cache::<RdpResult>(data, Kind::Rdp);
    let _ = parse_cache::<EllipticOutcome>(data, Kind::Elliptic);
});
