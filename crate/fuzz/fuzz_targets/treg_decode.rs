#![no_main]

use libfuzzer_sys::fuzz_target;
use tucker_infer::format::{decode_treg, encode_treg};

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = decode_treg(data) {
        assert_eq!(encode_treg(&d), data);
    }
});
