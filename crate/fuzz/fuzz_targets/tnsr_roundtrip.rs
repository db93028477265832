#![no_main]

use libfuzzer_sys::fuzz_target;
use tucker_infer::format::{parse_tnsr, parse_tnsr_bytes, write_tnsr};

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = parse_tnsr_bytes(data) {
        let back = parse_tnsr(&write_tnsr(&t)).expect("written tensor parses");
        assert_eq!(back, t);
    }
});
