#![no_main]

use libfuzzer_sys::fuzz_target;
use tucker_infer::format::parse_tnsr_bytes;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = parse_tnsr_bytes(data) {
        assert!(t.as_slice().iter().all(|v| v.is_finite()));
        assert_eq!(t.len(), t.dims().iter().product::<usize>());
    }
});
