#![no_main]

use libfuzzer_sys::fuzz_target;
use tucker_infer::montecarlo::LoadingSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = LoadingSpec::parse(text) {
            assert_eq!(LoadingSpec::parse(&spec.label()).unwrap(), spec);
        }
    }
});
