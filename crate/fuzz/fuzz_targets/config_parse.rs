#![no_main]

use libfuzzer_sys::fuzz_target;
use tucker_infer::montecarlo::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ExperimentConfig::parse(text) {
            assert!(cfg.reps >= 1);
            assert!(!cfg.grid.is_empty());
        }
    }
});
