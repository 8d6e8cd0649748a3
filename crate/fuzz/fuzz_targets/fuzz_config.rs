#![no_main]

use libfuzzer_sys::fuzz_target;
use twistbench_cli::config::ExperimentConfig;

// Config deserialization plus validation must never panic; accepted configs
// must build a lattice or fail with a named-field message.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = serde_json::from_str::<ExperimentConfig>(text) else { return };
    if cfg.validate().is_ok() {
        let _ = cfg.lattice();
        let _ = cfg.noise_model();
    }
});
