#![no_main]

use libfuzzer_sys::fuzz_target;
use symradio::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::from_toml(text) {
        let again = ExperimentConfig::from_json(&cfg.to_json()).expect("canonical form parses");
        assert_eq!(cfg, again);
    }
});
