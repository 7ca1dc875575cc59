#![no_main]

use gfield_core::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_json_str(text) {
        let _ = cfg.validate();
        let again = RunConfig::from_json_str(&cfg.to_json()).expect("serialized config parses");
        assert_eq!(again.to_json(), cfg.to_json());
    }
});
