#![no_main]

use libfuzzer_sys::fuzz_target;
use outlab::config::{ConfigFile, ExperimentConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = ConfigFile::parse(text) {
        // bad values must come back as errors, never panics
        if let Ok(cfg) = ExperimentConfig::resolve(file, ConfigFile::default()) {
            let echo = serde_json::to_string(&cfg).expect("serializing a resolved config");
            let again = ExperimentConfig::resolve(ConfigFile::parse(&echo).expect("echo parses"), ConfigFile::default());
            assert_eq!(again.expect("echo resolves"), cfg);
        }
    }
});
