#![no_main]

use libfuzzer_sys::fuzz_target;
use patchvid::config::RunConfig;

fuzz_target!(|text: &str| {
    let Ok(cfg) = RunConfig::parse(text) else { return };
    if cfg.validate().is_ok() {
        // valid configs survive a text round trip
        assert_eq!(RunConfig::parse(&cfg.to_text()).expect("printed config parses"), cfg);
    }
});
