#![no_main]

use auvdiff::harness::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::parse(text) {
        // Whatever parses must survive a round trip unchanged.
        let again = RunConfig::parse(&cfg.emit()).expect("emitted config must parse");
        assert_eq!(again, cfg);
    }
});
