//! Fuzz the key=value settings parser: arbitrary text must either parse
//! into a table we can read back, or return a clean error — never panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = d3ap::config::Config::parse(text) {
        // everything the parser accepted must be retrievable
        for key in cfg.keys() {
            assert!(cfg.get(key).is_some());
        }
        // typed lookups on arbitrary values may fail but must not panic
        for key in cfg.keys() {
            let _ = cfg.get_parsed::<f64>(key);
            let _ = cfg.get_parsed::<u64>(key);
        }
    }
});
