#![no_main]
use ews_core::config::Config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = Config::parse(text) {
        for key in cfg.entries().keys() {
            let _ = cfg.get::<f64>(key);
            let _ = cfg.get_list::<f64>(key);
        }
    }
});
