#![no_main]
use ews_core::dataset::DatasetGroup;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for part in text.split(',') {
        let _ = part.parse::<DatasetGroup>();
    }
});
