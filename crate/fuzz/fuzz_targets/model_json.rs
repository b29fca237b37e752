#![no_main]
use ews_core::learned::Classifier;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = Classifier::from_json(text) {
        let again = Classifier::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(again.params.len(), model.params.len());
    }
});
