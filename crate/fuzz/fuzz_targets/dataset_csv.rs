#![no_main]
use ews_core::dataset::{read_dataset_csv, write_dataset_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_dataset_csv(data) {
        if let Some(first) = rows.first() {
            let mut out = Vec::new();
            let _ = write_dataset_csv(&rows, first.window.len(), &mut out);
        }
    }
});
