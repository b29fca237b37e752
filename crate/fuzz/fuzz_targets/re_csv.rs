#![no_main]
use ews_core::empirical::read_re_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_re_csv(data);
});
