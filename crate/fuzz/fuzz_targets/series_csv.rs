#![no_main]
use ews_core::indicators::read_series_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // First byte picks the column name so both hits and misses are explored.
    let Some((&pick, rest)) = data.split_first() else {
        return;
    };
    let column = ["I", "S", "value", ""][pick as usize % 4];
    let _ = read_series_csv(rest, column);
});
