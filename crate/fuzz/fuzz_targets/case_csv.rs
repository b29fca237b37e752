#![no_main]
use ews_core::empirical::CaseSeries;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cases) = CaseSeries::read_csv(data) {
        let mut out = Vec::new();
        cases.write_csv(&mut out).unwrap();
        assert_eq!(CaseSeries::read_csv(out.as_slice()).unwrap(), cases);
    }
});
