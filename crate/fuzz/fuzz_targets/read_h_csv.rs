#![no_main]
use libfuzzer_sys::fuzz_target;
use pinfluence::io::{read_h_csv, write_h_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(h) = read_h_csv(data) {
        let mut buf = Vec::new();
        write_h_csv(&mut buf, &h).unwrap();
        let back = read_h_csv(buf.as_slice()).unwrap();
        assert_eq!(back.dim(), h.dim());
    }
});
