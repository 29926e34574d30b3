#![no_main]
use libfuzzer_sys::fuzz_target;
use pinfluence::io::{read_aligned_csv, write_aligned_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = read_aligned_csv(data) {
        // whatever parses must survive a write/read cycle
        let mut buf = Vec::new();
        write_aligned_csv(&mut buf, &m).unwrap();
        assert_eq!(read_aligned_csv(buf.as_slice()).unwrap(), m);
    }
});
