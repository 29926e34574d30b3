#![no_main]
use libfuzzer_sys::fuzz_target;
use pinfluence::io::{decode_matrix_bin, encode_matrix_bin};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = decode_matrix_bin(data) {
        assert_eq!(encode_matrix_bin(&m), data);
    }
});
