#![no_main]
use libfuzzer_sys::fuzz_target;
use pinfluence::io::HDocument;

fuzz_target!(|data: &[u8]| {
    if let Ok(doc) = HDocument::parse(data) {
        assert_eq!(doc.rows.len(), doc.k);
    }
});
