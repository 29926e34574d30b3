#![no_main]
use libfuzzer_sys::fuzz_target;
use pinfluence::ingest::ColumnOrder;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(order) = s.parse::<ColumnOrder>() {
        assert_eq!(order.to_string().parse::<ColumnOrder>().unwrap(), order);
    }
});
