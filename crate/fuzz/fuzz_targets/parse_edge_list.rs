#![no_main]
use libfuzzer_sys::fuzz_target;
use pinfluence::ingest::{
    parse_edge_list_maybe_gzip, plan_snapshots, preprocess, ColumnOrder, PreprocessConfig,
};

fuzz_target!(|data: &[u8]| {
    let Ok(list) = parse_edge_list_maybe_gzip(data, &ColumnOrder::default()) else {
        return;
    };
    let edges = list.len();
    let list = preprocess(list, &PreprocessConfig::default());
    assert!(list.len() <= edges);
    if let Ok(plan) = plan_snapshots(&list, 4) {
        assert_eq!(plan.total_edges(), list.len());
    }
});
