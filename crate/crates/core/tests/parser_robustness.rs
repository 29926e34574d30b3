//! Arbitrary bytes never panic any reader, and accepted inputs round-trip.

use pinfluence::ingest::{parse_edge_list_maybe_gzip, ColumnOrder};
use pinfluence::io::{
    decode_matrix_bin, encode_matrix_bin, parse_manifest, read_aligned_csv, read_h_csv,
    write_aligned_csv, HDocument,
};
use proptest::prelude::*;

fn csvish() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(
        prop::sample::select(b"0123456789.,-e \n#node,t0n_ih1\tx".to_vec()),
        0..200,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn edge_lists(data in prop::collection::vec(any::<u8>(), 0..300), text in csvish()) {
        let _ = parse_edge_list_maybe_gzip(data.as_slice(), &ColumnOrder::default());
        let _ = parse_edge_list_maybe_gzip(text.as_slice(), &ColumnOrder::default());
    }

    #[test]
    fn matrix_csv(text in csvish()) {
        let mut framed = b"node,t0,n_i,1,2\n".to_vec();
        framed.extend_from_slice(&text);
        for input in [text.as_slice(), framed.as_slice()] {
            if let Ok(m) = read_aligned_csv(input) {
                let mut buf = Vec::new();
                write_aligned_csv(&mut buf, &m).unwrap();
                prop_assert_eq!(read_aligned_csv(buf.as_slice()).unwrap(), m);
            }
        }
    }

    #[test]
    fn matrix_bin(rows in 0u64..4, cols in any::<u64>(), body in prop::collection::vec(any::<u8>(), 0..80)) {
        let mut bytes = rows.to_le_bytes().to_vec();
        bytes.extend_from_slice(&cols.to_le_bytes());
        bytes.extend_from_slice(&body);
        if let Ok(m) = decode_matrix_bin(&bytes) {
            prop_assert_eq!(encode_matrix_bin(&m), bytes);
        }
    }

    #[test]
    fn h_files_and_manifests(text in csvish(), json in prop::collection::vec(any::<u8>(), 0..120)) {
        let _ = read_h_csv(text.as_slice());
        let _ = parse_manifest(text.as_slice());
        let _ = HDocument::parse(&json);
    }
}

#[test]
fn zero_rows_with_huge_column_count_is_an_error() {
    let mut bytes = 0u64.to_le_bytes().to_vec();
    bytes.extend_from_slice(&u64::MAX.to_le_bytes());
    assert!(decode_matrix_bin(&bytes).is_err());
}
