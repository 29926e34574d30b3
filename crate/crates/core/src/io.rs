//! On-disk formats.
//!
//! * Matrix CSV: header `node,t0,n_i,1,2,...,T`, one row per participant.
//! * Matrix binary: `u64` rows, `u64` cols, then `rows * cols` `f64` values in
//!   row-major order, all little-endian.
//! * H CSV: header `t,h1,...,hk`, one row per aligned time step.
//! * H JSON: [`HDocument`].
//! * Corpus manifest: CSV `name,category,path`, optional header, `#` comments.
//!
//! CSV readers skip lines starting with `#`, so artifacts may carry a
//! provenance comment on their first line.

use std::io::{Read, Write};
use std::path::PathBuf;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::factorize::FactorPair;
use crate::influence::{AlignedInfluenceMatrix, InfluenceMatrix};
use crate::ingest::NodeId;
use crate::similarity::SimilarityMatrix;
use crate::uniqueness::{Measurement, UniquenessReport};

const MATRIX_HEADER_LEN: usize = 16;

fn csv_error(what: &'static str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Format {
            what,
            line,
            reason: format!("{kind:?}"),
        },
    }
}

fn reader<R: Read>(r: R, has_headers: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r)
}

fn format_err(what: &'static str, line: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        what,
        line,
        reason: reason.into(),
    }
}

fn write_matrix_rows<W: Write>(
    w: W,
    values: &Array2<f64>,
    node_ids: &[NodeId],
    t0: &[usize],
    n_i: &[usize],
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["node".to_string(), "t0".into(), "n_i".into()];
    header.extend((1..=values.ncols()).map(|t| t.to_string()));
    out.write_record(&header)
        .map_err(|e| csv_error("matrix csv", e))?;
    for (i, row) in values.outer_iter().enumerate() {
        let mut rec = vec![
            node_ids[i].to_string(),
            t0[i].to_string(),
            n_i[i].to_string(),
        ];
        rec.extend(row.iter().map(|v| v.to_string()));
        out.write_record(&rec)
            .map_err(|e| csv_error("matrix csv", e))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_influence_csv<W: Write>(w: W, m: &InfluenceMatrix) -> Result<()> {
    write_matrix_rows(w, m.values(), m.node_ids(), m.t0(), m.n_i())
}

pub fn write_aligned_csv<W: Write>(w: W, m: &AlignedInfluenceMatrix) -> Result<()> {
    write_matrix_rows(w, m.values(), m.node_ids(), m.t0(), m.n_i())
}

/// Reads the matrix CSV layout back as `M*`.
pub fn read_aligned_csv<R: Read>(r: R) -> Result<AlignedInfluenceMatrix> {
    const WHAT: &str = "matrix csv";
    let mut rdr = reader(r, true);
    let header = rdr.headers().map_err(|e| csv_error(WHAT, e))?.clone();
    if header.len() < 4 || &header[0] != "node" || &header[1] != "t0" || &header[2] != "n_i" {
        return Err(format_err(
            WHAT,
            1,
            "expected header node,t0,n_i,<T values>",
        ));
    }
    let t = header.len() - 3;
    let (mut ids, mut t0, mut n_i, mut data) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(WHAT, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != t + 3 {
            return Err(format_err(
                WHAT,
                line,
                format!("expected {} fields, found {}", t + 3, rec.len()),
            ));
        }
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| format_err(WHAT, line, format!("`{s}` is not an integer")))
        };
        ids.push(NodeId(int(&rec[0])?));
        t0.push(int(&rec[1])? as usize);
        n_i.push(int(&rec[2])? as usize);
        for f in rec.iter().skip(3) {
            data.push(
                f.parse::<f64>()
                    .map_err(|_| format_err(WHAT, line, format!("`{f}` is not a number")))?,
            );
        }
    }
    if ids.is_empty() {
        return Err(format_err(WHAT, 2, "no matrix rows"));
    }
    let values = Array2::from_shape_vec((ids.len(), t), data).expect("row lengths checked");
    AlignedInfluenceMatrix::from_parts(values, ids, t0, n_i)
}

pub fn encode_matrix_bin(values: &Array2<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(MATRIX_HEADER_LEN + 8 * values.len());
    out.extend_from_slice(&(values.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(values.ncols() as u64).to_le_bytes());
    for v in values.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_matrix_bin(bytes: &[u8]) -> Result<Array2<f64>> {
    const WHAT: &str = "matrix binary";
    if bytes.len() < MATRIX_HEADER_LEN {
        return Err(format_err(WHAT, 0, "truncated dimension header"));
    }
    let dim = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let (rows, cols) = (dim(0), dim(8));
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|b| usize::try_from(b).ok());
    let body = &bytes[MATRIX_HEADER_LEN..];
    if expected != Some(body.len()) {
        return Err(format_err(
            WHAT,
            0,
            format!(
                "{rows}x{cols} matrix does not match {} payload bytes",
                body.len()
            ),
        ));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Array2::from_shape_vec((rows as usize, cols as usize), data)
        .map_err(|e| format_err(WHAT, 0, format!("{rows}x{cols}: {e}")))
}

pub fn write_h_csv<W: Write>(w: W, h: &Array2<f64>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=h.nrows()).map(|r| format!("h{r}")));
    out.write_record(&header)
        .map_err(|e| csv_error("h csv", e))?;
    for t in 0..h.ncols() {
        let mut rec = vec![(t + 1).to_string()];
        rec.extend(h.column(t).iter().map(|v| v.to_string()));
        out.write_record(&rec).map_err(|e| csv_error("h csv", e))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `t,h1..hk` rows back into a `k x T` matrix.
pub fn read_h_csv<R: Read>(r: R) -> Result<Array2<f64>> {
    const WHAT: &str = "h csv";
    let mut rdr = reader(r, true);
    let header = rdr.headers().map_err(|e| csv_error(WHAT, e))?.clone();
    if header.len() < 2 || &header[0] != "t" {
        return Err(format_err(WHAT, 1, "expected header t,h1,..."));
    }
    let k = header.len() - 1;
    let mut cols: Vec<f64> = Vec::new();
    let mut t = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(WHAT, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != k + 1 {
            return Err(format_err(WHAT, line, format!("expected {} fields", k + 1)));
        }
        for f in rec.iter().skip(1) {
            cols.push(
                f.parse::<f64>()
                    .map_err(|_| format_err(WHAT, line, format!("`{f}` is not a number")))?,
            );
        }
        t += 1;
    }
    if t == 0 {
        return Err(format_err(WHAT, 2, "no rows"));
    }
    // stored time-major; transpose to k x T
    Ok(Array2::from_shape_vec((t, k), cols)
        .expect("row lengths checked")
        .reversed_axes()
        .as_standard_layout()
        .into_owned())
}

/// JSON form of an extracted `H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub k: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub rows: Vec<Vec<f64>>,
    pub residual: f64,
    pub converged: bool,
    #[serde(default)]
    pub iterations: usize,
}

impl HDocument {
    pub fn from_pair(name: Option<String>, pair: &FactorPair) -> Self {
        HDocument {
            name,
            k: pair.k(),
            t: pair.h.ncols(),
            rows: pair.h.outer_iter().map(|r| r.to_vec()).collect(),
            residual: pair.relative_residual,
            converged: pair.converged,
            iterations: pair.iterations,
        }
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let doc: HDocument = serde_json::from_slice(bytes)?;
        if doc.rows.is_empty()
            || doc.rows.len() != doc.k
            || doc.rows.iter().any(|r| r.len() != doc.t)
        {
            return Err(invalid("H document rows do not match its k and T"));
        }
        Ok(doc)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub category: String,
    pub path: PathBuf,
}

/// Parses a `name,category,path` corpus manifest. A first record equal to
/// `name,category,path` is treated as a header.
pub fn parse_manifest<R: Read>(r: R) -> Result<Vec<ManifestEntry>> {
    const WHAT: &str = "corpus manifest";
    let mut out = Vec::new();
    for rec in reader(r, false).records() {
        let rec = rec.map_err(|e| csv_error(WHAT, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(format_err(WHAT, line, "expected name,category,path"));
        }
        if out.is_empty() && &rec[0] == "name" && &rec[1] == "category" && &rec[2] == "path" {
            continue;
        }
        if rec[0].is_empty() || rec[2].is_empty() {
            return Err(format_err(WHAT, line, "name and path must be non-empty"));
        }
        out.push(ManifestEntry {
            name: rec[0].to_string(),
            category: rec[1].to_string(),
            path: PathBuf::from(&rec[2]),
        });
    }
    Ok(out)
}

/// Square CSV with the labels as header row and first column.
pub fn write_similarity_csv<W: Write>(w: W, s: &SimilarityMatrix) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![s.measure.to_string()];
    header.extend(s.labels.iter().cloned());
    out.write_record(&header)
        .map_err(|e| csv_error("similarity csv", e))?;
    for (label, row) in s.labels.iter().zip(s.values.outer_iter()) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        out.write_record(&rec)
            .map_err(|e| csv_error("similarity csv", e))?;
    }
    out.flush()?;
    Ok(())
}

/// One row per network: `network,l1_rho..,l2_rho..,cosine_rho..`.
pub fn write_uniqueness_table<W: Write>(w: W, rows: &[(&str, &UniquenessReport)]) -> Result<()> {
    let Some((_, first)) = rows.first() else {
        return Err(invalid("uniqueness table needs at least one network"));
    };
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["network".to_string()];
    for m in Measurement::ALL {
        header.extend(first.rhos.iter().map(|rho| format!("{m}_rho{rho}")));
    }
    out.write_record(&header)
        .map_err(|e| csv_error("uniqueness csv", e))?;
    for (name, report) in rows {
        if report.rhos != first.rhos {
            return Err(invalid("all reports in one table must share their rho set"));
        }
        let mut rec = vec![name.to_string()];
        rec.extend(report.table_row().iter().map(|v| format!("{v:.1e}")));
        out.write_record(&rec)
            .map_err(|e| csv_error("uniqueness csv", e))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn matrix_csv_round_trip() {
        let m = AlignedInfluenceMatrix::from_parts(
            array![[0.5, 0.1, 0.0], [1.0 / 3.0, 0.0, 0.0]],
            vec![NodeId(7), NodeId(3)],
            vec![1, 3],
            vec![2, 5],
        )
        .unwrap();
        let mut buf = b"# provenance line\n".to_vec();
        write_aligned_csv(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("node,t0,n_i,1,2,3\n7,1,2,0.5,0.1,0\n"));
        assert_eq!(read_aligned_csv(&buf[..]).unwrap(), m);
    }

    #[test]
    fn matrix_csv_rejects_bad_input() {
        assert!(read_aligned_csv(&b"a,b,c,d\n"[..]).is_err());
        assert!(read_aligned_csv(&b"node,t0,n_i,1\n"[..]).is_err());
        assert!(read_aligned_csv(&b"node,t0,n_i,1,2\n1,1,1,0.5\n"[..]).is_err());
        assert!(read_aligned_csv(&b"node,t0,n_i,1\n1,1,1,-0.5\n"[..]).is_err());
        assert!(read_aligned_csv(&b"node,t0,n_i,1\n1,0,1,0.5\n"[..]).is_err());
    }

    #[test]
    fn binary_layout() {
        let m = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.5]];
        let bytes = encode_matrix_bin(&m);
        assert_eq!(bytes.len(), 16 + 6 * 8);
        assert_eq!(&bytes[..8], &3u64.to_le_bytes());
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
        assert_eq!(&bytes[16..24], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[56..64], &6.5f64.to_le_bytes());
        assert_eq!(decode_matrix_bin(&bytes).unwrap(), m);
        assert!(decode_matrix_bin(&bytes[..20]).is_err());
        let mut huge = u64::MAX.to_le_bytes().to_vec();
        huge.extend_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode_matrix_bin(&huge).is_err());
    }

    #[test]
    fn h_csv_layout() {
        let h = array![[0.6, 0.8, 0.0], [0.0, 0.6, 0.8]];
        let mut buf = Vec::new();
        write_h_csv(&mut buf, &h).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "t,h1,h2\n1,0.6,0\n2,0.8,0.6\n3,0,0.8\n"
        );
        assert_eq!(read_h_csv(&buf[..]).unwrap(), h);
    }

    #[test]
    fn h_document_validation() {
        let ok = br#"{"k":1,"T":2,"rows":[[0.6,0.8]],"residual":0.0,"converged":true}"#;
        assert_eq!(HDocument::parse(ok).unwrap().rows, vec![vec![0.6, 0.8]]);
        let bad = br#"{"k":2,"T":2,"rows":[[0.6,0.8]],"residual":0.0,"converged":true}"#;
        assert!(HDocument::parse(bad).is_err());
    }

    #[test]
    fn manifest_parsing() {
        let text = "# corpus\nname,category,path\ncit-HepPh,Citation,h/hepph.json\nCollegeMsg, Social ,h/college.csv\n";
        let entries = parse_manifest(text.as_bytes()).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[1].category, "Social");
        assert!(parse_manifest(&b"a,b\n"[..]).is_err());
        assert!(parse_manifest(&b",x,y\n"[..]).is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
            let m = Array2::from_shape_fn((rows, cols), |(i, j)| {
                f64::from_bits(seed.wrapping_mul(31).wrapping_add((i * 7 + j) as u64) >> 2)
            });
            let back = decode_matrix_bin(&encode_matrix_bin(&m)).unwrap();
            prop_assert_eq!(back.dim(), m.dim());
            for (a, b) in back.iter().zip(m.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
