//! Temporal edge-list ingestion.
//!
//! Reads SNAP-style `src dst timestamp` streams (plain or gzip), applies the
//! preprocessing rules (undirected, parallel edges kept, self-loops dropped by
//! default) and cuts the stream into equal edge-count snapshots.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default number of snapshots per network.
pub const DEFAULT_SNAPSHOTS: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TemporalEdge {
    pub source: NodeId,
    pub target: NodeId,
    pub timestamp: i64,
}

impl TemporalEdge {
    pub fn new(source: u64, target: u64, timestamp: i64) -> Self {
        TemporalEdge {
            source: NodeId(source),
            target: NodeId(target),
            timestamp,
        }
    }

    pub fn is_self_loop(&self) -> bool {
        self.source == self.target
    }
}

/// Zero-based positions of the source, target and timestamp fields on a line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnOrder {
    pub source: usize,
    pub target: usize,
    pub timestamp: usize,
}

impl Default for ColumnOrder {
    fn default() -> Self {
        ColumnOrder {
            source: 0,
            target: 1,
            timestamp: 2,
        }
    }
}

impl ColumnOrder {
    fn width(&self) -> usize {
        self.source.max(self.target).max(self.timestamp) + 1
    }
}

impl FromStr for ColumnOrder {
    type Err = Error;

    /// Accepts three comma-separated zero-based indices, e.g. `0,1,3` for
    /// `src dst rating time` files.
    fn from_str(s: &str) -> Result<Self> {
        let idx: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| invalid(format!("column order `{s}` is not three indices")))?;
        match idx[..] {
            [source, target, timestamp]
                if source != target && source != timestamp && target != timestamp =>
            {
                Ok(ColumnOrder {
                    source,
                    target,
                    timestamp,
                })
            }
            _ => Err(invalid(format!(
                "column order `{s}` needs three distinct indices"
            ))),
        }
    }
}

impl fmt::Display for ColumnOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.source, self.target, self.timestamp)
    }
}

/// Timestamp-ordered edge events. Once preprocessed, endpoints are stored
/// as `(min, max)` so direction carries no meaning.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalEdgeList {
    edges: Vec<TemporalEdge>,
    node_count: usize,
    pub dropped_malformed: usize,
    pub dropped_self_loops: usize,
}

impl TemporalEdgeList {
    /// Builds a list from in-memory edges, sorting stably by timestamp.
    pub fn from_edges(mut edges: Vec<TemporalEdge>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        edges.sort_by_key(|e| e.timestamp);
        let node_count = count_nodes(&edges);
        Ok(TemporalEdgeList {
            edges,
            node_count,
            dropped_malformed: 0,
            dropped_self_loops: 0,
        })
    }

    pub fn edges(&self) -> &[TemporalEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }
}

fn count_nodes(edges: &[TemporalEdge]) -> usize {
    let mut ids: Vec<u64> = edges
        .iter()
        .flat_map(|e| [e.source.0, e.target.0])
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

fn parse_timestamp(field: &str) -> Option<i64> {
    if let Ok(t) = field.parse::<i64>() {
        return Some(t);
    }
    // Some exports carry fractional seconds; only the ordering matters.
    let t = field.parse::<f64>().ok()?;
    if t.is_finite() && t.abs() < 9.0e18 {
        Some(t.floor() as i64)
    } else {
        None
    }
}

fn parse_line(line: &str, columns: &ColumnOrder) -> Option<TemporalEdge> {
    let fields: Vec<&str> = line
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|f| !f.is_empty())
        .collect();
    if fields.len() < columns.width() {
        return None;
    }
    let source = fields[columns.source].parse::<u64>().ok()?;
    let target = fields[columns.target].parse::<u64>().ok()?;
    let timestamp = parse_timestamp(fields[columns.timestamp])?;
    Some(TemporalEdge::new(source, target, timestamp))
}

/// Parses a whitespace (or comma) separated temporal edge list.
///
/// Lines starting with `#` or `%` and blank lines are skipped. Lines lacking a
/// usable timestamp, or with non-integer node ids, are counted in
/// `dropped_malformed`.
pub fn parse_edge_list<R: BufRead>(
    mut reader: R,
    columns: &ColumnOrder,
) -> Result<TemporalEdgeList> {
    let mut edges = Vec::new();
    let mut dropped_malformed = 0;
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let Ok(line) = std::str::from_utf8(&buf) else {
            dropped_malformed += 1;
            continue;
        };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        match parse_line(line, columns) {
            Some(edge) => edges.push(edge),
            None => dropped_malformed += 1,
        }
    }
    let mut list = TemporalEdgeList::from_edges(edges)?;
    list.dropped_malformed = dropped_malformed;
    Ok(list)
}

/// Opens `path` and parses it, transparently decompressing gzip input.
pub fn read_edge_list(path: &Path, columns: &ColumnOrder) -> Result<TemporalEdgeList> {
    let mut file = BufReader::new(File::open(path)?);
    let is_gzip = file.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if is_gzip {
        parse_edge_list(BufReader::new(MultiGzDecoder::new(file)), columns)
    } else {
        parse_edge_list(file, columns)
    }
}

/// Same as [`parse_edge_list`] for an arbitrary reader that may hold gzip data.
pub fn parse_edge_list_maybe_gzip<R: Read>(
    reader: R,
    columns: &ColumnOrder,
) -> Result<TemporalEdgeList> {
    let mut reader = BufReader::new(reader);
    if reader.fill_buf()?.starts_with(&[0x1f, 0x8b]) {
        parse_edge_list(BufReader::new(MultiGzDecoder::new(reader)), columns)
    } else {
        parse_edge_list(reader, columns)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub drop_self_loops: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            drop_self_loops: true,
        }
    }
}

/// Discards direction, keeps parallel events, drops self-loops (by default).
pub fn preprocess(list: TemporalEdgeList, config: &PreprocessConfig) -> TemporalEdgeList {
    let TemporalEdgeList {
        edges,
        dropped_malformed,
        mut dropped_self_loops,
        ..
    } = list;
    let mut kept = Vec::with_capacity(edges.len());
    for e in edges {
        if config.drop_self_loops && e.is_self_loop() {
            dropped_self_loops += 1;
            continue;
        }
        kept.push(TemporalEdge {
            source: e.source.min(e.target),
            target: e.source.max(e.target),
            timestamp: e.timestamp,
        });
    }
    kept.sort_by_key(|e| e.timestamp);
    let node_count = count_nodes(&kept);
    TemporalEdgeList {
        edges: kept,
        node_count,
        dropped_malformed,
        dropped_self_loops,
    }
}

/// Cumulative edge-count cut points of `T` equal-size snapshots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotPlan {
    boundaries: Vec<usize>,
}

impl SnapshotPlan {
    /// Cumulative (1-based, inclusive) cut points; the last equals the edge total.
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn snapshot_count(&self) -> usize {
        self.boundaries.len()
    }

    pub fn total_edges(&self) -> usize {
        self.boundaries.last().copied().unwrap_or(0)
    }

    /// Index range into the sorted edge list for each snapshot.
    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let starts = std::iter::once(0).chain(self.boundaries.iter().copied());
        starts
            .zip(self.boundaries.iter().copied())
            .map(|(a, b)| a..b)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges().map(|r| r.len()).collect()
    }
}

/// Splits the sorted edge stream into `snapshots` intervals whose edge counts
/// differ by at most one. Remainder edges go to the earliest snapshots and
/// timestamp ties are split purely by position.
pub fn plan_snapshots(list: &TemporalEdgeList, snapshots: usize) -> Result<SnapshotPlan> {
    plan_for_count(list.len(), snapshots)
}

pub(crate) fn plan_for_count(edges: usize, snapshots: usize) -> Result<SnapshotPlan> {
    if snapshots < 1 {
        return Err(invalid("snapshot count must be at least 1"));
    }
    if edges == 0 {
        return Err(Error::EmptyNetwork);
    }
    if snapshots > edges {
        return Err(Error::SnapshotCount {
            requested: snapshots,
            edges,
        });
    }
    let base = edges / snapshots;
    let extra = edges % snapshots;
    let mut acc = 0;
    let boundaries = (0..snapshots)
        .map(|s| {
            acc += base + usize::from(s < extra);
            acc
        })
        .collect();
    Ok(SnapshotPlan { boundaries })
}

/// Preprocessing summary written alongside extraction outputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub edges: usize,
    pub nodes: usize,
    pub snapshots: usize,
    pub dropped_malformed: usize,
    pub dropped_self_loops: usize,
}

impl PreprocessReport {
    pub fn new(list: &TemporalEdgeList, plan: &SnapshotPlan) -> Self {
        PreprocessReport {
            edges: list.len(),
            nodes: list.node_count(),
            snapshots: plan.snapshot_count(),
            dropped_malformed: list.dropped_malformed,
            dropped_self_loops: list.dropped_self_loops,
        }
    }
}
