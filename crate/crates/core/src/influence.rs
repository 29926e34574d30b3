//! Influence-increment matrix `M` and its first-occurrence alignment `M*`.
//!
//! Rows are participants, columns are snapshots `1..=T`. Entry `(i, t)` is the
//! increase of the node's influence score over snapshot `t`, divided by the
//! number of nodes present when `i` first appeared. Degree and path metrics
//! are tracked with per-node counters; no `n x n` degree matrices are built.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ingest::{NodeId, SnapshotPlan, TemporalEdgeList};

/// Per-node influence score evaluated on the cumulative graph after each snapshot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfluenceMetric {
    /// Degree with parallel-edge multiplicity.
    #[default]
    Degree,
    WeightedDegree,
    /// Wasserman-Faust closeness on the collapsed simple graph.
    Closeness,
    /// Unnormalized Brandes betweenness on the collapsed simple graph.
    Betweenness,
}

impl FromStr for InfluenceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree" => Ok(InfluenceMetric::Degree),
            "weighted-degree" => Ok(InfluenceMetric::WeightedDegree),
            "closeness" => Ok(InfluenceMetric::Closeness),
            "betweenness" => Ok(InfluenceMetric::Betweenness),
            _ => Err(invalid(format!("unknown influence metric `{s}`"))),
        }
    }
}

impl fmt::Display for InfluenceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InfluenceMetric::Degree => "degree",
            InfluenceMetric::WeightedDegree => "weighted-degree",
            InfluenceMetric::Closeness => "closeness",
            InfluenceMetric::Betweenness => "betweenness",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceMatrix {
    values: Array2<f64>,
    node_ids: Vec<NodeId>,
    t0: Vec<usize>,
    n_i: Vec<usize>,
    metric: InfluenceMetric,
    clipped_negative: usize,
}

impl InfluenceMatrix {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.node_ids
    }

    /// First-occurrence snapshot per row, 1-based.
    pub fn t0(&self) -> &[usize] {
        &self.t0
    }

    pub fn n_i(&self) -> &[usize] {
        &self.n_i
    }

    pub fn metric(&self) -> InfluenceMetric {
        self.metric
    }

    /// Number of negative increments clamped to zero (path metrics only).
    pub fn clipped_negative(&self) -> usize {
        self.clipped_negative
    }

    pub fn nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn snapshots(&self) -> usize {
        self.values.ncols()
    }

    /// Per-snapshot `sum_i n_i * M[i, t]` with each term rounded back to the
    /// integer degree increment it came from. Only meaningful for the degree
    /// metric, where it must equal twice the snapshot's edge events.
    pub fn degree_increment_sums(&self) -> Vec<u64> {
        self.values
            .axis_iter(Axis(1))
            .map(|col| {
                col.iter()
                    .zip(&self.n_i)
                    .map(|(&v, &n)| (v * n as f64).round() as u64)
                    .sum()
            })
            .collect()
    }
}

struct RowIndex {
    index: HashMap<NodeId, usize>,
    node_ids: Vec<NodeId>,
    t0: Vec<usize>,
    n_i: Vec<usize>,
}

impl RowIndex {
    /// Assigns rows in order of first appearance and fixes `t0` and `n_i`
    /// (distinct nodes after the first-occurrence snapshot is applied).
    fn build(edges: &TemporalEdgeList, plan: &SnapshotPlan) -> Self {
        let mut index = HashMap::new();
        let mut node_ids = Vec::new();
        let mut t0 = Vec::new();
        let mut n_i = Vec::new();
        for (s, range) in plan.ranges().enumerate() {
            let first_new = node_ids.len();
            for e in &edges.edges()[range] {
                for id in [e.source, e.target] {
                    index.entry(id).or_insert_with(|| {
                        node_ids.push(id);
                        t0.push(s + 1);
                        node_ids.len() - 1
                    });
                }
            }
            let present = node_ids.len();
            n_i.extend(std::iter::repeat_n(present, present - first_new));
        }
        RowIndex {
            index,
            node_ids,
            t0,
            n_i,
        }
    }
}

/// Builds `M` over the snapshots of `plan`.
pub fn compute_influence_matrix(
    edges: &TemporalEdgeList,
    plan: &SnapshotPlan,
    metric: InfluenceMetric,
) -> Result<InfluenceMatrix> {
    if plan.total_edges() != edges.len() {
        return Err(invalid(format!(
            "snapshot plan covers {} edges but list has {}",
            plan.total_edges(),
            edges.len()
        )));
    }
    let rows = RowIndex::build(edges, plan);
    let n = rows.node_ids.len();
    let t_max = plan.snapshot_count();
    let mut values = Array2::<f64>::zeros((n, t_max));
    let mut clipped_negative = 0;

    match metric {
        InfluenceMetric::Degree => {
            let mut inc = vec![0u64; n];
            let mut touched = Vec::new();
            for (s, range) in plan.ranges().enumerate() {
                for e in &edges.edges()[range] {
                    for id in [e.source, e.target] {
                        let r = rows.index[&id];
                        if inc[r] == 0 {
                            touched.push(r);
                        }
                        inc[r] += 1;
                    }
                }
                for r in touched.drain(..) {
                    values[[r, s]] = inc[r] as f64 / rows.n_i[r] as f64;
                    inc[r] = 0;
                }
            }
        }
        InfluenceMetric::WeightedDegree => {
            return Err(Error::Unsupported(
                "weighted-degree needs edge weights; temporal edge lists are unweighted".into(),
            ));
        }
        InfluenceMetric::Closeness | InfluenceMetric::Betweenness => {
            let mut graph = SimpleGraph::new(n);
            let mut prev = vec![0.0f64; n];
            for (s, range) in plan.ranges().enumerate() {
                for e in &edges.edges()[range] {
                    graph.add_edge(rows.index[&e.source], rows.index[&e.target]);
                }
                let present = graph.present();
                let score = match metric {
                    InfluenceMetric::Closeness => closeness(&graph, present),
                    _ => betweenness(&graph, present),
                };
                for r in 0..present {
                    let delta = (score[r] - prev[r]) / rows.n_i[r] as f64;
                    if delta < 0.0 {
                        clipped_negative += 1;
                    } else {
                        values[[r, s]] = delta;
                    }
                }
                prev[..present].copy_from_slice(&score);
            }
        }
    }

    Ok(InfluenceMatrix {
        values,
        node_ids: rows.node_ids,
        t0: rows.t0,
        n_i: rows.n_i,
        metric,
        clipped_negative,
    })
}

/// Cumulative simple graph over rows `0..present`; rows appear in index order.
struct SimpleGraph {
    adj: Vec<Vec<usize>>,
    seen: HashSet<(usize, usize)>,
    present: usize,
}

impl SimpleGraph {
    fn new(n: usize) -> Self {
        SimpleGraph {
            adj: vec![Vec::new(); n],
            seen: HashSet::new(),
            present: 0,
        }
    }

    fn add_edge(&mut self, a: usize, b: usize) {
        self.present = self.present.max(a + 1).max(b + 1);
        if a == b || !self.seen.insert((a.min(b), a.max(b))) {
            return;
        }
        self.adj[a].push(b);
        self.adj[b].push(a);
    }

    fn present(&self) -> usize {
        self.present
    }
}

fn bfs_distances(graph: &SimpleGraph, source: usize, dist: &mut [usize]) -> (usize, usize) {
    dist.fill(usize::MAX);
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    let (mut reached, mut total) = (0usize, 0usize);
    while let Some(u) = queue.pop_front() {
        for &v in &graph.adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                reached += 1;
                total += dist[v];
                queue.push_back(v);
            }
        }
    }
    (reached, total)
}

fn closeness(graph: &SimpleGraph, present: usize) -> Vec<f64> {
    (0..present)
        .into_par_iter()
        .map_init(
            || vec![0usize; present],
            |dist, u| {
                let (reached, total) = bfs_distances(graph, u, dist);
                if total == 0 || present < 2 {
                    return 0.0;
                }
                let r = reached as f64;
                (r / total as f64) * (r / (present - 1) as f64)
            },
        )
        .collect()
}

const BETWEENNESS_CHUNK: usize = 64;

fn betweenness(graph: &SimpleGraph, present: usize) -> Vec<f64> {
    // Fixed-size source chunks summed in chunk order keep the result
    // independent of the thread count.
    let sources: Vec<usize> = (0..present).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(BETWEENNESS_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; present];
            let mut state = BrandesState::new(present);
            for &s in chunk {
                state.accumulate(graph, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; present];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    // Each undirected pair is counted from both ends.
    total.iter_mut().for_each(|v| *v /= 2.0);
    total
}

struct BrandesState {
    sigma: Vec<f64>,
    dist: Vec<i64>,
    delta: Vec<f64>,
    preds: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl BrandesState {
    fn new(n: usize) -> Self {
        BrandesState {
            sigma: vec![0.0; n],
            dist: vec![-1; n],
            delta: vec![0.0; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
        }
    }

    fn accumulate(&mut self, graph: &SimpleGraph, s: usize, acc: &mut [f64]) {
        self.sigma.fill(0.0);
        self.dist.fill(-1);
        self.delta.fill(0.0);
        self.preds.iter_mut().for_each(Vec::clear);
        self.order.clear();

        self.sigma[s] = 1.0;
        self.dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            self.order.push(v);
            for &w in &graph.adj[v] {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }
        for &w in self.order.iter().rev() {
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] / self.sigma[w] * (1.0 + self.delta[w]);
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}

/// `M*`: each row shifted left so its first-occurrence increment sits in column 1.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedInfluenceMatrix {
    values: Array2<f64>,
    node_ids: Vec<NodeId>,
    t0: Vec<usize>,
    n_i: Vec<usize>,
}

impl AlignedInfluenceMatrix {
    /// Wraps an already-aligned matrix, validating shape and nonnegativity.
    pub fn from_parts(
        values: Array2<f64>,
        node_ids: Vec<NodeId>,
        t0: Vec<usize>,
        n_i: Vec<usize>,
    ) -> Result<Self> {
        let n = values.nrows();
        if node_ids.len() != n || t0.len() != n || n_i.len() != n {
            return Err(invalid("row metadata length does not match matrix rows"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid(format!(
                "aligned influence entries must be finite and nonnegative, found {bad}"
            )));
        }
        if t0.iter().any(|&t| t == 0 || t > values.ncols().max(1)) {
            return Err(invalid("t0 must lie in 1..=T"));
        }
        Ok(AlignedInfluenceMatrix {
            values,
            node_ids,
            t0,
            n_i,
        })
    }

    /// Treats a bare nonnegative matrix as `M*` with rows labelled `0..n`,
    /// `t0 = 1` and unit normalizers.
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        let n = values.nrows();
        Self::from_parts(
            values,
            (0..n as u64).map(NodeId).collect(),
            vec![1; n],
            vec![1; n],
        )
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.node_ids
    }

    pub fn t0(&self) -> &[usize] {
        &self.t0
    }

    pub fn n_i(&self) -> &[usize] {
        &self.n_i
    }

    pub fn nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn snapshots(&self) -> usize {
        self.values.ncols()
    }

    /// Row subset in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.nodes()) {
            return Err(invalid(format!("row {r} out of range")));
        }
        Ok(AlignedInfluenceMatrix {
            values: self.values.select(Axis(0), rows),
            node_ids: rows.iter().map(|&r| self.node_ids[r]).collect(),
            t0: rows.iter().map(|&r| self.t0[r]).collect(),
            n_i: rows.iter().map(|&r| self.n_i[r]).collect(),
        })
    }

    /// Shifts every row back right by `t0 - 1`, reproducing the unaligned `M`.
    pub fn unalign(&self) -> Array2<f64> {
        let t_max = self.snapshots();
        let mut out = Array2::zeros(self.values.raw_dim());
        for (i, row) in self.values.outer_iter().enumerate() {
            let shift = self.t0[i] - 1;
            for j in 0..t_max - shift {
                out[[i, j + shift]] = row[j];
            }
        }
        out
    }
}

/// Aligns `M` so that aligned column 1 holds `M[i, t0(i)]`; vacated columns
/// on the right are zero.
pub fn align_matrix(m: &InfluenceMatrix) -> AlignedInfluenceMatrix {
    let t_max = m.snapshots();
    let mut values = Array2::zeros(m.values.raw_dim());
    for (i, row) in m.values.outer_iter().enumerate() {
        let shift = m.t0[i] - 1;
        for j in 0..t_max - shift {
            values[[i, j]] = row[j + shift];
        }
    }
    AlignedInfluenceMatrix {
        values,
        node_ids: m.node_ids.clone(),
        t0: m.t0.clone(),
        n_i: m.n_i.clone(),
    }
}
