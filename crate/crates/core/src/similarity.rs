//! Cross-network comparison of `H` patterns.
//!
//! DTW (and DTW averaged over the warping-path length) runs on min-max
//! normalized patterns so that offsets and scales do not dominate; cosine and
//! Euclidean comparisons use the unit-L2 canonical patterns directly.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A pattern mapped onto `[0, 1]`. Constant inputs map to all zeros with
/// `constant` set.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    pub constant: bool,
}

pub fn minmax_normalize(h: &[f64]) -> Result<Normalized> {
    if h.is_empty() {
        return Err(invalid("cannot normalize an empty pattern"));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(invalid("pattern contains non-finite values"));
    }
    let min = h.iter().copied().fold(f64::INFINITY, f64::min);
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range == 0.0 {
        return Ok(Normalized {
            values: vec![0.0; h.len()],
            constant: true,
        });
    }
    Ok(Normalized {
        values: h.iter().map(|v| (v - min) / range).collect(),
        constant: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtwResult {
    /// Minimal cumulative `|a_i - b_j|` cost.
    pub distance: f64,
    /// Cells on the reported optimal warping path.
    pub steps: usize,
    /// `distance / steps`.
    pub averaged: f64,
}

/// Unconstrained DTW with absolute-difference cost.
///
/// Among equally cheap paths, the backtrace prefers the diagonal move, then
/// the move that only advances `a`, then the move that only advances `b`; the
/// step count reported is that path's length.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<DtwResult> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("DTW needs two non-empty sequences"));
    }
    let (m, n) = (a.len(), b.len());
    let mut acc = vec![0.0f64; m * n];
    let at = |i: usize, j: usize| i * n + j;
    for i in 0..m {
        for j in 0..n {
            let cost = (a[i] - b[j]).abs();
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => acc[at(0, j - 1)],
                (_, 0) => acc[at(i - 1, 0)],
                _ => acc[at(i - 1, j - 1)]
                    .min(acc[at(i - 1, j)])
                    .min(acc[at(i, j - 1)]),
            };
            acc[at(i, j)] = cost + best;
        }
    }

    let (mut i, mut j) = (m - 1, n - 1);
    let mut steps = 1;
    while i > 0 || j > 0 {
        if i == 0 {
            j -= 1;
        } else if j == 0 {
            i -= 1;
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let down = acc[at(i - 1, j)];
            let right = acc[at(i, j - 1)];
            if diag <= down && diag <= right {
                i -= 1;
                j -= 1;
            } else if down <= right {
                i -= 1;
            } else {
                j -= 1;
            }
        }
        steps += 1;
    }
    let distance = acc[at(m - 1, n - 1)];
    Ok(DtwResult {
        distance,
        steps,
        averaged: distance / steps as f64,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityMeasure {
    Dtw,
    #[default]
    DtwAveraged,
    Cosine,
    Euclidean,
}

impl SimilarityMeasure {
    pub const ALL: [SimilarityMeasure; 4] = [
        SimilarityMeasure::Dtw,
        SimilarityMeasure::DtwAveraged,
        SimilarityMeasure::Cosine,
        SimilarityMeasure::Euclidean,
    ];

    pub fn is_distance(self) -> bool {
        self != SimilarityMeasure::Cosine
    }

    fn needs_equal_length(self) -> bool {
        matches!(
            self,
            SimilarityMeasure::Cosine | SimilarityMeasure::Euclidean
        )
    }
}

impl FromStr for SimilarityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dtw" => Ok(SimilarityMeasure::Dtw),
            "dtw-avg" | "dtw-averaged" => Ok(SimilarityMeasure::DtwAveraged),
            "cosine" => Ok(SimilarityMeasure::Cosine),
            "euclidean" => Ok(SimilarityMeasure::Euclidean),
            _ => Err(invalid(format!("unknown similarity measure `{s}`"))),
        }
    }
}

impl fmt::Display for SimilarityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityMeasure::Dtw => "dtw",
            SimilarityMeasure::DtwAveraged => "dtw-avg",
            SimilarityMeasure::Cosine => "cosine",
            SimilarityMeasure::Euclidean => "euclidean",
        })
    }
}

/// A labelled network pattern. `h` is rescaled to unit L2 on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub category: String,
    pub h: Vec<f64>,
}

impl CorpusEntry {
    pub fn new(name: impl Into<String>, category: impl Into<String>, h: Vec<f64>) -> Result<Self> {
        Ok(CorpusEntry {
            name: name.into(),
            category: category.into(),
            h: unit_l2(h)?,
        })
    }
}

fn unit_l2(mut h: Vec<f64>) -> Result<Vec<f64>> {
    if h.is_empty() || h.iter().any(|v| !v.is_finite()) {
        return Err(invalid("pattern must be non-empty and finite"));
    }
    let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateInput("zero pattern vector".into()));
    }
    h.iter_mut().for_each(|x| *x /= norm);
    Ok(h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub labels: Vec<String>,
    pub measure: SimilarityMeasure,
    pub values: Array2<f64>,
}

/// Measure between two prepared patterns (min-max for DTW measures, unit-L2 otherwise).
fn measure_between(measure: SimilarityMeasure, a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(match measure {
        SimilarityMeasure::Dtw => dtw_distance(a, b)?.distance,
        SimilarityMeasure::DtwAveraged => dtw_distance(a, b)?.averaged,
        SimilarityMeasure::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            (dot / (na * nb)).clamp(-1.0, 1.0)
        }
        SimilarityMeasure::Euclidean => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt(),
    })
}

/// Min-max for the DTW measures; `unit` is already unit-L2.
fn prepare(measure: SimilarityMeasure, unit: &[f64]) -> Result<Vec<f64>> {
    match measure {
        SimilarityMeasure::Dtw | SimilarityMeasure::DtwAveraged => {
            Ok(minmax_normalize(unit)?.values)
        }
        _ => Ok(unit.to_vec()),
    }
}

pub fn pairwise_similarity(
    corpus: &[CorpusEntry],
    measure: SimilarityMeasure,
) -> Result<SimilarityMatrix> {
    if corpus.len() < 2 {
        return Err(invalid("pairwise comparison needs at least two entries"));
    }
    if measure.needs_equal_length() {
        let t = corpus[0].h.len();
        if let Some(e) = corpus.iter().find(|e| e.h.len() != t) {
            return Err(invalid(format!(
                "{measure} needs equal-length patterns; `{}` has {} values, expected {t}",
                e.name,
                e.h.len()
            )));
        }
    }
    let prepared = corpus
        .iter()
        .map(|e| prepare(measure, &e.h))
        .collect::<Result<Vec<_>>>()?;
    let n = corpus.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let scores = pairs
        .par_iter()
        .map(|&(i, j)| measure_between(measure, &prepared[i], &prepared[j]))
        .collect::<Result<Vec<_>>>()?;
    let diag = if measure.is_distance() { 0.0 } else { 1.0 };
    let mut values = Array2::from_elem((n, n), 0.0);
    for i in 0..n {
        values[[i, i]] = diag;
    }
    for (&(i, j), &s) in pairs.iter().zip(&scores) {
        values[[i, j]] = s;
        values[[j, i]] = s;
    }
    Ok(SimilarityMatrix {
        labels: corpus.iter().map(|e| e.name.clone()).collect(),
        measure,
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub name: String,
    pub category: String,
    /// Dissimilarity used for ranking (`1 - cosine` for the cosine measure).
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub predicted: String,
    pub measure: SimilarityMeasure,
    pub neighbors: Vec<Neighbor>,
}

/// 1-nearest-neighbour domain prediction; ties go to the earlier corpus entry.
pub fn classify_domain(
    corpus: &[CorpusEntry],
    unknown: &[f64],
    measure: SimilarityMeasure,
) -> Result<Classification> {
    if corpus.is_empty() {
        return Err(invalid("classification needs a non-empty labelled corpus"));
    }
    if let Some(e) = corpus.iter().find(|e| e.category.is_empty()) {
        return Err(invalid(format!(
            "corpus entry `{}` has no category",
            e.name
        )));
    }
    if measure.needs_equal_length() {
        if let Some(e) = corpus.iter().find(|e| e.h.len() != unknown.len()) {
            return Err(invalid(format!(
                "{measure} needs equal-length patterns; `{}` differs from the query",
                e.name
            )));
        }
    }
    let query = prepare(measure, &unit_l2(unknown.to_vec())?)?;
    let distances = corpus
        .par_iter()
        .map(|e| {
            let s = measure_between(measure, &prepare(measure, &e.h)?, &query)?;
            Ok(if measure.is_distance() { s } else { 1.0 - s })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut neighbors: Vec<Neighbor> = corpus
        .iter()
        .zip(distances)
        .map(|(e, distance)| Neighbor {
            name: e.name.clone(),
            category: e.category.clone(),
            distance,
        })
        .collect();
    neighbors.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    Ok(Classification {
        predicted: neighbors[0].category.clone(),
        measure,
        neighbors,
    })
}
