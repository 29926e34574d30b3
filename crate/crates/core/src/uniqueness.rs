//! Participant-subsampling check that `H` does not depend on who is in the network.
//!
//! For each `rho`, `rho` random subsets holding `1 - 1/rho` of the rows of
//! `M*` are factorized with the full run's settings and the subset `H` is
//! compared against the full-network `H` by normalized L1, normalized L2 and
//! cosine. Cells hold the mean over the `rho` trials.

use std::fmt;

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::factorize::{extract, NmfConfig};
use crate::influence::AlignedInfluenceMatrix;

pub const DEFAULT_RHOS: [usize; 3] = [5, 10, 20];

/// Uniform sample without replacement of `round(n * fraction)` row indices,
/// returned in ascending order.
pub fn subset_rows(n: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(invalid("subsampling needs at least two rows"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid(format!("fraction {fraction} outside (0, 1]")));
    }
    let amount = (n as f64 * fraction).round() as usize;
    if amount == 0 {
        return Err(invalid("subset would be empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = rand::seq::index::sample(&mut rng, n, amount).into_vec();
    rows.sort_unstable();
    Ok(rows)
}

/// Share of participants kept per trial.
pub fn rho_fraction(rho: usize) -> f64 {
    1.0 - 1.0 / rho as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HComparison {
    pub l1_normalized: f64,
    pub l2_normalized: f64,
    pub cosine: f64,
}

/// Distances between two equal-length patterns; `/T` normalization on the norms.
pub fn compare_h(a: &[f64], b: &[f64]) -> Result<HComparison> {
    if a.len() != b.len() || a.is_empty() {
        return Err(invalid(format!(
            "patterns must have equal nonzero length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateInput("zero pattern vector".into()));
    }
    let t = a.len() as f64;
    let l1 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let l2 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let dot = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    Ok(HComparison {
        l1_normalized: l1 / t,
        l2_normalized: l2 / t,
        cosine: (dot / (na * nb)).clamp(-1.0, 1.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measurement {
    L1Normalized,
    L2Normalized,
    Cosine,
}

impl Measurement {
    pub const ALL: [Measurement; 3] = [
        Measurement::L1Normalized,
        Measurement::L2Normalized,
        Measurement::Cosine,
    ];

    fn pick(self, c: &HComparison) -> f64 {
        match self {
            Measurement::L1Normalized => c.l1_normalized,
            Measurement::L2Normalized => c.l2_normalized,
            Measurement::Cosine => c.cosine,
        }
    }
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measurement::L1Normalized => "l1",
            Measurement::L2Normalized => "l2",
            Measurement::Cosine => "cosine",
        })
    }
}

/// Pass levels for the trial means; these are sanity gates, never fatal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonThresholds {
    pub l1_max: f64,
    pub l2_max: f64,
    pub cosine_min: f64,
}

impl Default for EpsilonThresholds {
    fn default() -> Self {
        EpsilonThresholds {
            l1_max: 7e-2,
            l2_max: 6e-3,
            cosine_min: 0.8,
        }
    }
}

impl EpsilonThresholds {
    fn passes(&self, m: Measurement, value: f64) -> bool {
        match m {
            Measurement::L1Normalized => value <= self.l1_max,
            Measurement::L2Normalized => value <= self.l2_max,
            Measurement::Cosine => value >= self.cosine_min,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessConfig {
    pub rhos: Vec<usize>,
    pub base_seed: u64,
    pub nmf: NmfConfig,
    pub thresholds: EpsilonThresholds,
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        UniquenessConfig {
            rhos: DEFAULT_RHOS.to_vec(),
            base_seed: crate::factorize::DEFAULT_SEED,
            nmf: NmfConfig::default(),
            thresholds: EpsilonThresholds::default(),
        }
    }
}

/// One subsampling trial.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetTrial {
    pub rho: usize,
    pub trial_index: usize,
    pub seed: u64,
    pub row_ids: Vec<usize>,
    pub h_subset: Array1<f64>,
}

/// Per-trial measurements kept in the report so cell means can be recomputed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub rho: usize,
    pub trial_index: usize,
    pub seed: u64,
    pub rows: usize,
    pub comparison: HComparison,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessCell {
    pub rho: usize,
    pub measurement: Measurement,
    pub mean: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub rhos: Vec<usize>,
    pub thresholds: EpsilonThresholds,
    pub cells: Vec<UniquenessCell>,
    pub trials: Vec<TrialRecord>,
}

impl UniquenessReport {
    pub fn cell(&self, rho: usize, measurement: Measurement) -> Option<&UniquenessCell> {
        self.cells
            .iter()
            .find(|c| c.rho == rho && c.measurement == measurement)
    }

    pub fn all_pass(&self) -> bool {
        self.cells.iter().all(|c| c.pass)
    }

    /// Cell means in the fixed order l1(rhos..), l2(rhos..), cosine(rhos..).
    pub fn table_row(&self) -> Vec<f64> {
        Measurement::ALL
            .iter()
            .flat_map(|&m| {
                self.rhos
                    .iter()
                    .map(move |&rho| self.cell(rho, m).map_or(f64::NAN, |c| c.mean))
            })
            .collect()
    }
}

/// Mean of one measurement over the trials of one `rho`, summed in trial order.
pub fn trial_mean(trials: &[TrialRecord], rho: usize, measurement: Measurement) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for t in trials.iter().filter(|t| t.rho == rho) {
        sum += measurement.pick(&t.comparison);
        count += 1;
    }
    sum / count as f64
}

/// Runs one subset trial: sample rows, factorize, return the leading `H` row.
pub fn run_trial(
    mstar: &AlignedInfluenceMatrix,
    rho: usize,
    trial_index: usize,
    config: &UniquenessConfig,
) -> Result<SubsetTrial> {
    let seed = config.base_seed ^ trial_index as u64;
    let row_ids = subset_rows(mstar.nodes(), rho_fraction(rho), seed)?;
    let sub = mstar.select_rows(&row_ids)?;
    let pair = extract(&sub, &config.nmf)?;
    Ok(SubsetTrial {
        rho,
        trial_index,
        seed,
        row_ids,
        h_subset: pair.leading_h(),
    })
}

/// Full uniqueness run against the `H` extracted from the whole of `mstar`.
pub fn run_uniqueness(
    mstar: &AlignedInfluenceMatrix,
    config: &UniquenessConfig,
) -> Result<UniquenessReport> {
    let full = extract(mstar, &config.nmf)?.leading_h();
    run_uniqueness_against(mstar, full.as_slice().expect("contiguous"), config)
}

/// As [`run_uniqueness`] with a precomputed full-network `H`.
pub fn run_uniqueness_against(
    mstar: &AlignedInfluenceMatrix,
    full_h: &[f64],
    config: &UniquenessConfig,
) -> Result<UniquenessReport> {
    if config.rhos.is_empty() || config.rhos.iter().any(|&r| r < 2) {
        return Err(invalid("every rho must be at least 2"));
    }
    let jobs: Vec<(usize, usize)> = config
        .rhos
        .iter()
        .flat_map(|&rho| (0..rho).map(move |i| (rho, i)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(rho, i)| {
            let trial = run_trial(mstar, rho, i, config)?;
            let comparison = compare_h(trial.h_subset.as_slice().expect("contiguous"), full_h)?;
            Ok(TrialRecord {
                rho,
                trial_index: i,
                seed: trial.seed,
                rows: trial.row_ids.len(),
                comparison,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::with_capacity(config.rhos.len() * 3);
    for &rho in &config.rhos {
        for m in Measurement::ALL {
            let mean = trial_mean(&trials, rho, m);
            cells.push(UniquenessCell {
                rho,
                measurement: m,
                mean,
                pass: config.thresholds.passes(m, mean),
            });
        }
    }
    Ok(UniquenessReport {
        rhos: config.rhos.clone(),
        thresholds: config.thresholds,
        cells,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn subset_size_and_determinism() {
        let rows = subset_rows(10, 0.8, 3).unwrap();
        assert_eq!(rows.len(), 8);
        let mut dedup = rows.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 8);
        assert_eq!(rows, subset_rows(10, 0.8, 3).unwrap());
        assert_eq!(rho_fraction(5), 0.8);
    }

    #[test]
    fn subset_errors() {
        assert!(subset_rows(1, 0.5, 0).is_err());
        assert!(subset_rows(10, 0.0, 0).is_err());
        assert!(subset_rows(10, 1.5, 0).is_err());
        assert!(subset_rows(2, 0.2, 0).is_err());
    }

    #[test]
    fn compare_identical_and_orthogonal() {
        let c = compare_h(&[0.6, 0.8], &[0.6, 0.8]).unwrap();
        assert_eq!((c.l1_normalized, c.l2_normalized), (0.0, 0.0));
        assert_abs_diff_eq!(c.cosine, 1.0, epsilon = 1e-15);
        let c = compare_h(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(c.l1_normalized, 1.0);
        assert_abs_diff_eq!(c.l2_normalized, 2f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_eq!(c.cosine, 0.0);
    }

    #[test]
    fn compare_errors() {
        assert!(matches!(
            compare_h(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(compare_h(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn table_scale_sanity() {
        // l2_normalized of 4.4e-5 at T = 400 is a difference of ~0.018 in L2.
        let t = 400;
        let a = vec![1.0 / (t as f64).sqrt(); t];
        let mut b = a.clone();
        b[0] += 0.0176;
        let c = compare_h(&a, &b).unwrap();
        assert_abs_diff_eq!(c.l2_normalized, 4.4e-5, epsilon = 1e-6);
    }

    #[test]
    fn rho_below_two_rejected() {
        let m = AlignedInfluenceMatrix::from_values(ndarray::Array2::ones((4, 3))).unwrap();
        let cfg = UniquenessConfig {
            rhos: vec![1],
            ..Default::default()
        };
        assert!(run_uniqueness(&m, &cfg).is_err());
    }

    proptest! {
        #[test]
        fn compare_is_symmetric(
            pair in (1usize..20).prop_flat_map(|n| (
                prop::collection::vec(0.0f64..1.0, n),
                prop::collection::vec(0.0f64..1.0, n),
            )),
            scale in 0.1f64..10.0,
        ) {
            let (a, b) = pair;
            prop_assume!(a.iter().any(|&x| x > 0.0) && b.iter().any(|&x| x > 0.0));
            let ab = compare_h(&a, &b).unwrap();
            let ba = compare_h(&b, &a).unwrap();
            prop_assert_eq!(ab.l1_normalized, ba.l1_normalized);
            prop_assert_eq!(ab.l2_normalized, ba.l2_normalized);
            prop_assert!((ab.cosine - ba.cosine).abs() < 1e-15);
            prop_assert!(ab.cosine >= 0.0 && ab.cosine <= 1.0);
            let scaled: Vec<f64> = a.iter().map(|x| x * scale).collect();
            let sc = compare_h(&scaled, &b).unwrap();
            prop_assert!((sc.cosine - ab.cosine).abs() < 1e-12);
        }
    }
}
