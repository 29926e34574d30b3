//! Nonnegative factorization `M* ~ W H`.
//!
//! Rank 1 is solved exactly through the leading singular pair (power
//! iteration). For a nonnegative matrix the leading singular vectors can be
//! chosen entrywise nonnegative, so the nonnegativity constraint is inactive
//! and the result is the global minimizer of the Frobenius objective.
//! Rank `k > 1` uses Lee-Seung multiplicative updates.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::influence::AlignedInfluenceMatrix;

/// Stop when successive normalized `H` iterates differ by less than this (L2).
pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 10_000;

pub const DEFAULT_MAX_ITERATIONS: usize = 2000;
/// 0.01% relative change of the Frobenius objective.
pub const DEFAULT_REL_CHANGE_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_SEED: u64 = 0x5EED_0F1F;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NmfInit {
    #[default]
    Random,
    /// Nonnegative double SVD with zeros filled by the matrix mean.
    Nndsvd,
}

impl std::str::FromStr for NmfInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(NmfInit::Random),
            "nndsvd" => Ok(NmfInit::Nndsvd),
            _ => Err(invalid(format!("unknown initialization `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NmfConfig {
    pub k: usize,
    pub max_iterations: usize,
    pub rel_change_tolerance: f64,
    pub seed: u64,
    pub init: NmfInit,
}

impl Default for NmfConfig {
    fn default() -> Self {
        NmfConfig {
            k: 1,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            rel_change_tolerance: DEFAULT_REL_CHANGE_TOLERANCE,
            seed: DEFAULT_SEED,
            init: NmfInit::Random,
        }
    }
}

impl NmfConfig {
    pub fn with_rank(k: usize) -> Self {
        NmfConfig {
            k,
            ..Default::default()
        }
    }

    fn validate(&self, n: usize, t: usize) -> Result<()> {
        if self.k == 0 || self.k > n.min(t) {
            return Err(invalid(format!(
                "rank {} outside 1..={} for a {n}x{t} matrix",
                self.k,
                n.min(t)
            )));
        }
        if self.rel_change_tolerance.is_nan() || self.rel_change_tolerance <= 0.0 {
            return Err(invalid("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Nonnegative factors `W` (n x k) and `H` (k x T) with fit statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorPair {
    pub w: Array2<f64>,
    pub h: Array2<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

impl FactorPair {
    pub fn k(&self) -> usize {
        self.h.nrows()
    }

    /// The dominant role's pattern (row 0 of a canonical `H`).
    pub fn leading_h(&self) -> Array1<f64> {
        self.h.row(0).to_owned()
    }
}

fn frobenius(m: ArrayView2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `||M* - WH||_F / ||M*||_F`.
pub fn relative_residual(mstar: &Array2<f64>, w: &Array2<f64>, h: &Array2<f64>) -> Result<f64> {
    if w.nrows() != mstar.nrows() || h.ncols() != mstar.ncols() || w.ncols() != h.nrows() {
        return Err(invalid(format!(
            "factor shapes {:?} x {:?} do not match matrix {:?}",
            w.dim(),
            h.dim(),
            mstar.dim()
        )));
    }
    let norm = frobenius(mstar.view());
    if norm == 0.0 {
        return Err(Error::DegenerateInput("matrix is identically zero".into()));
    }
    let diff = mstar - &w.dot(h);
    Ok(frobenius(diff.view()) / norm)
}

fn ensure_nonzero(m: &Array2<f64>) -> Result<()> {
    if m.is_empty() || m.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateInput(
            "aligned influence matrix has no nonzero entry".into(),
        ));
    }
    Ok(())
}

/// Rank-1 factorization of `M*` via the leading right singular vector.
pub fn factor_rank1(mstar: &AlignedInfluenceMatrix) -> Result<FactorPair> {
    factor_rank1_values(mstar.values())
}

pub fn factor_rank1_values(m: &Array2<f64>) -> Result<FactorPair> {
    ensure_nonzero(m)?;
    let t = m.ncols();
    let mut h = Array1::from_elem(t, 1.0 / (t as f64).sqrt());
    let mut converged = false;
    let mut iterations = 0;
    while iterations < POWER_MAX_ITERATIONS {
        iterations += 1;
        let mut next = m.t().dot(&m.dot(&h));
        let norm = next.dot(&next).sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateInput(
                "power iteration collapsed to zero".into(),
            ));
        }
        next /= norm;
        let change = (&next - &h).dot(&(&next - &h)).sqrt();
        h = next;
        if change < POWER_TOLERANCE {
            converged = true;
            break;
        }
    }
    let w = m.dot(&h);
    let pair = FactorPair {
        w: w.insert_axis(Axis(1)),
        h: h.insert_axis(Axis(0)),
        iterations,
        relative_residual: 0.0,
        converged,
    };
    finish(m, canonicalize(pair)?)
}

fn finish(m: &Array2<f64>, mut pair: FactorPair) -> Result<FactorPair> {
    pair.relative_residual = relative_residual(m, &pair.w, &pair.h)?;
    Ok(pair)
}

/// Multiplicative-update NMF at rank `config.k`.
pub fn factor_rank_k(mstar: &AlignedInfluenceMatrix, config: &NmfConfig) -> Result<FactorPair> {
    factor_rank_k_values(mstar.values(), config).map(|(pair, _)| pair)
}

/// As [`factor_rank_k`], also returning the objective `||M - WH||_F^2` after
/// initialization and after every iteration.
pub fn factor_rank_k_values(m: &Array2<f64>, config: &NmfConfig) -> Result<(FactorPair, Vec<f64>)> {
    let (n, t) = m.dim();
    config.validate(n, t)?;
    ensure_nonzero(m)?;
    let (mut w, mut h) = match config.init {
        NmfInit::Random => random_init(m, config.k, config.seed),
        NmfInit::Nndsvd => nndsvd_init(m, config.k, config.seed),
    };

    let objective = |w: &Array2<f64>, h: &Array2<f64>| {
        let diff = m - &w.dot(h);
        diff.iter().map(|v| v * v).sum::<f64>()
    };
    let mut trace = vec![objective(&w, &h)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let numer = w.t().dot(m);
        let denom = w.t().dot(&w).dot(&h);
        multiplicative_step(&mut h, &numer, &denom);
        let numer = m.dot(&h.t());
        let denom = w.dot(&h.dot(&h.t()));
        multiplicative_step(&mut w, &numer, &denom);

        let prev = *trace.last().expect("trace starts non-empty");
        let cur = objective(&w, &h);
        trace.push(cur);
        if cur == 0.0 || (prev - cur) / prev < config.rel_change_tolerance {
            converged = true;
            break;
        }
    }

    let pair = FactorPair {
        w,
        h,
        iterations,
        relative_residual: 0.0,
        converged,
    };
    Ok((finish(m, canonicalize(pair)?)?, trace))
}

fn multiplicative_step(x: &mut Array2<f64>, numer: &Array2<f64>, denom: &Array2<f64>) {
    ndarray::Zip::from(x)
        .and(numer)
        .and(denom)
        .for_each(|x, &a, &b| {
            if b > 0.0 {
                *x *= a / b;
            }
        });
}

fn random_init(m: &Array2<f64>, k: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
    let (n, t) = m.dim();
    let scale = (m.mean().unwrap_or(0.0) / k as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Array2::from_shape_simple_fn((n, k), || scale * rng.gen::<f64>());
    let h = Array2::from_shape_simple_fn((k, t), || scale * rng.gen::<f64>());
    (w, h)
}

/// Leading singular triplets by deflated power iteration.
fn singular_triplets(m: &Array2<f64>, k: usize, seed: u64) -> Vec<(f64, Array1<f64>, Array1<f64>)> {
    let t = m.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found: Vec<(f64, Array1<f64>, Array1<f64>)> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut v = Array1::from_shape_simple_fn(t, || rng.gen::<f64>() + 0.5);
        let deflate = |v: &mut Array1<f64>, found: &[(f64, Array1<f64>, Array1<f64>)]| {
            for (_, _, prev) in found {
                let proj = prev.dot(v);
                v.scaled_add(-proj, prev);
            }
        };
        for _ in 0..500 {
            deflate(&mut v, &found);
            let norm = v.dot(&v).sqrt();
            if norm == 0.0 {
                break;
            }
            v /= norm;
            let next = m.t().dot(&m.dot(&v));
            let diff = &next / next.dot(&next).sqrt().max(f64::MIN_POSITIVE) - &v;
            v = next;
            if diff.dot(&diff).sqrt() < 1e-9 {
                break;
            }
        }
        deflate(&mut v, &found);
        let norm = v.dot(&v).sqrt();
        if norm > 0.0 {
            v /= norm;
        }
        let u = m.dot(&v);
        let sigma = u.dot(&u).sqrt();
        let u = if sigma > 0.0 { u / sigma } else { u };
        found.push((sigma, u, v));
    }
    found
}

fn nndsvd_init(m: &Array2<f64>, k: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
    let (n, t) = m.dim();
    let fill = m.mean().unwrap_or(0.0);
    let mut w = Array2::zeros((n, k));
    let mut h = Array2::zeros((k, t));
    for (r, (sigma, u, v)) in singular_triplets(m, k, seed).into_iter().enumerate() {
        let pos = |x: &Array1<f64>| x.mapv(|a| a.max(0.0));
        let neg = |x: &Array1<f64>| x.mapv(|a| (-a).max(0.0));
        let norm = |x: &Array1<f64>| x.dot(x).sqrt();
        let (up, un, vp, vn) = (pos(&u), neg(&u), pos(&v), neg(&v));
        let (mp, mn) = (norm(&up) * norm(&vp), norm(&un) * norm(&vn));
        let (uu, vv, mass) = if mp >= mn { (up, vp, mp) } else { (un, vn, mn) };
        let (nu, nv) = (norm(&uu), norm(&vv));
        if nu > 0.0 && nv > 0.0 {
            let s = (sigma * mass).sqrt();
            w.column_mut(r).assign(&(uu * (s / nu)));
            h.row_mut(r).assign(&(vv * (s / nv)));
        }
    }
    w.mapv_inplace(|x| if x == 0.0 { fill } else { x });
    h.mapv_inplace(|x| if x == 0.0 { fill } else { x });
    (w, h)
}

/// Scales each `H` row to unit L2 (pushing the scale into `W`) and orders
/// roles by descending `W` column norm. Leaves `W H` unchanged.
pub fn canonicalize(mut pair: FactorPair) -> Result<FactorPair> {
    let k = pair.h.nrows();
    for r in 0..k {
        let norm = pair.h.row(r).dot(&pair.h.row(r)).sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateFactor { row: r });
        }
        pair.h.row_mut(r).mapv_inplace(|x| x / norm);
        pair.w.column_mut(r).mapv_inplace(|x| x * norm);
    }
    let col_norms: Vec<f64> = pair
        .w
        .axis_iter(Axis(1))
        .map(|c| c.dot(&c).sqrt())
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| col_norms[b].total_cmp(&col_norms[a]));
    if order.iter().enumerate().any(|(i, &o)| i != o) {
        pair.h = pair.h.select(Axis(0), &order);
        pair.w = pair.w.select(Axis(1), &order);
    }
    Ok(pair)
}

/// Rank 1 goes through [`factor_rank1`]; higher ranks through multiplicative updates.
pub fn extract(mstar: &AlignedInfluenceMatrix, config: &NmfConfig) -> Result<FactorPair> {
    if config.k == 1 {
        config.validate(mstar.nodes(), mstar.snapshots())?;
        factor_rank1(mstar)
    } else {
        factor_rank_k(mstar, config)
    }
}
