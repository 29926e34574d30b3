//! Planted `M* = W0 H0 (+ noise)` instances and an independent rank-1 oracle.
//!
//! Nothing here calls into [`crate::factorize`]; the oracle is a separate
//! power iteration on the explicitly formed Gram matrix.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::influence::AlignedInfluenceMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// Starts at its peak and decays exponentially.
    #[default]
    Decay,
    /// Rises quickly to a long plateau.
    Plateau,
    /// Two bumps of unequal height.
    Bimodal,
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decay" => Ok(Shape::Decay),
            "plateau" => Ok(Shape::Plateau),
            "bimodal" => Ok(Shape::Bimodal),
            _ => Err(invalid(format!("unknown shape `{s}`"))),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Decay => "decay",
            Shape::Plateau => "plateau",
            Shape::Bimodal => "bimodal",
        })
    }
}

/// Shape parameters; `scale` stretches the characteristic width, `shift`
/// moves features along the time axis.
#[derive(Clone, Copy, Debug)]
struct CurveParams {
    scale: f64,
    shift: f64,
}

fn curve(shape: Shape, t: usize, p: CurveParams) -> Vec<f64> {
    let denom = (t.max(2) - 1) as f64;
    (0..t)
        .map(|j| {
            let x = j as f64 / denom;
            match shape {
                Shape::Decay => (-x / (0.08 * p.scale)).exp() + 1e-3,
                Shape::Plateau => {
                    let rise = 1.0 - (-x / (0.04 * p.scale)).exp();
                    let fall = 1.0 / (1.0 + ((x - 0.8 - p.shift) / 0.05).exp());
                    rise * fall + 1e-3
                }
                Shape::Bimodal => {
                    let bump = |c: f64, h: f64| h * (-((x - c) / (0.07 * p.scale)).powi(2)).exp();
                    bump(0.2 + p.shift, 1.0) + bump(0.65 + p.shift, 0.6) + 1e-3
                }
            }
        })
        .collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Generation parameters for [`generate_planted`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub n: usize,
    pub t: usize,
    pub k: usize,
    pub shape: Shape,
    pub noise_level: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedInstance {
    pub w0: Array2<f64>,
    /// Unit-L2 rows.
    pub h0: Array2<f64>,
    pub mstar: AlignedInfluenceMatrix,
    pub spec: PlantedSpec,
}

/// Draws `W0` uniform in `[0.5, 1.5)`, builds `H0` from the shape family (one
/// row per role, role `r` stretched by `1 + r`), and adds uniform noise of
/// amplitude `noise_level * mean(W0 H0)`, clipped at zero.
pub fn generate_planted(spec: &PlantedSpec) -> Result<PlantedInstance> {
    let PlantedSpec { n, t, k, shape, .. } = *spec;
    if n == 0 || t == 0 {
        return Err(invalid("planted instance needs n, T >= 1"));
    }
    if k == 0 || k > n.min(t) {
        return Err(invalid(format!("rank {k} outside 1..={}", n.min(t))));
    }
    if !spec.noise_level.is_finite() || spec.noise_level < 0.0 {
        return Err(invalid("noise level must be a finite value >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let w0 = Array2::from_shape_simple_fn((n, k), || rng.gen_range(0.5..1.5));
    let mut h0 = Array2::zeros((k, t));
    for r in 0..k {
        let row = unit(curve(
            shape,
            t,
            CurveParams {
                scale: 1.0 + r as f64,
                shift: -0.1 * r as f64,
            },
        ));
        h0.row_mut(r).assign(&ndarray::Array1::from(row));
    }
    let mut m = w0.dot(&h0);
    if spec.noise_level > 0.0 {
        let amp = spec.noise_level * m.mean().unwrap_or(0.0);
        m.mapv_inplace(|v| (v + amp * rng.gen_range(-1.0..=1.0)).max(0.0));
    }
    Ok(PlantedInstance {
        w0,
        h0,
        mstar: AlignedInfluenceMatrix::from_values(m)?,
        spec: spec.clone(),
    })
}

/// `count` jittered members of one shape family, each of length `t`.
pub fn shape_family(shape: Shape, count: usize, t: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = CurveParams {
                scale: rng.gen_range(0.75..1.3),
                shift: rng.gen_range(-0.06..0.06),
            };
            let base = curve(shape, t, p);
            let peak = base.iter().copied().fold(0.0, f64::max);
            unit(
                base.into_iter()
                    .map(|v| (v + 0.01 * peak * rng.gen_range(-1.0..=1.0)).max(0.0))
                    .collect(),
            )
        })
        .collect()
}

/// Leading singular triple of a matrix plus the rank-1 residual.
#[derive(Clone, Debug, PartialEq)]
pub struct Rank1Oracle {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `||m - sigma u v^T||_F`.
    pub residual: f64,
}

/// Power iteration on the explicitly formed `m^T m`.
///
/// The residual is evaluated directly rather than as
/// `sqrt(||m||^2 - sigma^2)`, which loses half the digits when `m` is close
/// to rank 1.
pub fn svd_rank1_oracle(m: &Array2<f64>) -> Result<Rank1Oracle> {
    let (rows, cols) = m.dim();
    let data: Vec<Vec<f64>> = m.outer_iter().map(|r| r.to_vec()).collect();
    if data.iter().flatten().all(|&x| x == 0.0) {
        return Err(Error::DegenerateInput("zero matrix".into()));
    }
    let mut gram = vec![vec![0.0f64; cols]; cols];
    for row in &data {
        for a in 0..cols {
            if row[a] == 0.0 {
                continue;
            }
            for b in 0..cols {
                gram[a][b] += row[a] * row[b];
            }
        }
    }
    let mut v = vec![1.0 / (cols as f64).sqrt(); cols];
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let gv: Vec<f64> = gram
            .iter()
            .map(|g| g.iter().zip(&v).map(|(x, y)| x * y).sum())
            .collect();
        let next_lambda: f64 = gv.iter().zip(&v).map(|(x, y)| x * y).sum();
        let norm = gv.iter().map(|x| x * x).sum::<f64>().sqrt();
        let next: Vec<f64> = gv.iter().map(|x| x / norm).collect();
        let change = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        v = next;
        let settled = (next_lambda - lambda).abs() <= 1e-15 * next_lambda;
        lambda = next_lambda;
        if settled && change < 1e-13 {
            break;
        }
    }
    let mv: Vec<f64> = data
        .iter()
        .map(|r| r.iter().zip(&v).map(|(x, y)| x * y).sum())
        .collect();
    let sigma = mv.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u: Vec<f64> = mv.iter().map(|x| x / sigma).collect();
    let mut resid = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            resid += (data[i][j] - sigma * u[i] * v[j]).powi(2);
        }
    }
    Ok(Rank1Oracle {
        sigma,
        u,
        v,
        residual: resid.sqrt(),
    })
}
