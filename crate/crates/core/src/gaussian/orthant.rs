//! Orthant probabilities `P(Y ≥ 0)` of centered normal vectors.
//!
//! Dimensions up to three use the arcsine formulas. Larger problems use
//! Genz's separation-of-variables transform integrated with randomly shifted,
//! baker-transformed rank-1 lattice rules.

use std::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::normal::{ppnd16, std_normal_cdf};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, Matrix, MAX_CONE_DIM};

/// Seed used when the caller does not supply one.
pub const DEFAULT_QMC_SEED: u64 = 0x6f72_7468_616e_7421;

/// Independent random shifts per estimate.
pub const QMC_RANDOMIZATIONS: usize = 25;

/// Lattice points per shift.
pub const QMC_POINTS: usize = 1 << 13;

/// Variances at or below this value are treated as degenerate at zero.
const ZERO_VARIANCE: f64 = 1e-12;

/// Orthant probability with the standard error of its estimator (zero for
/// closed forms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantEstimate {
    pub probability: f64,
    pub std_error: f64,
}

impl OrthantEstimate {
    fn exact(probability: f64) -> Self {
        Self {
            probability,
            std_error: 0.0,
        }
    }
}

/// `P(Y ≥ 0)` for `Y ~ N(0, cov)`, using [`DEFAULT_QMC_SEED`] when sampling.
pub fn orthant_probability(cov: &Matrix) -> Result<OrthantEstimate> {
    orthant_probability_with_seed(cov, DEFAULT_QMC_SEED)
}

pub fn orthant_probability_with_seed(cov: &Matrix, seed: u64) -> Result<OrthantEstimate> {
    let corr = normalize(cov)?;
    let m = corr.rows();
    let r = |i: usize, j: usize| corr.get(i, j).clamp(-1.0, 1.0).asin();
    Ok(match m {
        0 => OrthantEstimate::exact(1.0),
        1 => OrthantEstimate::exact(0.5),
        2 => OrthantEstimate::exact(0.25 + r(0, 1) / (2.0 * PI)),
        3 => OrthantEstimate::exact(0.125 + (r(0, 1) + r(0, 2) + r(1, 2)) / (4.0 * PI)),
        _ => qmc(&corr, seed)?,
    })
}

/// Always integrates numerically, whatever the dimension. Exposed so the
/// sampler can be checked against the closed forms.
pub fn orthant_probability_qmc(cov: &Matrix, seed: u64) -> Result<OrthantEstimate> {
    let corr = normalize(cov)?;
    if corr.rows() == 0 {
        return Ok(OrthantEstimate::exact(1.0));
    }
    qmc(&corr, seed)
}

/// Drops zero-variance coordinates (they are `≥ 0` almost surely) and
/// rescales the rest to unit variance.
fn normalize(cov: &Matrix) -> Result<Matrix> {
    if !cov.is_square() {
        return invalid(format!("covariance must be square, got {}x{}", cov.rows(), cov.cols()));
    }
    if cov.rows() > MAX_CONE_DIM {
        return Err(Error::Capacity {
            dim: cov.rows(),
            max: MAX_CONE_DIM,
        });
    }
    let scale = (0..cov.rows()).map(|i| cov.get(i, i).abs()).fold(1.0, f64::max);
    if !cov.is_symmetric(1e-12 * scale) {
        return invalid("covariance must be symmetric");
    }
    let mut keep = Vec::new();
    for i in 0..cov.rows() {
        let v = cov.get(i, i);
        if v < -ZERO_VARIANCE * scale {
            return invalid(format!("negative variance {v} at coordinate {}", i + 1));
        }
        if v > ZERO_VARIANCE * scale {
            keep.push(i);
        }
    }
    let sd: Vec<f64> = keep.iter().map(|&i| cov.get(i, i).sqrt()).collect();
    let corr = Matrix::from_fn(keep.len(), keep.len(), |a, b| {
        if a == b {
            1.0
        } else {
            cov.get(keep[a], keep[b]) / (sd[a] * sd[b])
        }
    });
    semidefinite_cholesky(&corr)?;
    Ok(corr)
}

/// Cholesky factor of a positive semidefinite matrix; columns with a
/// vanishing pivot are left zero.
fn semidefinite_cholesky(m: &Matrix) -> Result<Matrix> {
    const PIVOT_FLOOR: f64 = 1e-10;
    let n = m.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let pivot = m.get(j, j) - dot(&l.row(j)[..j], &l.row(j)[..j]);
        if pivot < -PIVOT_FLOOR {
            return invalid(format!(
                "covariance is not positive semidefinite (pivot {pivot:e} at order {})",
                j + 1
            ));
        }
        if pivot <= PIVOT_FLOOR {
            continue;
        }
        let ljj = pivot.sqrt();
        l.set(j, j, ljj);
        for i in j + 1..n {
            let s = m.get(i, j) - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l.set(i, j, s / ljj);
        }
    }
    Ok(l)
}

/// Generating vector of an embedded base-2 lattice sequence (Cools, Kuo and
/// Nuyens), reduced modulo the point count.
const GENERATOR: [u64; MAX_CONE_DIM] = [
    1, 182_667, 469_891, 498_753, 110_745, 446_247, 250_185, 118_627, 245_333, 283_199, 408_519, 391_023,
];

fn qmc(corr: &Matrix, seed: u64) -> Result<OrthantEstimate> {
    let l = semidefinite_cholesky(corr)?;
    let m = l.rows();
    // The last variable's integral is the closed-form factor Φ(b_m).
    let dims = m - 1;
    let generator: Vec<u64> = GENERATOR[..dims].iter().map(|z| z % QMC_POINTS as u64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);

    let mut means = Vec::with_capacity(QMC_RANDOMIZATIONS);
    let mut y = vec![0.0; m];
    let mut w = vec![0.0; dims];
    for _ in 0..QMC_RANDOMIZATIONS {
        let shift: Vec<f64> = (0..dims).map(|_| unit(&mut rng)).collect();
        let mut sum = 0.0;
        for n in 0..QMC_POINTS as u64 {
            for k in 0..dims {
                let base = (n * generator[k] % QMC_POINTS as u64) as f64 / QMC_POINTS as f64;
                let x = (base + shift[k]).fract();
                w[k] = 1.0 - (2.0 * x - 1.0).abs();
            }
            sum += sov_integrand(&l, &w, &mut y);
        }
        means.push(sum / QMC_POINTS as f64);
    }
    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(OrthantEstimate {
        probability: mean,
        std_error: (var / k).sqrt(),
    })
}

/// Genz's transformed integrand for `P(L·ε ≤ 0)`, which equals `P(Y ≥ 0)` by
/// symmetry.
fn sov_integrand(l: &Matrix, w: &[f64], y: &mut [f64]) -> f64 {
    let m = l.rows();
    let mut value = 1.0;
    for k in 0..m {
        let s = dot(&l.row(k)[..k], &y[..k]);
        let ljj = l.get(k, k);
        let e = if ljj > 0.0 {
            std_normal_cdf(-s / ljj)
        } else if s <= 0.0 {
            1.0
        } else {
            0.0
        };
        value *= e;
        if value == 0.0 {
            return 0.0;
        }
        if k < w.len() {
            let u = (w[k] * e).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            y[k] = if ljj > 0.0 { ppnd16(u) } else { 0.0 };
        }
    }
    value
}
