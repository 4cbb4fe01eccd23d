//! Gaussian ingredients of the tail formulas.
//!
//! For `Z ~ N(0, Σ)` the joint exceedance `P(Z ≥ u·1 + z)` decays like
//! `Υ(Σ)·u^{−|I|}·exp(−γu²/2 − zᵀΣ⁻¹e*)` where `γ, e*, I, h` come from
//! [`solve_qp`](crate::qp::solve_qp) and
//!
//! ```text
//! Υ(Σ) = P(Y_K ≥ 0) / ((2π)^{|I|/2} |Σ_I|^{1/2} Π_{i∈I} h_i)
//! ```
//!
//! with `Y ~ N(0, Σ_J − Σ_JI Σ_I⁻¹ Σ_IJ)` and `K ⊆ J` the coordinates where
//! `e*` touches the constraint.

mod normal;
mod orthant;

use std::f64::consts::PI;

use log::warn;

pub(crate) use normal::ppnd16;
pub use normal::{
    log_std_normal_sf, std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_quantile_upper, std_normal_sf,
    INV_SQRT_2PI,
};
pub use orthant::{
    orthant_probability, orthant_probability_qmc, orthant_probability_with_seed, OrthantEstimate, DEFAULT_QMC_SEED,
    QMC_POINTS, QMC_RANDOMIZATIONS,
};

use crate::error::{invalid, Error, Result};
use crate::linalg::{solve_spd, spd_factorize, submatrix, CorrelationMatrix, IndexSubset, Matrix};
use crate::qp::{solve_qp, QpSolution};

/// The constant `Υ(Σ)` and its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct UpsilonResult {
    pub upsilon: f64,
    pub log_upsilon: f64,
    /// `P(Y_K ≥ 0)`, one when `K` is empty.
    pub orthant_factor: f64,
    /// Standard error of `orthant_factor`; zero for closed forms.
    pub orthant_std_error: f64,
    /// Inactive coordinates with `e*_j = 1`.
    pub boundary_set: IndexSubset,
}

/// Computes `Υ(Σ)` for the solution `sol` of `sigma`'s quadratic program.
pub fn upsilon(sigma: &CorrelationMatrix, sol: &QpSolution) -> Result<UpsilonResult> {
    upsilon_with_seed(sigma, sol, DEFAULT_QMC_SEED)
}

/// As [`upsilon`], seeding the orthant integrator when `|K| ≥ 4`.
pub fn upsilon_with_seed(sigma: &CorrelationMatrix, sol: &QpSolution, seed: u64) -> Result<UpsilonResult> {
    let d = sigma.dim();
    if sol.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: sol.dim(),
        });
    }
    let m = sigma.as_matrix();
    let active = &sol.active;
    let fact = spd_factorize(&submatrix(m, active, active)?)?;
    let boundary = sol.boundary_set();

    let orthant = if boundary.is_empty() {
        OrthantEstimate {
            probability: 1.0,
            std_error: 0.0,
        }
    } else {
        let cross = submatrix(m, &boundary, active)?;
        let solved: Vec<Vec<f64>> = (0..boundary.len())
            .map(|k| solve_spd(&fact, cross.row(k)))
            .collect::<Result<_>>()?;
        let cond = Matrix::from_fn(boundary.len(), boundary.len(), |a, b| {
            let reduction: f64 = cross.row(a).iter().zip(&solved[b]).map(|(x, y)| x * y).sum();
            m.get(boundary.members()[a], boundary.members()[b]) - reduction
        });
        // Exact symmetry for the orthant routine.
        let cond = Matrix::from_fn(cond.rows(), cond.cols(), |a, b| 0.5 * (cond.get(a, b) + cond.get(b, a)));
        orthant_probability_with_seed(&cond, seed)?
    };

    let log_upsilon = orthant.probability.ln()
        - 0.5 * active.len() as f64 * (2.0 * PI).ln()
        - 0.5 * fact.log_det()
        - sol.h.iter().map(|h| h.ln()).sum::<f64>();
    Ok(UpsilonResult {
        upsilon: log_upsilon.exp(),
        log_upsilon,
        orthant_factor: orthant.probability,
        orthant_std_error: orthant.std_error,
        boundary_set: boundary,
    })
}

/// `log` of `Υ(Σ)·u^{−|I|}·exp(−γu²/2 − Σ_{i∈I} z_i h_i)`, the asymptotic
/// value of `log P(Z ≥ u·1 + z)` as `u → ∞`.
pub fn gaussian_joint_tail(sigma: &CorrelationMatrix, u: f64, z_shift: &[f64]) -> Result<f64> {
    if z_shift.len() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            found: z_shift.len(),
        });
    }
    if !(u > 0.0 && u.is_finite()) || z_shift.iter().any(|z| !z.is_finite()) {
        return invalid(format!("level u = {u} must be positive and shifts finite"));
    }
    if u < 3.0 {
        warn!("Gaussian tail asymptotic evaluated at u = {u} < 3");
    }
    let sol = solve_qp(sigma)?;
    let ups = upsilon(sigma, &sol)?;
    let shift: f64 = sol.active.iter().zip(&sol.h).map(|(i, h)| z_shift[i] * h).sum();
    Ok(ups.log_upsilon - sol.active.len() as f64 * u.ln() - 0.5 * sol.gamma * u * u - shift)
}

/// Parameters of the normal-score expansion for a regularly varying margin
/// with `F̄(s) = 1/(c·s^α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileExpansion {
    pub alpha: f64,
    pub scale_c: f64,
    pub x: f64,
}

impl QuantileExpansion {
    pub fn new(alpha: f64, scale_c: f64, x: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("scale_c", scale_c), ("x", x)] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} = {v} must be positive and finite"));
            }
        }
        Ok(Self { alpha, scale_c, x })
    }

    /// `Φ̄⁻¹(F̄(t·x))`, the quantity the expansion approximates.
    pub fn exact(&self, t: f64) -> Result<f64> {
        let log_q = -self.scale_c.ln() - self.alpha * (t * self.x).ln();
        if !(log_q < 0.0) {
            return invalid(format!("F̄(t·x) = {} is not a tail probability", log_q.exp()));
        }
        std_normal_quantile_upper(log_q.exp())
    }
}

/// `√(2α log t) + [log(c/√log t) + log(x^α/(2√(πα)))]/√(2α log t)`, the
/// normal score of the `F(t·x)` quantile to order `1/√log t`.
pub fn rv_quantile_expansion(q: &QuantileExpansion, t: f64) -> Result<f64> {
    if !(t > std::f64::consts::E && t.is_finite()) {
        return invalid(format!("quantile expansion needs t > e, got {t}"));
    }
    let log_t = t.ln();
    let root = (2.0 * q.alpha * log_t).sqrt();
    let correction = (q.scale_c / log_t.sqrt()).ln() + q.alpha * q.x.ln() - (2.0 * (PI * q.alpha).sqrt()).ln();
    Ok(root + correction / root)
}
