//! Exact solution of `min zᵀΣ⁻¹z` subject to `z ≥ 1`.
//!
//! The minimizer `e*` equals one on an active set `I` and is at least one on
//! the complement `J`. For a candidate `I` the restricted problem has the
//! closed-form value `1ᵀΣ_I⁻¹1`, multipliers `h = Σ_I⁻¹1` and completion
//! `e*_J = Σ_JI h`. A candidate is optimal iff `h > 0` and `e*_J ≥ 1`, and the
//! optimum is unique, so enumerating all nonempty `I` finds it.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, solve_spd, spd_factorize, submatrix, CorrelationMatrix, IndexSubset, MAX_CONE_DIM};

/// Tolerance separating `e*_j = 1` from `e*_j > 1` on the inactive set.
pub const BOUNDARY_EPS: f64 = 1e-9;

/// Relative tolerance under which two candidate values are treated as equal.
const VALUE_TIE_EPS: f64 = 1e-9;

/// Solution of the box-constrained quadratic program.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    /// Optimal value `γ = 1_Iᵀ Σ_I⁻¹ 1_I`.
    pub gamma: f64,
    /// Minimizer, length `d`.
    pub e_star: Vec<f64>,
    pub active: IndexSubset,
    pub inactive: IndexSubset,
    /// `Σ_I⁻¹ 1_I`, indexed like `active`.
    pub h: Vec<f64>,
}

impl QpSolution {
    pub fn dim(&self) -> usize {
        self.e_star.len()
    }

    /// Members of `J` where `e*_j` sits on the constraint boundary.
    pub fn boundary_set(&self) -> IndexSubset {
        let members = self
            .inactive
            .iter()
            .filter(|&j| (self.e_star[j] - 1.0).abs() <= BOUNDARY_EPS)
            .collect();
        IndexSubset::new(members).expect("subset of a valid subset")
    }

    /// Multipliers spread over all `d` coordinates (zero on `J`).
    pub fn multipliers(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.dim()];
        for (k, i) in self.active.iter().enumerate() {
            w[i] = self.h[k];
        }
        w
    }
}

struct Candidate {
    mask: u64,
    size: usize,
    value: f64,
    h: Vec<f64>,
}

/// Solves the program for `2 ≤ d ≤ 12`.
pub fn solve_qp(sigma: &CorrelationMatrix) -> Result<QpSolution> {
    let d = sigma.dim();
    if d < 2 {
        return invalid(format!("quadratic program needs d >= 2, got {d}"));
    }
    if d > MAX_CONE_DIM {
        return Err(Error::Capacity {
            dim: d,
            max: MAX_CONE_DIM,
        });
    }
    let m = sigma.as_matrix();

    let mut candidates = Vec::with_capacity((1 << d) - 1);
    for mask in 1u64..(1 << d) {
        let active = IndexSubset::from_mask(mask);
        let block = submatrix(m, &active, &active)?;
        let fact = spd_factorize(&block)?;
        let h = solve_spd(&fact, &vec![1.0; active.len()])?;
        candidates.push(Candidate {
            mask,
            size: active.len(),
            value: h.iter().sum(),
            h,
        });
    }
    candidates.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.size.cmp(&b.size))
            .then(a.mask.cmp(&b.mask))
    });

    let completion = |c: &Candidate| -> Option<Vec<f64>> {
        if c.h.iter().any(|&v| v <= 0.0) {
            return None;
        }
        let active = IndexSubset::from_mask(c.mask);
        let mut e = vec![1.0; d];
        for j in active.complement(d).iter() {
            let ej: f64 = active.iter().zip(&c.h).map(|(i, hi)| m.get(j, i) * hi).sum();
            if ej < 1.0 - BOUNDARY_EPS {
                return None;
            }
            e[j] = ej;
        }
        Some(e)
    };

    let Some(first) = candidates.iter().position(|c| completion(c).is_some()) else {
        let best = &candidates[0];
        return Err(Error::SolverInconsistency(format!(
            "d = {d}, smallest candidate {} with value {:.12} and h = {:?}",
            IndexSubset::from_mask(best.mask),
            best.value,
            best.h
        )));
    };

    // A coordinate with e*_j = 1 exactly can enter I with h_j ≈ 0 at the same
    // value; such coordinates stay in J.
    let tol = VALUE_TIE_EPS * candidates[first].value.max(1.0);
    let chosen = candidates[first..]
        .iter()
        .take_while(|c| c.value - candidates[first].value <= tol)
        .filter(|c| completion(c).is_some())
        .min_by(|a, b| a.size.cmp(&b.size).then(a.mask.cmp(&b.mask)))
        .expect("first passing candidate is in range");

    let active = IndexSubset::from_mask(chosen.mask);
    Ok(QpSolution {
        gamma: chosen.value,
        e_star: completion(chosen).expect("candidate passed"),
        inactive: active.complement(d),
        active,
        h: chosen.h.clone(),
    })
}

/// Grid search over `{1, 1+step, …, 1+halfwidth}^d`, for `d ≤ 4`.
///
/// Returns the smallest objective found and its grid point.
pub fn brute_force_qp(sigma: &CorrelationMatrix, grid_halfwidth: f64, grid_step: f64) -> Result<(f64, Vec<f64>)> {
    let d = sigma.dim();
    if d > 4 {
        return Err(Error::Capacity { dim: d, max: 4 });
    }
    if !(grid_step > 0.0 && grid_halfwidth >= 0.0 && grid_step.is_finite()) {
        return invalid("grid step must be positive and halfwidth nonnegative");
    }
    let fact = sigma.cholesky();
    let inv: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            solve_spd(&fact, &e)
        })
        .collect::<Result<_>>()?;

    let steps = (grid_halfwidth / grid_step).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| 1.0 + k as f64 * grid_step).collect();
    let mut idx = vec![0usize; d];
    let mut z = vec![1.0; d];
    let mut best = (f64::INFINITY, z.clone());
    loop {
        let value: f64 = (0..d).map(|r| z[r] * dot(&inv[r], &z)).sum();
        if value < best.0 {
            best = (value, z.clone());
        }
        let mut k = 0;
        loop {
            if k == d {
                return Ok(best);
            }
            idx[k] += 1;
            if idx[k] <= steps {
                z[k] = grid[idx[k]];
                break;
            }
            idx[k] = 0;
            z[k] = grid[0];
            k += 1;
        }
    }
}

/// Largest violation of each optimality condition.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// `max_{j∈J} |(Σ⁻¹e*)_j|`.
    pub stationarity: f64,
    /// `min_{i∈I} h_i`; must be positive.
    pub min_multiplier: f64,
    /// `min_{j∈J} (e*_j − 1)`; `+∞` when `J` is empty.
    pub min_slack: f64,
    /// `max_{i∈I} |e*_i − 1|`.
    pub active_deviation: f64,
    /// `|γ − 1_IᵀΣ_I⁻¹1_I|`.
    pub gamma_gap: f64,
    /// `|γ − e*ᵀΣ⁻¹e*|`.
    pub objective_gap: f64,
}

impl KktReport {
    /// Whether every residual is within the tolerances the solver guarantees.
    pub fn is_optimal(&self) -> bool {
        self.stationarity <= 1e-9
            && self.min_multiplier > 0.0
            && self.min_slack >= -BOUNDARY_EPS
            && self.active_deviation == 0.0
            && self.gamma_gap <= 1e-10
            && self.objective_gap <= 1e-10
    }
}

/// Recomputes the optimality conditions of `sol` directly from `sigma`.
pub fn kkt_residuals(sigma: &CorrelationMatrix, sol: &QpSolution) -> Result<KktReport> {
    let d = sigma.dim();
    if sol.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: sol.dim(),
        });
    }
    sol.active.check_within(d)?;
    let w = sigma.cholesky().solve(&sol.e_star)?;

    let block = submatrix(sigma.as_matrix(), &sol.active, &sol.active)?;
    let h = solve_spd(&spd_factorize(&block)?, &vec![1.0; sol.active.len()])?;
    let gamma_restricted: f64 = h.iter().sum();

    Ok(KktReport {
        stationarity: sol.inactive.iter().map(|j| w[j].abs()).fold(0.0, f64::max),
        min_multiplier: sol.h.iter().copied().fold(f64::INFINITY, f64::min),
        min_slack: sol
            .inactive
            .iter()
            .map(|j| sol.e_star[j] - 1.0)
            .fold(f64::INFINITY, f64::min),
        active_deviation: sol
            .active
            .iter()
            .map(|i| (sol.e_star[i] - 1.0).abs())
            .fold(0.0, f64::max),
        gamma_gap: (sol.gamma - gamma_restricted).abs(),
        objective_gap: (sol.gamma - dot(&sol.e_star, &w)).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_dim_example(rho: f64) -> CorrelationMatrix {
        let s = 2f64.sqrt() * rho;
        CorrelationMatrix::from_rows(&[vec![1.0, rho, s], vec![rho, 1.0, s], vec![s, s, 1.0]]).unwrap()
    }

    #[test]
    fn bivariate_equicorrelation_closed_form() {
        for rho in [-0.9, -0.5, 0.0, 0.3, 0.6, 0.95] {
            let sol = solve_qp(&CorrelationMatrix::equicorrelation(2, rho).unwrap()).unwrap();
            assert_eq!(sol.e_star, vec![1.0, 1.0]);
            assert_eq!(sol.active.len(), 2);
            assert!((sol.gamma - 2.0 / (1.0 + rho)).abs() < 1e-12);
            for h in &sol.h {
                assert!((h - 1.0 / (1.0 + rho)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn three_dim_example_drops_third_coordinate() {
        let rho = 0.6;
        let sol = solve_qp(&three_dim_example(rho)).unwrap();
        assert_eq!(sol.active.to_string(), "{1,2}");
        assert_eq!(sol.inactive.to_string(), "{3}");
        assert!((sol.gamma - 1.25).abs() < 1e-12);
        let e3 = 2.0 * 2f64.sqrt() * rho / (1.0 + rho);
        assert!((sol.e_star[2] - e3).abs() < 1e-12);
        assert!((sol.e_star[2] - 1.0607).abs() < 1e-4);
    }

    #[test]
    fn identity_is_fully_active() {
        let sol = solve_qp(&CorrelationMatrix::identity(3)).unwrap();
        assert_eq!(sol.e_star, vec![1.0; 3]);
        assert_eq!(sol.gamma, 3.0);
        assert_eq!(sol.h, vec![1.0; 3]);
        assert!(sol.inactive.is_empty());
    }

    #[test]
    fn boundary_coordinate_stays_inactive() {
        let rho = 1.0 / (2.0 * 2f64.sqrt() - 1.0);
        let sol = solve_qp(&three_dim_example(rho)).unwrap();
        assert_eq!(sol.active.to_string(), "{1,2}");
        assert_eq!(sol.boundary_set().to_string(), "{3}");
    }

    #[test]
    fn rejects_out_of_range_dimensions() {
        assert!(matches!(
            solve_qp(&CorrelationMatrix::identity(1)),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            solve_qp(&CorrelationMatrix::identity(13)),
            Err(Error::Capacity { dim: 13, max: 12 })
        ));
    }

    #[test]
    fn brute_force_examples() {
        let (g, z) = brute_force_qp(&CorrelationMatrix::equicorrelation(2, 0.6).unwrap(), 2.0, 0.01).unwrap();
        assert!((g - 1.25).abs() <= 0.02);
        assert_eq!(z, vec![1.0, 1.0]);

        let (g, z) = brute_force_qp(&CorrelationMatrix::identity(2), 2.0, 0.01).unwrap();
        assert_eq!(g, 2.0);
        assert_eq!(z, vec![1.0, 1.0]);

        let (g, z) = brute_force_qp(&three_dim_example(0.6), 2.0, 0.01).unwrap();
        assert!((g - 1.25).abs() <= 0.02);
        assert!((z[2] - 1.06).abs() <= 0.011);
    }

    #[test]
    fn kkt_identity_is_exact() {
        let sigma = CorrelationMatrix::identity(3);
        let r = kkt_residuals(&sigma, &solve_qp(&sigma).unwrap()).unwrap();
        assert_eq!(r.stationarity, 0.0);
        assert_eq!(r.active_deviation, 0.0);
        assert_eq!(r.gamma_gap, 0.0);
        assert_eq!(r.objective_gap, 0.0);
        assert_eq!(r.min_slack, f64::INFINITY);
        assert!(r.is_optimal());
    }

    #[test]
    fn kkt_example_and_perturbation() {
        let sigma = three_dim_example(0.6);
        let mut sol = solve_qp(&sigma).unwrap();
        let r = kkt_residuals(&sigma, &sol).unwrap();
        assert!(r.stationarity < 1e-9);
        assert!(r.is_optimal());

        sol.e_star[0] += 0.1;
        let r = kkt_residuals(&sigma, &sol).unwrap();
        assert!((r.active_deviation - 0.1).abs() < 1e-12);
        assert!(!r.is_optimal());
    }
}
