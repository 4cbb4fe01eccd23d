//! Joint tail asymptotics for random vectors with regularly varying marginals
//! coupled by a Gaussian copula.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: validated correlation matrices, index subsets and a small
//!   dense Cholesky factorization.
//! - [`qp`]: the exact solver for `min z'Σ⁻¹z` subject to `z ≥ 1`, which
//!   yields the exponent `γ`, the minimizer `e*`, the active set `I` and the
//!   multipliers `h` that parameterize every tail formula.
//! - [`gaussian`]: normal special functions, orthant probabilities, the
//!   Gaussian tail constant `Υ(Σ)` and the regularly-varying-to-normal
//!   quantile expansion.
//! - [`asymptotics`]: tail probabilities of rectangular, at-least-`i` and
//!   complement-box sets, cone-wise indices `α_i` and limit measures `μ_i`,
//!   and the bivariate normal-versus-Pareto comparison.
//! - [`simulation`]: seeded, chunk-invariant Monte Carlo sampling, the Hill
//!   estimator and the empirical verification harness.

pub mod asymptotics;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod qp;
pub mod simulation;

pub use asymptotics::{
    bivariate_comparison, cone_analysis, marginal_tail, mu_i_at_least, mu_i_rectangular, mu_level_one,
    rect_tail_asymptotic, tail_coefficients, tail_estimate, tail_probability, AsymptoticEstimate, BivariateComparison,
    ConeAnalysis, GaussianRegime, MarginalFamily, MarginalSpec, RectangularSet, TailCoefficients, TailProbability,
    TailSet,
};
pub use error::{Error, Result};
pub use gaussian::{gaussian_joint_tail, rv_quantile_expansion, upsilon, QuantileExpansion, UpsilonResult};
pub use linalg::{CorrelationMatrix, IndexSubset, Matrix};
pub use qp::{brute_force_qp, kkt_residuals, solve_qp, KktReport, QpSolution};
