//! Tail asymptotics for regularly varying marginals under a Gaussian copula.
//!
//! With identical margins `F̄(s) = 1/(c·s^α)` and copula correlation `Σ`,
//! the probability that `X` lands in `t·A` behaves like
//!
//! ```text
//! C · (2α log t)^β · t^{−a}
//! ```
//!
//! as `t → ∞`. The exponents come from the quadratic program of each
//! relevant principal block `Σ_S`; see [`AsymptoticEstimate`].

use std::f64::consts::PI;

use log::warn;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gaussian::{log_std_normal_sf, upsilon, UpsilonResult};
use crate::linalg::{CorrelationMatrix, IndexSubset, MAX_CONE_DIM};
use crate::qp::{solve_qp, QpSolution};

/// Relative tolerance under which two exponents `γ_S` are considered equal.
pub const GAMMA_TIE_EPS: f64 = 1e-9;

/// Below this `t` the estimates are still returned, with a warning.
pub const ASYMPTOTIC_WARN_T: f64 = 100.0;

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= GAMMA_TIE_EPS * b.abs().max(1.0)
}

fn check_positive(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        Some(v) => invalid(format!("{name} must be positive and finite, got {v}")),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalFamily {
    /// `F̄(s) = s^{−α}` for `s ≥ 1`; required for simulation.
    ParetoExact,
    /// Only the tail `F̄(s) ~ 1/(c·s^α)` is specified.
    AsymptoticOnly,
}

/// Common marginal law of all coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalSpec {
    pub alpha: f64,
    pub scale_c: f64,
    pub family: MarginalFamily,
}

impl MarginalSpec {
    pub fn new(alpha: f64, scale_c: f64, family: MarginalFamily) -> Result<Self> {
        check_positive("alpha", &[alpha])?;
        check_positive("scale_c", &[scale_c])?;
        if family == MarginalFamily::ParetoExact && scale_c != 1.0 {
            return invalid(format!("exact Pareto margins have scale_c = 1, got {scale_c}"));
        }
        Ok(Self { alpha, scale_c, family })
    }

    pub fn pareto(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0, MarginalFamily::ParetoExact)
    }

    /// `log b^←(t) = log c + α log t`.
    pub fn log_b_inverse(&self, t: f64) -> f64 {
        self.scale_c.ln() + self.alpha * t.ln()
    }

    /// `log(2α log t)`, the argument of every log-log correction.
    pub fn log_log_term(&self, t: f64) -> f64 {
        (2.0 * self.alpha * t.ln()).ln()
    }
}

/// `{y : y_s > x_s for all s ∈ S}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RectangularSet {
    pub subset: IndexSubset,
    /// Thresholds aligned with the members of `subset`.
    pub thresholds: Vec<f64>,
}

impl RectangularSet {
    pub fn new(subset: IndexSubset, thresholds: Vec<f64>) -> Result<Self> {
        if subset.is_empty() {
            return invalid("rectangular set needs a nonempty index set");
        }
        if thresholds.len() != subset.len() {
            return Err(Error::DimensionMismatch {
                expected: subset.len(),
                found: thresholds.len(),
            });
        }
        check_positive("thresholds", &thresholds)?;
        Ok(Self { subset, thresholds })
    }

    /// Builds the set from one-based indices and matching thresholds, which
    /// need not be sorted.
    pub fn from_one_based(indices: &[usize], thresholds: &[f64]) -> Result<Self> {
        if indices.len() != thresholds.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                found: thresholds.len(),
            });
        }
        let mut pairs: Vec<(usize, f64)> = indices.iter().copied().zip(thresholds.iter().copied()).collect();
        pairs.sort_by_key(|p| p.0);
        let subset = IndexSubset::from_one_based(&pairs.iter().map(|p| p.0).collect::<Vec<_>>())?;
        Self::new(subset, pairs.into_iter().map(|p| p.1).collect())
    }

    /// Threshold of coordinate `j`, if `j ∈ S`.
    pub fn threshold(&self, j: usize) -> Option<f64> {
        self.subset.members().binary_search(&j).ok().map(|k| self.thresholds[k])
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.subset.clone(),
            self.thresholds.iter().map(|x| x * lambda).collect(),
        )
    }
}

/// The tail sets supported by [`tail_probability`].
#[derive(Debug, Clone, PartialEq)]
pub enum TailSet {
    Rectangular(RectangularSet),
    /// At least `i` coordinates exceed their thresholds.
    AtLeast {
        x: Vec<f64>,
        i: usize,
    },
    /// Some coordinate exceeds its threshold, `[0, x]ᶜ`.
    ComplementBox {
        x: Vec<f64>,
    },
}

impl TailSet {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            TailSet::Rectangular(r) => r.subset.check_within(d),
            TailSet::AtLeast { x, i } => {
                if x.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: x.len(),
                    });
                }
                if *i == 0 || *i > d {
                    return invalid(format!("at-least level {i} outside 1..={d}"));
                }
                check_positive("thresholds", x)
            }
            TailSet::ComplementBox { x } => {
                if x.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: x.len(),
                    });
                }
                check_positive("thresholds", x)
            }
        }
    }
}

/// Asymptotic ingredients of a principal block `Σ_S`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCoefficients {
    pub subset: IndexSubset,
    pub gamma: f64,
    /// `I_S`, in the coordinates of the full matrix.
    pub active: IndexSubset,
    /// Multipliers `h^S`, aligned with `active`.
    pub h: Vec<f64>,
    pub upsilon: UpsilonResult,
}

impl TailCoefficients {
    /// `Σ_{s∈I_S} −α h_s log x_s` for thresholds given per full coordinate.
    fn log_threshold_factor(&self, alpha: f64, threshold: impl Fn(usize) -> f64) -> f64 {
        self.active
            .iter()
            .zip(&self.h)
            .map(|(s, h)| -alpha * h * threshold(s).ln())
            .sum()
    }
}

/// Solves the quadratic program of `Σ_S` and assembles `γ_S, I_S, h^S, Υ_S`.
pub fn tail_coefficients(sigma: &CorrelationMatrix, subset: &IndexSubset) -> Result<TailCoefficients> {
    subset.check_within(sigma.dim())?;
    match subset.len() {
        0 => invalid("tail coefficients need a nonempty index set"),
        1 => Ok(TailCoefficients {
            subset: subset.clone(),
            gamma: 1.0,
            active: subset.clone(),
            h: vec![1.0],
            upsilon: UpsilonResult {
                upsilon: (2.0 * PI).sqrt().recip(),
                log_upsilon: -0.5 * (2.0 * PI).ln(),
                orthant_factor: 1.0,
                orthant_std_error: 0.0,
                boundary_set: IndexSubset::empty(),
            },
        }),
        _ => {
            let block = sigma.principal(subset)?;
            let sol = solve_qp(&block)?;
            let ups = upsilon(&block, &sol)?;
            Ok(lift(subset, sol, ups))
        }
    }
}

fn lift(subset: &IndexSubset, sol: QpSolution, mut ups: UpsilonResult) -> TailCoefficients {
    ups.boundary_set = ups.boundary_set.lift(subset);
    TailCoefficients {
        subset: subset.clone(),
        gamma: sol.gamma,
        active: sol.active.lift(subset),
        h: sol.h,
        upsilon: ups,
    }
}

/// One set contributing to an [`AsymptoticEstimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContributingSet {
    pub subset: IndexSubset,
    pub active: IndexSubset,
    pub gamma: f64,
    /// Log of this set's share of `exp(log_constant)`.
    pub log_constant: f64,
}

/// `log P(X ∈ tA) ≈ log_constant + beta·log(2α log t) − a·log t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticEstimate {
    pub log_constant: f64,
    /// Power `a` of `t^{−a}`.
    pub power_exponent: f64,
    /// Power `β` of `(2α log t)^β`.
    pub log_log_exponent: f64,
    /// Marginal tail index, needed to evaluate the log-log factor.
    pub alpha: f64,
    pub contributing_sets: Vec<ContributingSet>,
}

impl AsymptoticEstimate {
    /// True when no set contributes: the limit measure of the set is zero
    /// at this scale and the estimate is `−∞` in log space.
    pub fn is_zero(&self) -> bool {
        self.contributing_sets.is_empty()
    }

    pub fn evaluate_log(&self, t: f64) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let log_log = if self.log_log_exponent == 0.0 {
            0.0
        } else {
            self.log_log_exponent * (2.0 * self.alpha * t.ln()).ln()
        };
        self.log_constant + log_log - self.power_exponent * t.ln()
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.evaluate_log(t).exp()
    }
}

/// `P(X_j > t·x) ~ (t·x)^{−α}/c`.
pub fn marginal_tail(marg: &MarginalSpec, x: f64) -> Result<AsymptoticEstimate> {
    check_positive("threshold", &[x])?;
    let log_constant = -marg.alpha * x.ln() - marg.scale_c.ln();
    Ok(AsymptoticEstimate {
        log_constant,
        power_exponent: marg.alpha,
        log_log_exponent: 0.0,
        alpha: marg.alpha,
        contributing_sets: vec![ContributingSet {
            subset: IndexSubset::empty(),
            active: IndexSubset::empty(),
            gamma: 1.0,
            log_constant,
        }],
    })
}

fn rect_from_coefficients(coef: &TailCoefficients, marg: &MarginalSpec, set: &RectangularSet) -> AsymptoticEstimate {
    let gamma = coef.gamma;
    let log_constant = coef.upsilon.log_upsilon + 0.5 * gamma * (2.0 * PI).ln() - gamma * marg.scale_c.ln()
        + coef.log_threshold_factor(marg.alpha, |s| set.threshold(s).expect("I_S ⊆ S"));
    AsymptoticEstimate {
        log_constant,
        power_exponent: marg.alpha * gamma,
        log_log_exponent: 0.5 * (gamma - coef.active.len() as f64),
        alpha: marg.alpha,
        contributing_sets: vec![ContributingSet {
            subset: set.subset.clone(),
            active: coef.active.clone(),
            gamma,
            log_constant,
        }],
    }
}

/// Joint exceedance of a rectangular set with `|S| ≥ 2`.
pub fn rect_tail_asymptotic(
    sigma: &CorrelationMatrix,
    marg: &MarginalSpec,
    set: &RectangularSet,
) -> Result<AsymptoticEstimate> {
    if set.subset.len() < 2 {
        return invalid("rectangular asymptotic needs |S| >= 2; use marginal_tail for singletons");
    }
    let coef = tail_coefficients(sigma, &set.subset)?;
    let mut est = rect_from_coefficients(&coef, marg, set);
    if let Some(first) = est.contributing_sets.first_mut() {
        first.subset = set.subset.clone();
    }
    Ok(est)
}

/// `μ₁([0, x]ᶜ) = Σ_j x_j^{−α}`.
pub fn mu_level_one(marg: &MarginalSpec, x: &[f64]) -> Result<f64> {
    check_positive("thresholds", x)?;
    Ok(x.iter().map(|xj| xj.powf(-marg.alpha)).sum())
}

fn complement_box(marg: &MarginalSpec, x: &[f64]) -> Result<AsymptoticEstimate> {
    let mu = mu_level_one(marg, x)?;
    Ok(AsymptoticEstimate {
        log_constant: mu.ln() - marg.scale_c.ln(),
        power_exponent: marg.alpha,
        log_log_exponent: 0.0,
        alpha: marg.alpha,
        contributing_sets: x
            .iter()
            .enumerate()
            .map(|(j, xj)| {
                let s = IndexSubset::new(vec![j]).expect("singleton");
                ContributingSet {
                    subset: s.clone(),
                    active: s,
                    gamma: 1.0,
                    log_constant: -marg.alpha * xj.ln() - marg.scale_c.ln(),
                }
            })
            .collect(),
    })
}

/// A member of `𝒮_i` whose active set is larger than `|I_i|`; its
/// contribution relative to a principal member vanishes like
/// `(2α log t)^{log_ratio_exponent}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdominantMember {
    pub subset: IndexSubset,
    pub active: IndexSubset,
    pub log_ratio_exponent: f64,
}

/// Regular variation on the cone of points with at least `i` large
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeAnalysis {
    pub level: usize,
    pub dim: usize,
    pub marginal: MarginalSpec,
    /// `γ_i = min_{|S| ≥ i} γ_S`.
    pub gamma: f64,
    /// `α_i = α·γ_i`.
    pub alpha_i: f64,
    /// `|I_i| = min_{S ∈ 𝒮_i} |I_S|`.
    pub card_active: usize,
    /// `𝒮_i`, ordered by size and then lexicographically.
    pub family: Vec<TailCoefficients>,
    /// `γ_{i+1}`, absent at the top level.
    pub next_gamma: Option<f64>,
}

impl ConeAnalysis {
    /// Members of `𝒮_i` with `|I_S| = |I_i|`.
    pub fn principal_family(&self) -> impl Iterator<Item = &TailCoefficients> {
        self.family.iter().filter(move |c| c.active.len() == self.card_active)
    }

    pub fn subdominant(&self) -> Vec<SubdominantMember> {
        self.family
            .iter()
            .filter(|c| c.active.len() > self.card_active)
            .map(|c| SubdominantMember {
                subset: c.subset.clone(),
                active: c.active.clone(),
                log_ratio_exponent: 0.5 * (self.card_active as f64 - c.active.len() as f64),
            })
            .collect()
    }

    pub fn member(&self, subset: &IndexSubset) -> Option<&TailCoefficients> {
        self.family.iter().find(|c| &c.subset == subset)
    }

    /// Distinct active sets `I_S` of the family, e.g. `{{1,2},{4,5,6}}`.
    pub fn active_listing(&self) -> String {
        let mut sets: Vec<&IndexSubset> = self.family.iter().map(|c| &c.active).collect();
        sets.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        sets.dedup();
        brace_list(sets)
    }

    /// The family `𝒮_i` itself, e.g. `{{1,2,3},{4,5,6}}`.
    pub fn family_listing(&self) -> String {
        brace_list(self.family.iter().map(|c| &c.subset))
    }

    /// `log b_i^←(t) = −(γ_i/2)log 2π + ((|I_i|−γ_i)/2)log(2α log t) + γ_i log b^←(t)`.
    pub fn log_b_inverse(&self, t: f64) -> f64 {
        let g = self.gamma;
        -0.5 * g * (2.0 * PI).ln()
            + 0.5 * (self.card_active as f64 - g) * self.marginal.log_log_term(t)
            + g * self.marginal.log_b_inverse(t)
    }

    /// Whether `γ_{i+1} = γ_i` within the tie tolerance.
    pub fn next_level_ties(&self) -> bool {
        self.next_gamma.is_some_and(|g| ties(g, self.gamma))
    }
}

fn brace_list<'a>(sets: impl IntoIterator<Item = &'a IndexSubset>) -> String {
    let inner: Vec<String> = sets.into_iter().map(ToString::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

/// Enumerates every `S` with `|S| ≥ i` and collects the minimizers of `γ_S`.
pub fn cone_analysis(sigma: &CorrelationMatrix, marg: &MarginalSpec, i: usize) -> Result<ConeAnalysis> {
    let d = sigma.dim();
    if d > MAX_CONE_DIM {
        return Err(Error::Capacity {
            dim: d,
            max: MAX_CONE_DIM,
        });
    }
    if i < 2 || i > d {
        return invalid(format!("cone level {i} outside 2..={d}"));
    }

    let masks: Vec<u64> = (1u64..1 << d).filter(|m| m.count_ones() as usize >= i).collect();
    let solved: Vec<(u64, QpSolution)> = masks
        .par_iter()
        .map(|&mask| {
            let subset = IndexSubset::from_mask(mask);
            solve_qp(&sigma.principal(&subset)?).map(|sol| (mask, sol))
        })
        .collect::<Result<_>>()?;

    let gamma = solved.iter().map(|(_, s)| s.gamma).fold(f64::INFINITY, f64::min);
    let next_gamma = solved
        .iter()
        .filter(|(m, _)| m.count_ones() as usize > i)
        .map(|(_, s)| s.gamma)
        .reduce(f64::min);

    let mut members: Vec<(u64, QpSolution)> = solved.into_iter().filter(|(_, s)| ties(s.gamma, gamma)).collect();
    members.sort_by_key(|(m, _)| {
        let s = IndexSubset::from_mask(*m);
        (s.len(), s)
    });
    let family = members
        .into_iter()
        .map(|(mask, sol)| {
            let subset = IndexSubset::from_mask(mask);
            let ups = upsilon(&sigma.principal(&subset)?, &sol)?;
            Ok(lift(&subset, sol, ups))
        })
        .collect::<Result<Vec<_>>>()?;
    let card_active = family
        .iter()
        .map(|c| c.active.len())
        .min()
        .expect("the minimum is attained");

    Ok(ConeAnalysis {
        level: i,
        dim: d,
        marginal: *marg,
        gamma,
        alpha_i: marg.alpha * gamma,
        card_active,
        family,
        next_gamma,
    })
}

/// `log μ_i(A_{x_S})`; `−∞` when `S ∉ 𝒮_i` or `|I_S| > |I_i|`.
pub fn log_mu_i_rectangular(cone: &ConeAnalysis, set: &RectangularSet) -> Result<f64> {
    set.subset.check_within(cone.dim)?;
    if set.subset.len() < cone.level {
        return invalid(format!("set {} has fewer than {} coordinates", set.subset, cone.level));
    }
    Ok(match cone.member(&set.subset) {
        Some(c) if c.active.len() == cone.card_active => {
            c.upsilon.log_upsilon + c.log_threshold_factor(cone.marginal.alpha, |s| set.threshold(s).expect("I_S ⊆ S"))
        }
        _ => f64::NEG_INFINITY,
    })
}

/// `μ_i(A_{x_S})`.
pub fn mu_i_rectangular(cone: &ConeAnalysis, set: &RectangularSet) -> Result<f64> {
    log_mu_i_rectangular(cone, set).map(f64::exp)
}

fn at_least_terms(cone: &ConeAnalysis, x: &[f64]) -> Result<Vec<(TailCoefficients, f64)>> {
    if x.len() != cone.dim {
        return Err(Error::DimensionMismatch {
            expected: cone.dim,
            found: x.len(),
        });
    }
    check_positive("thresholds", x)?;
    if cone.next_level_ties() {
        return Err(Error::UnsupportedDegeneracy(format!(
            "γ_{} = γ_{} = {}: at-least-{} asymptotics need a strict gap to the next level",
            cone.level + 1,
            cone.level,
            cone.gamma,
            cone.level
        )));
    }
    Ok(cone
        .principal_family()
        .filter(|c| c.subset.len() == cone.level)
        .map(|c| {
            let log_mu = c.upsilon.log_upsilon + c.log_threshold_factor(cone.marginal.alpha, |s| x[s]);
            (c.clone(), log_mu)
        })
        .collect())
}

/// `log μ_i(B_{x,i})`; requires `γ_{i+1} > γ_i`.
pub fn log_mu_i_at_least(cone: &ConeAnalysis, x: &[f64]) -> Result<f64> {
    let terms = at_least_terms(cone, x)?;
    Ok(log_sum_exp(terms.iter().map(|t| t.1)))
}

/// `μ_i(B_{x,i})`: the sum over `S ∈ 𝒮_i` with `|S| = i` and `|I_S| = |I_i|`
/// of `Υ_S Π_{s∈I_S} x_s^{−α h_s}`.
pub fn mu_i_at_least(cone: &ConeAnalysis, x: &[f64]) -> Result<f64> {
    log_mu_i_at_least(cone, x).map(f64::exp)
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn at_least_estimate(cone: &ConeAnalysis, x: &[f64]) -> Result<AsymptoticEstimate> {
    let g = cone.gamma;
    let marg = &cone.marginal;
    let shift = 0.5 * g * (2.0 * PI).ln() - g * marg.scale_c.ln();
    let terms = at_least_terms(cone, x)?;
    let log_mu = log_sum_exp(terms.iter().map(|t| t.1));
    Ok(AsymptoticEstimate {
        log_constant: log_mu + shift,
        power_exponent: cone.alpha_i,
        log_log_exponent: 0.5 * (g - cone.card_active as f64),
        alpha: marg.alpha,
        contributing_sets: terms
            .into_iter()
            .map(|(c, log_mu)| ContributingSet {
                subset: c.subset,
                active: c.active,
                gamma: c.gamma,
                log_constant: log_mu + shift,
            })
            .collect(),
    })
}

/// Value of [`tail_probability`].
#[derive(Debug, Clone, PartialEq)]
pub struct TailProbability {
    pub log_probability: f64,
    pub estimate: AsymptoticEstimate,
}

/// Asymptotic estimate for any supported set; see [`TailSet`].
pub fn tail_estimate(sigma: &CorrelationMatrix, marg: &MarginalSpec, set: &TailSet) -> Result<AsymptoticEstimate> {
    set.validate(sigma.dim())?;
    match set {
        TailSet::Rectangular(r) if r.subset.len() == 1 => marginal_tail(marg, r.thresholds[0]),
        TailSet::Rectangular(r) => rect_tail_asymptotic(sigma, marg, r),
        TailSet::ComplementBox { x } | TailSet::AtLeast { x, i: 1 } => complement_box(marg, x),
        TailSet::AtLeast { x, i } => at_least_estimate(&cone_analysis(sigma, marg, *i)?, x),
    }
}

/// `log P(X ∈ tA)` from the asymptotic formula, for `t > 1`.
pub fn tail_probability(
    sigma: &CorrelationMatrix,
    marg: &MarginalSpec,
    set: &TailSet,
    t: f64,
) -> Result<TailProbability> {
    if !(t > 1.0 && t.is_finite()) {
        return invalid(format!("scale t = {t} must exceed 1"));
    }
    if t < ASYMPTOTIC_WARN_T {
        warn!("tail asymptotic evaluated at t = {t} < {ASYMPTOTIC_WARN_T}");
    }
    let estimate = tail_estimate(sigma, marg, set)?;
    Ok(TailProbability {
        log_probability: estimate.evaluate_log(t),
        estimate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianRegime {
    /// `ρ < min(x₁/x₂, x₂/x₁)`: the joint tail is negligible against the
    /// larger margin.
    JointDominated,
    /// `ρ > min(x₁/x₂, x₂/x₁)`: the joint tail is the larger margin's tail.
    MarginDominated,
    /// `ρ = min(x₁/x₂, x₂/x₁)`: half the larger margin's tail.
    Boundary,
}

/// Normal versus Pareto margins under the same bivariate Gaussian copula,
/// for the event `{X₁ > t·x₁, X₂ > t·x₂}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateComparison {
    pub gaussian_regime: GaussianRegime,
    /// Asymptotic `log P(Z₁ > tx₁, Z₂ > tx₂)`; absent when the
    /// joint-dominated formula does not apply (`ρ < 0`).
    pub gaussian_log_asym: Option<f64>,
    /// Asymptotic `log P(X₁ > tx₁, X₂ > tx₂)` for Pareto(α) margins.
    pub pareto_log_asym: f64,
    /// `2α/(1+ρ)`.
    pub pareto_rate: f64,
    /// `−ρ/(1+ρ)`.
    pub pareto_log_log_exponent: f64,
}

/// Regimes closer than this to `min(x₁/x₂, x₂/x₁)` count as the boundary.
const REGIME_TOLERANCE: f64 = 1e-12;

pub fn bivariate_comparison(rho: f64, alpha: f64, x1: f64, x2: f64, t: f64) -> Result<BivariateComparison> {
    if !(rho > -1.0 && rho < 1.0) {
        return invalid(format!("correlation {rho} outside (-1, 1)"));
    }
    check_positive("alpha", &[alpha])?;
    check_positive("thresholds", &[x1, x2])?;
    if !(t > 1.0 && t.is_finite()) {
        return invalid(format!("scale t = {t} must exceed 1"));
    }

    let ratio = (x1 / x2).min(x2 / x1);
    let x_max = x1.max(x2);
    let log_phi = |y: f64| -0.5 * y * y - 0.5 * (2.0 * PI).ln();
    let (regime, gaussian) = if (rho - ratio).abs() <= REGIME_TOLERANCE {
        let v = 0.5f64.ln() + log_phi(t * x_max) - (t * x_max).ln();
        (GaussianRegime::Boundary, Some(v))
    } else if rho > ratio {
        let v = log_phi(t * x_max) - (t * x_max).ln();
        (GaussianRegime::MarginDominated, Some(v))
    } else if rho >= 0.0 {
        let one_minus = 1.0 - rho * rho;
        let x_rho = ((x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2) / one_minus).sqrt();
        let v = 1.5 * one_minus.ln() - (x1 - rho * x2).ln() - (x2 - rho * x1).ln() + log_phi(t * x_rho)
            - 0.5 * (2.0 * PI).ln()
            - 2.0 * t.ln();
        (GaussianRegime::JointDominated, Some(v))
    } else {
        (GaussianRegime::JointDominated, None)
    };

    let k = rho / (1.0 + rho);
    let pareto_rate = 2.0 * alpha / (1.0 + rho);
    let pareto = -pareto_rate * t.ln() - k * (2.0 * alpha * t.ln()).ln() - k * (2.0 * PI).ln() + 1.5 * (1.0 + rho).ln()
        - 0.5 * (1.0 - rho).ln()
        - alpha / (1.0 + rho) * (x1 * x2).ln();

    Ok(BivariateComparison {
        gaussian_regime: regime,
        gaussian_log_asym: gaussian,
        pareto_log_asym: pareto,
        pareto_rate,
        pareto_log_log_exponent: -k,
    })
}

/// `log P(Z > t·x)` for a standard normal margin, the comparison baseline
/// for [`BivariateComparison::gaussian_log_asym`].
pub fn log_gaussian_margin(t: f64, x: f64) -> f64 {
    log_std_normal_sf(t * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_dim_example(rho: f64) -> CorrelationMatrix {
        let s = 2f64.sqrt() * rho;
        CorrelationMatrix::from_rows(&[vec![1.0, rho, s], vec![rho, 1.0, s], vec![s, s, 1.0]]).unwrap()
    }

    fn rect(idx: &[usize], x: &[f64]) -> RectangularSet {
        RectangularSet::from_one_based(idx, x).unwrap()
    }

    #[test]
    fn bivariate_rect_closed_form() {
        let marg = MarginalSpec::pareto(2.0).unwrap();
        let rho = 0.6;
        let sigma = CorrelationMatrix::equicorrelation(2, rho).unwrap();
        let est = rect_tail_asymptotic(&sigma, &marg, &rect(&[1, 2], &[1.0, 1.0])).unwrap();
        assert!((est.power_exponent - 2.5).abs() < 1e-12);
        assert!((est.log_log_exponent + 0.375).abs() < 1e-12);
        let c = (2.0 * PI).powf(-0.375) * 1.6f64.powf(1.5) / 0.4f64.sqrt();
        assert!((est.log_constant - c.ln()).abs() < 1e-12);
        assert!((c - 1.606).abs() < 1e-3);
    }

    #[test]
    fn independent_pair_is_product() {
        let marg = MarginalSpec::pareto(2.0).unwrap();
        let sigma = CorrelationMatrix::identity(2);
        let set = rect(&[1, 2], &[1.5, 3.0]);
        let est = rect_tail_asymptotic(&sigma, &marg, &set).unwrap();
        assert_eq!(est.power_exponent, 4.0);
        assert_eq!(est.log_log_exponent, 0.0);
        for t in [10.0, 100.0, 1e5] {
            let exact = -2.0 * (t * 1.5f64).ln() - 2.0 * (t * 3.0f64).ln();
            assert!((est.evaluate_log(t) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn marginal_examples() {
        let p2 = MarginalSpec::pareto(2.0).unwrap();
        assert!((marginal_tail(&p2, 1.0).unwrap().evaluate(10.0) - 0.01).abs() < 1e-15);
        assert!((marginal_tail(&p2, 3.0).unwrap().evaluate(10.0) - 1.0 / 900.0).abs() < 1e-15);
        let m = MarginalSpec::new(1.0, 2.0, MarginalFamily::AsymptoticOnly).unwrap();
        assert!((marginal_tail(&m, 1.0).unwrap().evaluate(100.0) - 0.005).abs() < 1e-15);
        assert!(MarginalSpec::new(1.0, 2.0, MarginalFamily::ParetoExact).is_err());
    }

    #[test]
    fn cone_indices_equicorrelation() {
        let alpha = 2.0;
        let marg = MarginalSpec::pareto(alpha).unwrap();
        for rho in [-0.4, 0.0, 0.5, 0.9] {
            let sigma = CorrelationMatrix::equicorrelation(3, rho).unwrap();
            for i in 2..=3 {
                let cone = cone_analysis(&sigma, &marg, i).unwrap();
                let expected = i as f64 * alpha / (1.0 + (i as f64 - 1.0) * rho);
                assert!((cone.alpha_i - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cone_indices_three_dim_example() {
        let marg = MarginalSpec::pareto(2.0).unwrap();
        let sigma = three_dim_example(0.6);
        let c2 = cone_analysis(&sigma, &marg, 2).unwrap();
        let c3 = cone_analysis(&sigma, &marg, 3).unwrap();
        assert!((c2.alpha_i - 4.0 / (1.0 + 2f64.sqrt() * 0.6)).abs() < 1e-12);
        assert!((c2.alpha_i - 2.16).abs() < 0.005);
        assert!((c3.alpha_i - 2.5).abs() < 1e-12);
        assert_eq!(c3.family[0].active.to_string(), "{1,2}");
    }

    #[test]
    fn six_dim_tie() {
        let r = 0.6;
        let s = 2f64.sqrt() * r;
        let mut rows = vec![vec![0.0; 6]; 6];
        let block1 = [[1.0, r, s], [r, 1.0, s], [s, s, 1.0]];
        for a in 0..3 {
            for b in 0..3 {
                rows[a][b] = block1[a][b];
                rows[a + 3][b + 3] = if a == b { 1.0 } else { 0.7 };
            }
        }
        let sigma = CorrelationMatrix::from_rows(&rows).unwrap();
        let cone = cone_analysis(&sigma, &MarginalSpec::pareto(1.0).unwrap(), 3).unwrap();
        assert!((cone.gamma - 1.25).abs() < 1e-12);
        assert_eq!(cone.family_listing(), "{{1,2,3},{4,5,6}}");
        assert_eq!(cone.active_listing(), "{{1,2},{4,5,6}}");
        assert_eq!(cone.card_active, 2);
        let sub = cone.subdominant();
        assert_eq!(sub.len(), 1);
        assert_eq!(sub[0].subset.to_string(), "{4,5,6}");
        assert_eq!(sub[0].log_ratio_exponent, -0.5);
    }

    #[test]
    fn mu_two_equicorrelation() {
        let rho = 0.5;
        let marg = MarginalSpec::pareto(2.0).unwrap();
        let sigma = CorrelationMatrix::equicorrelation(3, rho).unwrap();
        let cone = cone_analysis(&sigma, &marg, 2).unwrap();
        let coef = (1.0 + rho).powf(1.5) / (2.0 * PI * (1.0 - rho).sqrt());
        let mu = mu_i_rectangular(&cone, &rect(&[1, 2], &[1.0, 1.0])).unwrap();
        assert!((mu - coef).abs() < 1e-13);
        assert!((mu - 0.4135).abs() < 1e-4);

        let x = [1.0f64, 2.0, 0.5];
        let e = -2.0 / (1.0 + rho);
        let pairs = (x[0] * x[1]).powf(e) + (x[0] * x[2]).powf(e) + (x[1] * x[2]).powf(e);
        assert!((mu_i_at_least(&cone, &x).unwrap() - coef * pairs).abs() < 1e-12);
    }

    #[test]
    fn mu_two_vanishes_off_family() {
        let marg = MarginalSpec::pareto(2.0).unwrap();
        let cone = cone_analysis(&three_dim_example(0.2), &marg, 2).unwrap();
        assert_eq!(mu_i_rectangular(&cone, &rect(&[1, 2], &[1.0, 1.0])).unwrap(), 0.0);
        assert!(mu_i_rectangular(&cone, &rect(&[1, 3], &[1.0, 1.0])).unwrap() > 0.0);
        assert_eq!(cone.family_listing(), "{{1,3},{2,3}}");
        let total = mu_i_at_least(&cone, &[1.0; 3]).unwrap();
        let single = mu_i_rectangular(&cone, &rect(&[1, 3], &[1.0, 1.0])).unwrap();
        assert!((total - 2.0 * single).abs() < 1e-14);
    }

    #[test]
    fn at_least_refuses_tied_levels() {
        let marg = MarginalSpec::pareto(2.0).unwrap();
        let mut cone = cone_analysis(&three_dim_example(0.6), &marg, 2).unwrap();
        assert_eq!(cone.next_gamma, Some(1.25));
        assert!(mu_i_at_least(&cone, &[1.0; 3]).is_ok());
        cone.next_gamma = Some(cone.gamma * (1.0 + 1e-12));
        assert!(matches!(
            mu_i_at_least(&cone, &[1.0; 3]),
            Err(Error::UnsupportedDegeneracy(_))
        ));
    }

    #[test]
    fn complement_box_example() {
        let marg = MarginalSpec::pareto(2.0).unwrap();
        let sigma = CorrelationMatrix::identity(3);
        let set = TailSet::ComplementBox { x: vec![1.0; 3] };
        let p = tail_probability(&sigma, &marg, &set, 100.0).unwrap();
        assert!((p.log_probability - 3e-4f64.ln()).abs() < 1e-12);
        assert_eq!(mu_level_one(&marg, &[1.0, 2.0]).unwrap(), 1.25);
    }

    #[test]
    fn comparison_regimes() {
        let c = bivariate_comparison(2.0 / 3.0, 2.0, 1.0, 2.0, 5.0).unwrap();
        assert_eq!(c.gaussian_regime, GaussianRegime::MarginDominated);
        let c = bivariate_comparison(2.0 / 3.0, 2.0, 1.0, 1.0, 5.0).unwrap();
        assert_eq!(c.gaussian_regime, GaussianRegime::JointDominated);
        let c = bivariate_comparison(0.5, 2.0, 1.0, 2.0, 5.0).unwrap();
        assert_eq!(c.gaussian_regime, GaussianRegime::Boundary);
        let c = bivariate_comparison(-0.3, 2.0, 1.0, 1.0, 5.0).unwrap();
        assert_eq!(c.gaussian_log_asym, None);
    }

    #[test]
    fn comparison_independent_gaussian() {
        for t in [3.0, 8.0] {
            let c = bivariate_comparison(0.0, 1.0, 1.0, 1.0, t).unwrap();
            let mills = -0.5 * t * t - 0.5 * (2.0 * PI).ln() - t.ln();
            assert!((c.gaussian_log_asym.unwrap() - 2.0 * mills).abs() < 1e-12);
        }
    }
}
