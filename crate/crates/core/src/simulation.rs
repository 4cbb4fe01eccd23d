//! Seeded Monte Carlo for Gaussian-copula vectors with Pareto margins.
//!
//! Row `r` of a sample draws its `d` standard normals from a ChaCha8 stream
//! keyed by the seed and positioned at word `2·d·r`, one `u64` per normal.
//! Rows are therefore identical whatever the chunking or thread count.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::asymptotics::{tail_estimate, AsymptoticEstimate, MarginalFamily, MarginalSpec, TailSet};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{ppnd16, std_normal_sf};
use crate::linalg::{CorrelationMatrix, IndexSubset, Matrix};

/// Rows with fewer exceedances than this are flagged in verification tables.
pub const LOW_HIT_THRESHOLD: usize = 50;

/// Default number of rows generated per parallel task.
pub const DEFAULT_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub sigma: CorrelationMatrix,
    pub marginal: MarginalSpec,
    pub n: usize,
    pub seed: u64,
    pub chunk: usize,
}

impl SimulationConfig {
    pub fn new(sigma: CorrelationMatrix, marginal: MarginalSpec, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return invalid("sample size must be at least 1");
        }
        if marginal.family != MarginalFamily::ParetoExact {
            return invalid("simulation requires exact Pareto margins");
        }
        Ok(Self {
            sigma,
            marginal,
            n,
            seed,
            chunk: DEFAULT_CHUNK,
        })
    }

    pub fn with_chunk(mut self, chunk: usize) -> Result<Self> {
        if chunk == 0 {
            return invalid("chunk size must be at least 1");
        }
        self.chunk = chunk;
        Ok(self)
    }
}

/// `n × d` sample stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        Ok(Self {
            n: m.rows(),
            d: m.cols(),
            data: m.to_rows().concat(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// `n` draws of `Z ~ N(0, Σ)`.
pub fn sample_gaussian(sigma: &CorrelationMatrix, n: usize, seed: u64, chunk: usize) -> Result<Samples> {
    if chunk == 0 {
        return invalid("chunk size must be at least 1");
    }
    let d = sigma.dim();
    let chol = sigma.cholesky();
    let l = chol.lower();
    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(chunk * d).enumerate().for_each(|(c, block)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(2 * (d * c * chunk) as u128);
        let mut eps = vec![0.0; d];
        for row in block.chunks_exact_mut(d) {
            for e in eps.iter_mut() {
                *e = ppnd16(unit_open(rng.next_u64()));
            }
            for (i, z) in row.iter_mut().enumerate() {
                *z = (0..=i).map(|k| l.get(i, k) * eps[k]).sum();
            }
        }
    });
    Ok(Samples { n, d, data })
}

/// `X_j = Φ̄(Z_j)^{−1/α}`, exact Pareto(α) margins with copula `Σ`.
pub fn sample_rvgc(cfg: &SimulationConfig) -> Result<Samples> {
    if cfg.marginal.family != MarginalFamily::ParetoExact {
        return invalid("simulation requires exact Pareto margins");
    }
    let mut s = sample_gaussian(&cfg.sigma, cfg.n, cfg.seed, cfg.chunk)?;
    let inv_alpha = -1.0 / cfg.marginal.alpha;
    s.data
        .par_iter_mut()
        .for_each(|z| *z = std_normal_sf(*z).powf(inv_alpha));
    Ok(s)
}

/// Per-row reductions of a sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    /// `min_{s∈S} X_s`.
    MinOverSet(IndexSubset),
    /// The `rank`-th largest coordinate, `rank = 1` being the maximum.
    OrderStatistic(usize),
    MaxAll,
    /// Raw zero-based coordinate.
    Coordinate(usize),
}

pub fn derived_series(samples: &Samples, selector: &Selector) -> Result<Vec<f64>> {
    let d = samples.dim();
    match selector {
        Selector::MinOverSet(s) => {
            if s.is_empty() {
                return invalid("minimum over an empty set");
            }
            s.check_within(d)?;
            Ok(samples
                .rows()
                .map(|r| s.iter().map(|j| r[j]).fold(f64::INFINITY, f64::min))
                .collect())
        }
        Selector::OrderStatistic(rank) => {
            if *rank == 0 || *rank > d {
                return invalid(format!("order statistic {rank} outside 1..={d}"));
            }
            Ok(samples.rows().map(|r| kth_largest(r, *rank)).collect())
        }
        Selector::MaxAll => Ok(samples
            .rows()
            .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()),
        Selector::Coordinate(j) => {
            if *j >= d {
                return invalid(format!("coordinate {} outside 1..={d}", j + 1));
            }
            Ok(samples.column(*j))
        }
    }
}

fn kth_largest(row: &[f64], rank: usize) -> f64 {
    let mut v = row.to_vec();
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    v[rank - 1]
}

/// Statistic `W` with `{X ∈ tA} = {W > t}`.
pub fn set_statistic(samples: &Samples, set: &TailSet) -> Result<Vec<f64>> {
    set.validate(samples.dim())?;
    Ok(match set {
        TailSet::Rectangular(r) => samples
            .rows()
            .map(|row| {
                r.subset
                    .iter()
                    .zip(&r.thresholds)
                    .map(|(j, x)| row[j] / x)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect(),
        TailSet::AtLeast { x, i } => samples
            .rows()
            .map(|row| {
                let scaled: Vec<f64> = row.iter().zip(x).map(|(v, x)| v / x).collect();
                kth_largest(&scaled, *i)
            })
            .collect(),
        TailSet::ComplementBox { x } => samples
            .rows()
            .map(|row| row.iter().zip(x).map(|(v, x)| v / x).fold(f64::NEG_INFINITY, f64::max))
            .collect(),
    })
}

/// Hill estimates along a grid of `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HillCurve {
    pub series_label: String,
    pub k_values: Vec<usize>,
    /// `None` where the `k` upper order statistics are all equal.
    pub alpha_hat: Vec<Option<f64>>,
}

/// `1/H_k` with `H_k = (1/k) Σ_{i≤k} log(X_(i)/X_(k+1))` over descending
/// order statistics.
pub fn hill_estimator(data: &[f64], k_grid: &[usize], label: &str) -> Result<HillCurve> {
    if let Some(v) = data.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return invalid(format!("Hill estimator needs positive finite data, got {v}"));
    }
    if let Some(&k) = k_grid.iter().find(|&&k| k == 0 || k >= data.len()) {
        return invalid(format!("k = {k} outside 1..{} for n = {}", data.len(), data.len()));
    }
    let mut logs: Vec<f64> = data.iter().map(|v| v.ln()).collect();
    logs.par_sort_unstable_by(|a, b| b.total_cmp(a));
    let kmax = k_grid.iter().copied().max().unwrap_or(0);
    let mut prefix = Vec::with_capacity(kmax + 1);
    prefix.push(0.0);
    for v in &logs[..kmax] {
        prefix.push(prefix.last().unwrap() + v);
    }
    let alpha_hat = k_grid
        .iter()
        .map(|&k| {
            let h = prefix[k] / k as f64 - logs[k];
            (h > 0.0).then(|| 1.0 / h)
        })
        .collect();
    Ok(HillCurve {
        series_label: label.to_string(),
        k_values: k_grid.to_vec(),
        alpha_hat,
    })
}

/// 40 log-spaced `k` in `[10, n/4]`, deduplicated.
pub fn default_k_grid(n: usize) -> Vec<usize> {
    let hi = (n / 4).min(n.saturating_sub(1));
    if hi < 10 {
        return (1..=hi).collect();
    }
    let (a, b) = (10f64.ln(), (hi as f64).ln());
    let mut grid: Vec<usize> = (0..40)
        .map(|i| (a + (b - a) * i as f64 / 39.0).exp().round() as usize)
        .map(|k| k.clamp(10, hi))
        .collect();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalTail {
    pub t: f64,
    pub probability: f64,
    /// Binomial standard error `√(p(1−p)/n)`.
    pub std_error: f64,
    pub hits: usize,
}

/// Fraction of `data` strictly above each `t`.
pub fn empirical_tail(data: &[f64], t_grid: &[f64]) -> Result<Vec<EmpiricalTail>> {
    if data.is_empty() {
        return invalid("empirical tail of an empty sample");
    }
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid("t grid must be strictly increasing");
    }
    let mut sorted = data.to_vec();
    sorted.par_sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let hits = sorted.len() - sorted.partition_point(|&v| v <= t);
            let p = hits as f64 / n;
            EmpiricalTail {
                t,
                probability: p,
                std_error: (p * (1.0 - p) / n).sqrt(),
                hits,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRow {
    pub t: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub hits: usize,
    pub asymptotic: f64,
    /// `empirical / asymptotic`.
    pub ratio: f64,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationTable {
    pub rows: Vec<VerificationRow>,
    pub estimate: AsymptoticEstimate,
    /// Least-squares slope of `log empirical` against `log t` over the
    /// confident rows; absent with fewer than two.
    pub fitted_slope: Option<f64>,
    /// `−a` from the estimate.
    pub target_slope: f64,
}

impl VerificationTable {
    /// `|fitted − target| / |target|`.
    pub fn slope_relative_error(&self) -> Option<f64> {
        self.fitted_slope
            .map(|s| (s - self.target_slope).abs() / self.target_slope.abs())
    }
}

/// Samples from `cfg` and compares empirical and asymptotic tails of `set`.
pub fn verify_asymptotics(cfg: &SimulationConfig, set: &TailSet, t_grid: &[f64]) -> Result<VerificationTable> {
    let samples = sample_rvgc(cfg)?;
    verify_on_samples(&samples, &cfg.sigma, &cfg.marginal, set, t_grid)
}

/// As [`verify_asymptotics`] on an existing sample.
pub fn verify_on_samples(
    samples: &Samples,
    sigma: &CorrelationMatrix,
    marginal: &MarginalSpec,
    set: &TailSet,
    t_grid: &[f64],
) -> Result<VerificationTable> {
    if samples.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            found: samples.dim(),
        });
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 1.0 && t.is_finite())) {
        return invalid(format!("verification scale t = {t} must exceed 1"));
    }
    let estimate = tail_estimate(sigma, marginal, set)?;
    let stat = set_statistic(samples, set)?;
    let rows: Vec<VerificationRow> = empirical_tail(&stat, t_grid)?
        .into_iter()
        .map(|e| {
            let asymptotic = estimate.evaluate(e.t);
            VerificationRow {
                t: e.t,
                empirical: e.probability,
                std_error: e.std_error,
                hits: e.hits,
                asymptotic,
                ratio: e.probability / asymptotic,
                low_confidence: e.hits < LOW_HIT_THRESHOLD,
            }
        })
        .collect();
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.low_confidence)
        .map(|r| (r.t.ln(), r.empirical.ln()))
        .collect();
    Ok(VerificationTable {
        fitted_slope: least_squares_slope(&points),
        target_slope: -estimate.power_exponent,
        estimate,
        rows,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalPoint {
    pub t: f64,
    /// `P(target > t | condition > κt)`; absent when nothing conditions.
    pub probability: Option<f64>,
    pub conditioning_count: usize,
}

/// Empirical `P(A > t | B > κ·t)` along `t_grid`.
pub fn conditional_exceedance(
    target: &[f64],
    condition: &[f64],
    kappa: f64,
    t_grid: &[f64],
) -> Result<Vec<ConditionalPoint>> {
    if target.len() != condition.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            found: condition.len(),
        });
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return invalid(format!("kappa = {kappa} must be positive"));
    }
    Ok(t_grid
        .iter()
        .map(|&t| {
            let (joint, cond) = target
                .par_iter()
                .zip(condition)
                .filter(|(_, &b)| b > kappa * t)
                .map(|(&a, _)| (usize::from(a > t), 1usize))
                .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
            ConditionalPoint {
                t,
                probability: (cond > 0).then(|| joint as f64 / cond as f64),
                conditioning_count: cond,
            }
        })
        .collect())
}

/// Pearson correlation of the normal scores `Φ⁻¹(rank/(n+1))` of each
/// column, a margin-free estimate of the copula correlation.
pub fn normal_scores_correlation(samples: &Samples) -> Result<Matrix> {
    let (n, d) = (samples.n(), samples.dim());
    if n < 2 {
        return invalid("need at least two rows");
    }
    let scores: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let col = samples.column(j);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_unstable_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut s = vec![0.0; n];
            for (rank, &i) in order.iter().enumerate() {
                s[i] = ppnd16((rank + 1) as f64 / (n + 1) as f64);
            }
            s
        })
        .collect();
    let norm: Vec<f64> = scores
        .iter()
        .map(|s| s.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    Ok(Matrix::from_fn(d, d, |a, b| {
        if a == b {
            1.0
        } else {
            scores[a].iter().zip(&scores[b]).map(|(x, y)| x * y).sum::<f64>() / (norm[a] * norm[b])
        }
    }))
}
