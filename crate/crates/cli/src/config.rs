//! TOML job description.
//!
//! ```toml
//! sigma = [[1.0, 0.5], [0.5, 1.0]]
//! alpha = 2.0
//! t_grid = [10.0, 100.0, 1000.0]
//! tolerance_pct = 15
//!
//! [[sets]]
//! kind = "rectangular"      # or "at_least", "complement_box"
//! indices = [1, 2]          # one-based, rectangular only
//! thresholds = [1.0, 1.0]
//!
//! [simulation]
//! n = 1000000
//! seed = 7
//! ```

use std::path::Path;

use rvgc::{CorrelationMatrix, MarginalFamily, MarginalSpec, RectangularSet, TailSet};
use serde::Deserialize;

use crate::CliError;

/// Default slope tolerance for `verify`, in percent.
pub const DEFAULT_TOLERANCE_PCT: f64 = 15.0;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub sigma: Vec<Vec<f64>>,
    pub alpha: f64,
    #[serde(default = "unit")]
    pub scale_c: f64,
    #[serde(default)]
    pub sets: Vec<SetConfig>,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    pub simulation: Option<SimulationPlan>,
    /// Relative slope tolerance in percent.
    pub tolerance_pct: Option<f64>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Rectangular,
    AtLeast,
    ComplementBox,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetConfig {
    pub kind: SetKind,
    pub label: Option<String>,
    /// One-based coordinates of a rectangular set.
    pub indices: Option<Vec<usize>>,
    pub thresholds: Vec<f64>,
    /// `i` of an at-least set.
    pub count: Option<usize>,
    /// Overrides the theoretical slope in `verify`.
    pub target_slope: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationPlan {
    pub n: usize,
    pub seed: u64,
    pub k_grid: Option<Vec<usize>>,
    pub chunk: Option<usize>,
    #[serde(default)]
    pub condprob: CondProbPlan,
}

/// Conditional exceedance curves `P(A > t | B > κt)` for one coordinate pair.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CondProbPlan {
    pub target: usize,
    pub condition: usize,
    pub kappas: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// Same curves on the underlying normal scale.
    pub normal_kappas: Vec<f64>,
    pub normal_t_grid: Vec<f64>,
}

impl Default for CondProbPlan {
    fn default() -> Self {
        Self {
            target: 1,
            condition: 2,
            kappas: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            t_grid: (1..=50).map(f64::from).collect(),
            normal_kappas: vec![1.0, 2.0, 2.5],
            normal_t_grid: (1..=20).map(|k| f64::from(k) / 10.0).collect(),
        }
    }
}

/// A set after validation, with the label used in reports and file names.
#[derive(Debug, Clone)]
pub struct NamedSet {
    pub label: String,
    pub set: TailSet,
    pub target_slope: Option<f64>,
}

/// Validated inputs for the library.
#[derive(Debug, Clone)]
pub struct Job {
    pub sigma: CorrelationMatrix,
    pub marginal: MarginalSpec,
    pub sets: Vec<NamedSet>,
    pub t_grid: Vec<f64>,
    pub simulation: Option<SimulationPlan>,
    /// Relative slope tolerance as a fraction.
    pub tolerance: f64,
}

fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{name}: {msg}"))
}

pub fn load(path: &Path) -> Result<Job, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Job, CliError> {
    let raw: JobConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    raw.validate()
}

impl JobConfig {
    pub fn validate(self) -> Result<Job, CliError> {
        let sigma = CorrelationMatrix::from_rows(&self.sigma).map_err(|e| field("sigma", e))?;
        let d = sigma.dim();
        if d > rvgc::linalg::MAX_CONE_DIM {
            return Err(field(
                "sigma",
                format!("dimension {d} exceeds {}", rvgc::linalg::MAX_CONE_DIM),
            ));
        }
        let family = if self.scale_c == 1.0 {
            MarginalFamily::ParetoExact
        } else {
            MarginalFamily::AsymptoticOnly
        };
        let marginal = MarginalSpec::new(self.alpha, self.scale_c, family).map_err(|e| field("alpha/scale_c", e))?;

        if let Some(t) = self.t_grid.iter().find(|t| !(**t > 1.0 && t.is_finite())) {
            return Err(field("t_grid", format!("value {t} must exceed 1")));
        }
        if self.t_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(field("t_grid", "must be strictly increasing"));
        }

        let sets = self
            .sets
            .iter()
            .enumerate()
            .map(|(k, s)| s.resolve(k, d))
            .collect::<Result<Vec<_>, _>>()?;

        if let Some(dup) = sets
            .iter()
            .enumerate()
            .find_map(|(k, s)| sets[..k].iter().any(|o| o.label == s.label).then_some(&s.label))
        {
            return Err(field("sets", format!("duplicate label {dup:?}")));
        }
        let pct = self.tolerance_pct.unwrap_or(DEFAULT_TOLERANCE_PCT);
        let tolerance = check_tolerance(pct).map_err(|m| field("tolerance_pct", m))?;
        if let Some(sim) = &self.simulation {
            sim.check(d)?;
        }
        Ok(Job {
            sigma,
            marginal,
            sets,
            t_grid: self.t_grid,
            simulation: self.simulation,
            tolerance,
        })
    }
}

impl SetConfig {
    fn resolve(&self, k: usize, d: usize) -> Result<NamedSet, CliError> {
        let name = format!("sets[{k}]");
        let set = match self.kind {
            SetKind::Rectangular => {
                let indices = self
                    .indices
                    .as_ref()
                    .ok_or_else(|| field(&format!("{name}.indices"), "required for rectangular sets"))?;
                if let Some(j) = indices.iter().find(|j| **j == 0 || **j > d) {
                    return Err(field(&format!("{name}.indices"), format!("index {j} outside 1..={d}")));
                }
                RectangularSet::from_one_based(indices, &self.thresholds)
                    .map(TailSet::Rectangular)
                    .map_err(|e| field(&format!("{name}.thresholds"), e))?
            }
            SetKind::AtLeast => {
                let i = self
                    .count
                    .ok_or_else(|| field(&format!("{name}.count"), "required for at_least sets"))?;
                TailSet::AtLeast {
                    x: self.thresholds.clone(),
                    i,
                }
            }
            SetKind::ComplementBox => TailSet::ComplementBox {
                x: self.thresholds.clone(),
            },
        };
        set.validate(d).map_err(|e| field(&name, e))?;
        if let Some(s) = self.target_slope {
            if !(s < 0.0 && s.is_finite()) {
                return Err(field(&format!("{name}.target_slope"), format!("{s} must be negative")));
            }
        }
        let label = match &self.label {
            Some(l) if l.is_empty() || !l.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') => {
                return Err(field(
                    &format!("{name}.label"),
                    format!("{l:?} must be nonempty [A-Za-z0-9_-]"),
                ));
            }
            Some(l) => l.clone(),
            None => default_label(&set),
        };
        Ok(NamedSet {
            label,
            set,
            target_slope: self.target_slope,
        })
    }
}

/// Converts a percentage to a fraction.
pub fn check_tolerance(pct: f64) -> Result<f64, String> {
    if pct > 0.0 && pct.is_finite() {
        Ok(pct / 100.0)
    } else {
        Err(format!("{pct} must be a positive percentage"))
    }
}

fn default_label(set: &TailSet) -> String {
    match set {
        TailSet::Rectangular(r) => {
            let idx: Vec<String> = r.subset.iter().map(|j| (j + 1).to_string()).collect();
            format!("rect_{}", idx.join("_"))
        }
        TailSet::AtLeast { i, .. } => format!("at_least_{i}"),
        TailSet::ComplementBox { .. } => "complement_box".to_string(),
    }
}

impl SimulationPlan {
    fn check(&self, d: usize) -> Result<(), CliError> {
        if self.n < 2 {
            return Err(field("simulation.n", "need at least 2 samples"));
        }
        if self.chunk == Some(0) {
            return Err(field("simulation.chunk", "must be positive"));
        }
        if let Some(k) = &self.k_grid {
            if let Some(bad) = k.iter().find(|k| **k == 0 || **k >= self.n) {
                return Err(field("simulation.k_grid", format!("k = {bad} outside 1..{}", self.n)));
            }
        }
        let c = &self.condprob;
        for (name, j) in [("target", c.target), ("condition", c.condition)] {
            if j == 0 || j > d {
                return Err(field(
                    &format!("simulation.condprob.{name}"),
                    format!("index {j} outside 1..={d}"),
                ));
            }
        }
        for (name, v) in [("kappas", &c.kappas), ("normal_kappas", &c.normal_kappas)] {
            if let Some(k) = v.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
                return Err(field(
                    &format!("simulation.condprob.{name}"),
                    format!("{k} must be positive"),
                ));
            }
        }
        for (name, v) in [("t_grid", &c.t_grid), ("normal_t_grid", &c.normal_t_grid)] {
            if v.iter().any(|t| !t.is_finite()) {
                return Err(field(&format!("simulation.condprob.{name}"), "values must be finite"));
            }
        }
        Ok(())
    }
}
