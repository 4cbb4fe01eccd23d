use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use rvgc::asymptotics::{log_mu_i_at_least, log_mu_i_rectangular, ASYMPTOTIC_WARN_T};
use rvgc::simulation::{
    conditional_exceedance, default_k_grid, derived_series, hill_estimator, sample_gaussian, sample_rvgc,
    verify_on_samples, HillCurve, Samples, Selector, SimulationConfig, DEFAULT_CHUNK,
};
use rvgc::{cone_analysis, tail_estimate, IndexSubset, MarginalFamily, TailSet};

use crate::config::{Job, NamedSet, SimulationPlan};
use crate::report::{num, opt, write_csv};
use crate::CliError;

/// Report text, and the failure to exit with after printing it.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, failure: None }
    }
}

/// Cone summaries, per-set estimates over the t grid and the cone-level
/// limit measure of each set.
pub fn analyze(job: &Job, out: &Path) -> Result<Outcome, CliError> {
    let d = job.sigma.dim();
    let marg = &job.marginal;
    let mut text = String::new();
    writeln!(text, "dimension {d}, alpha {}, scale_c {}", marg.alpha, marg.scale_c).unwrap();
    writeln!(text, "level 1: alpha_1 = {}", marg.alpha).unwrap();

    let mut cones = Vec::new();
    let mut rows = Vec::new();
    for i in 2..=d {
        let cone = cone_analysis(&job.sigma, marg, i)?;
        let sub: Vec<String> = cone
            .subdominant()
            .iter()
            .map(|s| format!("{}:{}", s.subset, s.log_ratio_exponent))
            .collect();
        writeln!(
            text,
            "level {i}: alpha_{i} = {:.6}, gamma_{i} = {:.6}, |I_{i}| = {}, active sets {}, family {}",
            cone.alpha_i,
            cone.gamma,
            cone.card_active,
            cone.active_listing(),
            cone.family_listing()
        )
        .unwrap();
        for s in cone.subdominant() {
            writeln!(
                text,
                "  {} (I_S = {}) is log-subdominant: relative weight (2 alpha log t)^{}",
                s.subset, s.active, s.log_ratio_exponent
            )
            .unwrap();
        }
        if cone.next_level_ties() {
            writeln!(
                text,
                "  gamma_{} ties gamma_{i}: at-least-{i} sets are unsupported",
                i + 1
            )
            .unwrap();
        }
        rows.push(vec![
            i.to_string(),
            num(cone.gamma),
            num(cone.alpha_i),
            cone.card_active.to_string(),
            cone.active_listing(),
            cone.family_listing(),
            opt(cone.next_gamma),
            sub.join(" "),
        ]);
        cones.push(cone);
    }
    write_csv(
        &out.join("cones.csv"),
        &[
            "level",
            "gamma",
            "alpha",
            "card_active",
            "active_sets",
            "family",
            "next_gamma",
            "subdominant",
        ],
        &rows,
    )?;

    if let Some(t) = job.t_grid.iter().find(|t| **t < ASYMPTOTIC_WARN_T) {
        warn!("t = {t} is below {ASYMPTOTIC_WARN_T}; the estimates are asymptotic");
    }
    let mut rows = Vec::new();
    for named in &job.sets {
        let est = tail_estimate(&job.sigma, marg, &named.set)?;
        let level = cone_level(&named.set);
        let log_mu = match (&named.set, level) {
            (TailSet::Rectangular(r), Some(i)) => Some(log_mu_i_rectangular(&cones[i - 2], r)?),
            (TailSet::AtLeast { x, .. }, Some(i)) => Some(log_mu_i_at_least(&cones[i - 2], x)?),
            _ => None,
        };
        writeln!(
            text,
            "set {}: P ~ exp({:.6}) (2 alpha log t)^{:.6} t^-{:.6}",
            named.label, est.log_constant, est.log_log_exponent, est.power_exponent
        )
        .unwrap();
        if let (Some(i), Some(lm)) = (level, log_mu) {
            let cone = &cones[i - 2];
            if lm == f64::NEG_INFINITY {
                writeln!(
                    text,
                    "  mu_{i} = 0: the set decays at rate {:.6}, faster than alpha_{i} = {:.6}",
                    est.power_exponent, cone.alpha_i
                )
                .unwrap();
            } else {
                writeln!(text, "  mu_{i} = {}", num(lm.exp())).unwrap();
            }
        }
        for &t in &job.t_grid {
            let lp = est.evaluate_log(t);
            writeln!(text, "  t = {t}: log P = {lp:.6}").unwrap();
            rows.push(vec![
                named.label.clone(),
                kind(&named.set).to_string(),
                num(t),
                num(lp),
                num(lp.exp()),
                num(est.power_exponent),
                num(est.log_log_exponent),
                num(est.log_constant),
                opt(log_mu),
            ]);
        }
    }
    write_csv(
        &out.join("estimates.csv"),
        &[
            "set",
            "kind",
            "t",
            "log_probability",
            "probability",
            "power_exponent",
            "log_log_exponent",
            "log_constant",
            "log_mu",
        ],
        &rows,
    )?;
    Ok(Outcome::ok(text))
}

/// The cone whose limit measure charges the set, when it has one above
/// level 1.
fn cone_level(set: &TailSet) -> Option<usize> {
    match set {
        TailSet::Rectangular(r) if r.subset.len() >= 2 => Some(r.subset.len()),
        TailSet::AtLeast { i, .. } if *i >= 2 => Some(*i),
        _ => None,
    }
}

fn kind(set: &TailSet) -> &'static str {
    match set {
        TailSet::Rectangular(_) => "rectangular",
        TailSet::AtLeast { .. } => "at_least",
        TailSet::ComplementBox { .. } => "complement_box",
    }
}

fn plan(job: &Job) -> Result<&SimulationPlan, CliError> {
    let plan = job
        .simulation
        .as_ref()
        .ok_or_else(|| CliError::Config("simulation: section required".into()))?;
    if job.marginal.family != MarginalFamily::ParetoExact {
        return Err(CliError::Config(
            "scale_c: simulation needs exact Pareto margins (scale_c = 1)".into(),
        ));
    }
    Ok(plan)
}

fn simulate_samples(job: &Job, plan: &SimulationPlan) -> Result<Samples, CliError> {
    let cfg = SimulationConfig::new(job.sigma.clone(), job.marginal, plan.n, plan.seed)?
        .with_chunk(plan.chunk.unwrap_or(DEFAULT_CHUNK))?;
    Ok(sample_rvgc(&cfg)?)
}

fn hill_series(d: usize) -> Vec<(String, Selector)> {
    let mut series: Vec<(String, Selector)> = (0..d)
        .map(|j| (format!("X{}", j + 1), Selector::Coordinate(j)))
        .collect();
    if d >= 2 {
        for a in 0..d {
            for b in a + 1..d {
                let s = IndexSubset::new(vec![a, b]).expect("distinct");
                series.push((format!("min(X{},X{})", a + 1, b + 1), Selector::MinOverSet(s)));
            }
        }
        series.push(("X(2)".into(), Selector::OrderStatistic(2)));
        series.push(("min".into(), Selector::MinOverSet(IndexSubset::full(d))));
        series.push(("max".into(), Selector::MaxAll));
    }
    series
}

/// Median of the Hill curve over `k ∈ [n/100, n/20]`.
fn stable_band_median(curve: &HillCurve, n: usize) -> Option<f64> {
    let mut v: Vec<f64> = curve
        .k_values
        .iter()
        .zip(&curve.alpha_hat)
        .filter(|(k, _)| (n / 100..=n / 20).contains(*k))
        .filter_map(|(_, a)| *a)
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len();
    Some(if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    })
}

/// Hill curves for the standard series and conditional exceedance curves.
pub fn simulate(job: &Job, out: &Path) -> Result<Outcome, CliError> {
    let plan = plan(job)?;
    let samples = simulate_samples(job, plan)?;
    let d = samples.dim();
    let k_grid = plan.k_grid.clone().unwrap_or_else(|| default_k_grid(plan.n));
    let mut text = String::new();
    writeln!(text, "simulated n = {} rows, seed {}", plan.n, plan.seed).unwrap();

    let mut rows = Vec::new();
    for (label, sel) in hill_series(d) {
        let series = derived_series(&samples, &sel)?;
        let curve = hill_estimator(&series, &k_grid, &label)?;
        match stable_band_median(&curve, plan.n) {
            Some(m) => writeln!(text, "hill {label}: median over k in [n/100, n/20] = {m:.4}").unwrap(),
            None => writeln!(text, "hill {label}: no k in [n/100, n/20]").unwrap(),
        }
        for (k, a) in curve.k_values.iter().zip(&curve.alpha_hat) {
            rows.push(vec![label.clone(), k.to_string(), opt(*a)]);
        }
    }
    write_csv(&out.join("hill.csv"), &["series", "k", "alpha_hat"], &rows)?;

    let mut rows = Vec::new();
    let cp = &plan.condprob;
    if d >= 2 && cp.target != cp.condition {
        let (a, b) = (cp.target - 1, cp.condition - 1);
        let mut curves = |scale: &str, s: &Samples, kappas: &[f64], grid: &[f64]| -> Result<(), CliError> {
            for &kappa in kappas {
                for p in conditional_exceedance(&s.column(a), &s.column(b), kappa, grid)? {
                    rows.push(vec![
                        scale.to_string(),
                        num(kappa),
                        num(p.t),
                        opt(p.probability),
                        p.conditioning_count.to_string(),
                    ]);
                }
            }
            Ok(())
        };
        curves("pareto", &samples, &cp.kappas, &cp.t_grid)?;
        let normal = sample_gaussian(&job.sigma, plan.n, plan.seed, plan.chunk.unwrap_or(DEFAULT_CHUNK))?;
        curves("normal", &normal, &cp.normal_kappas, &cp.normal_t_grid)?;
        writeln!(
            text,
            "conditional curves P(X{} > t | X{} > kappa t) written",
            cp.target, cp.condition
        )
        .unwrap();
    }
    write_csv(
        &out.join("condprob.csv"),
        &["scale", "kappa", "t", "probability", "conditioning_count"],
        &rows,
    )?;
    Ok(Outcome::ok(text))
}

/// Empirical against asymptotic tails for every set; fails when a fitted
/// slope is off by more than the tolerance.
pub fn verify(job: &Job, out: &Path) -> Result<Outcome, CliError> {
    let plan = plan(job)?;
    if job.sets.is_empty() {
        return Err(CliError::Config("sets: verify needs at least one set".into()));
    }
    if job.t_grid.len() < 2 {
        return Err(CliError::Config("t_grid: verify needs at least two values".into()));
    }
    let samples = simulate_samples(job, plan)?;
    let mut text = String::new();
    let mut failures = Vec::new();
    for NamedSet {
        label,
        set,
        target_slope,
    } in &job.sets
    {
        let table = verify_on_samples(&samples, &job.sigma, &job.marginal, set, &job.t_grid)?;
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .map(|r| {
                vec![
                    num(r.t),
                    num(r.empirical),
                    num(r.std_error),
                    num(r.asymptotic),
                    num(r.ratio),
                    if r.low_confidence { "low_hits" } else { "ok" }.to_string(),
                ]
            })
            .collect();
        write_csv(
            &out.join(format!("verify_{label}.csv")),
            &["t", "empirical", "se", "asymptotic", "ratio", "flag"],
            &rows,
        )?;
        let target = target_slope.unwrap_or(table.target_slope);
        match table.fitted_slope {
            Some(fit) => {
                let rel = (fit - target).abs() / target.abs();
                let ok = rel <= job.tolerance;
                writeln!(
                    text,
                    "set {label}: fitted slope {fit:.4}, target {target:.4}, relative error {:.2}% ({})",
                    100.0 * rel,
                    if ok { "ok" } else { "FAIL" }
                )
                .unwrap();
                if !ok {
                    failures.push(format!("{label}: slope {fit:.4} vs {target:.4}"));
                }
            }
            None => {
                writeln!(text, "set {label}: fewer than two t values with enough hits (FAIL)").unwrap();
                failures.push(format!("{label}: no slope"));
            }
        }
        for r in &table.rows {
            writeln!(
                text,
                "  t = {}: empirical {:.4e} (se {:.1e}, {} hits), asymptotic {:.4e}, ratio {:.4}{}",
                r.t,
                r.empirical,
                r.std_error,
                r.hits,
                r.asymptotic,
                r.ratio,
                if r.low_confidence { " [low hits]" } else { "" }
            )
            .unwrap();
        }
    }
    let failure = (!failures.is_empty())
        .then(|| CliError::Verification(format!("tolerance {}%: {}", 100.0 * job.tolerance, failures.join("; "))));
    Ok(Outcome { text, failure })
}
