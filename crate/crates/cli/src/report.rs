//! CSV output and number formatting.
//!
//! Schemas:
//! - `cones.csv`: level,gamma,alpha,card_active,active_sets,family,next_gamma,subdominant
//! - `estimates.csv`: set,kind,t,log_probability,probability,power_exponent,log_log_exponent,log_constant,log_mu
//! - `hill.csv`: series,k,alpha_hat
//! - `condprob.csv`: scale,kappa,t,probability,conditioning_count
//! - `verify_<label>.csv`: t,empirical,se,asymptotic,ratio,flag

use std::path::Path;

use crate::CliError;

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip representation; `NaN` and infinities as text.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
