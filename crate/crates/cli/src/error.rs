use thiserror::Error;

/// Failures of a command, each with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unsupported degeneracy: {0}")]
    Degeneracy(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Degeneracy(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

/// Library errors reaching a command stem from the job's inputs, apart
/// from degenerate ties and numerical breakdown.
impl From<rvgc::Error> for CliError {
    fn from(e: rvgc::Error) -> Self {
        match e {
            rvgc::Error::UnsupportedDegeneracy(m) => CliError::Degeneracy(m),
            rvgc::Error::SolverInconsistency(_) => CliError::Runtime(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use rvgc::asymptotics::{cone_analysis, log_mu_i_at_least};
    use rvgc::{CorrelationMatrix, MarginalSpec};

    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Runtime(String::new()).exit_code(), 1);
        assert_eq!(CliError::Config(String::new()).exit_code(), 2);
        assert_eq!(CliError::Degeneracy(String::new()).exit_code(), 3);
        assert_eq!(CliError::Verification(String::new()).exit_code(), 4);
    }

    #[test]
    fn library_errors_map_to_codes() {
        let bad = CorrelationMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap_err();
        assert_eq!(CliError::from(bad).exit_code(), 2);
        let broke = rvgc::Error::SolverInconsistency("no candidate".into());
        assert_eq!(CliError::from(broke).exit_code(), 1);
    }

    // No valid matrix found so far has γ_{i+1} = γ_i, so the tie is forced.
    #[test]
    fn tied_levels_exit_with_three() {
        let sigma = CorrelationMatrix::equicorrelation(3, 0.3).unwrap();
        let mut cone = cone_analysis(&sigma, &MarginalSpec::pareto(2.0).unwrap(), 2).unwrap();
        cone.next_gamma = Some(cone.gamma);
        let err = log_mu_i_at_least(&cone, &[1.0; 3]).unwrap_err();
        assert_eq!(CliError::from(err).exit_code(), 3);
    }
}
