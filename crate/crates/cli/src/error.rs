use thiserror::Error;

use crate::config::ConfigError;

/// Failures of a CLI run, each tied to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("theorem hypotheses violated (pass --exploratory to run anyway):\n  {}", .0.join("\n  "))]
    Hypotheses(Vec<String>),
    #[error("{0}")]
    NonConvergence(String),
    #[error("statistical checks failed: {0}")]
    Statistical(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Hypotheses(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Statistical(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

fn is_non_convergence(e: &bhtlab::Error) -> bool {
    match e {
        bhtlab::Error::NotConverged { .. } | bhtlab::Error::TimeNotConverged { .. } => true,
        bhtlab::Error::Sample { source, .. } => is_non_convergence(source),
        _ => false,
    }
}

fn is_configuration(e: &bhtlab::Error) -> bool {
    match e {
        bhtlab::Error::InvalidParameter(_)
        | bhtlab::Error::Hypothesis(_)
        | bhtlab::Error::Domain(_)
        | bhtlab::Error::ModeOutsideLattice(_) => true,
        bhtlab::Error::Sample { source, .. } => is_configuration(source),
        _ => false,
    }
}

impl From<bhtlab::Error> for CliError {
    fn from(e: bhtlab::Error) -> Self {
        if is_non_convergence(&e) {
            CliError::NonConvergence(e.to_string())
        } else if is_configuration(&e) {
            CliError::Config(ConfigError::Invalid(e.to_string()))
        } else {
            CliError::Other(e.into())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let nc = bhtlab::Error::NotConverged {
            iterations: 3,
            last_increment: 1.0,
            diagnostics: Box::new(bhtlab::static_solver::SolveDiagnostics {
                iterations: 3,
                increment_norms: vec![1.0; 3],
                residual: 1.0,
                estimated_ratio: 1.0,
                converged: false,
            }),
        };
        let wrapped = bhtlab::Error::Sample { sample: 4, seed: 1, source: Box::new(nc) };
        assert_eq!(CliError::from(wrapped).exit_code(), 3);
        assert_eq!(CliError::from(bhtlab::Error::Domain("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(bhtlab::Error::InsufficientData("x".into())).exit_code(), 1);
        assert_eq!(CliError::Statistical("x".into()).exit_code(), 4);
        assert_eq!(CliError::Hypotheses(vec!["β < -2".into()]).exit_code(), 2);
    }
}
