//! Experiment driver: JSON configuration in, CSV files out.

mod config;
mod run;

pub use config::{
    parse_config, parse_config_str, Blocks, Experiment, ExperimentConfig, FaceConfig, FlavorPair, Initial,
    PenaltyOverride,
};
pub use run::{build_problem, certify, certify_reports, fmt17, grid_operators, run, RunSummary, CERTIFY_SIZES};

use crate::error::{Error, Result};

/// Environment fallback for `--threads`.
pub const THREADS_ENV: &str = "DPSBP_THREADS";

/// Thread count from the flag, else the environment, else rayon's default.
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return if n > 0 { Ok(flag) } else { Err(Error::InvalidConfig(vec!["--threads must be positive".into()])) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidConfig(vec![format!("{THREADS_ENV} must be a positive integer, got {v:?}")])),
        },
        Err(_) => Ok(None),
    }
}

/// Short machine-readable name of an error kind.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::UnsupportedOrder(_) => "unsupported_order",
        Error::GridTooSmall { .. } => "grid_too_small",
        Error::InvalidSpacing(_) => "invalid_spacing",
        Error::Certification(_) => "certification",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::DimensionOverflow(_) => "dimension_overflow",
        Error::IndexOutOfRange { .. } => "index_out_of_range",
        Error::SingularMatrix => "singular_matrix",
        Error::NoConvergence { .. } => "no_convergence",
        Error::ZeroAlpha => "zero_alpha",
        Error::InadmissiblePenalty(_) => "inadmissible_penalty",
        Error::UnsupportedPenalty(_) => "unsupported_penalty",
        Error::InvalidProblem(_) => "invalid_problem",
        Error::DegenerateInput(_) => "degenerate_input",
        Error::LineSearchFailure { .. } => "line_search_failure",
        Error::Parse { .. } => "parse",
        Error::InvalidConfig(_) => "invalid_config",
        Error::Io(_) => "io",
    }
}
