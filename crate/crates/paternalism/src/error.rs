use thiserror::Error;

/// Crate-wide error type.
///
/// `Domain` marks inputs outside the model's parameter space (probabilities
/// off the unit interval, infeasible mistake rates, unknown k values);
/// `Numeric` marks algorithmic failures (quadrature or optimizer
/// non-convergence, singular information matrices). Exit-code mapping in the
/// binary: any of these → 1, argument parsing → 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand for `Error::Domain` with format args.
macro_rules! domain_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Domain(format!($($arg)*))
    };
}

pub(crate) use domain_err;

/// Validates that `value` is finite and inside `[lo, hi]`.
pub(crate) fn check_unit_range(name: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if !value.is_finite() || value < lo || value > hi {
        return Err(domain_err!("{name} must lie in [{lo}, {hi}], got {value}"));
    }
    Ok(())
}
