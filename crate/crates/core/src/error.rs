use thiserror::Error;

/// Errors raised by the numeric core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("frequency {f_hz} Hz lies within the guard band of a tangent pole")]
    PoleProximity { f_hz: f64 },

    #[error("no {mode} resonance in band [{f_min}, {f_max}] Hz")]
    NoRootInBand { mode: char, f_min: f64, f_max: f64 },

    #[error("{count} {mode} resonances in band [{f_min}, {f_max}] Hz; narrow the band")]
    MultipleRootsInBand {
        mode: char,
        count: usize,
        f_min: f64,
        f_max: f64,
    },

    #[error("mode frequencies do not satisfy the boundary conditions (residual {residual:e})")]
    InconsistentModes { residual: f64 },

    #[error("scattering denominator vanishes (|D| = {magnitude:e}); device at or above oscillation threshold")]
    Pole { magnitude: f64 },

    #[error("idler extinction requires a nonzero pump rate")]
    ZeroPump,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("pump rate {xi:e} exceeds the oscillation threshold {threshold:e}")]
    ThresholdViolation { xi: f64, threshold: f64 },

    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("ill-conditioned fit (condition number {condition:e}): {reason}")]
    IllConditioned { condition: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite, got {value}"),
        })
    }
}
