use thiserror::Error;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("window sizing failed: {0}")]
    Sizing(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("window mismatch: configuration covers [{config_lo}, {config_hi}], log covers [{log_lo}, {log_hi}]")]
    WindowMismatch {
        config_lo: i64,
        config_hi: i64,
        log_lo: i64,
        log_hi: i64,
    },

    #[error("requested time {requested} exceeds the available horizon {horizon}")]
    TimeOutOfRange { requested: f64, horizon: f64 },

    #[error("site {site} lies outside the admissible range [{lo}, {hi}]")]
    SiteOutOfRange { site: i64, lo: i64, hi: i64 },

    #[error("unstable queue: {0}")]
    UnstableQueue(String),

    #[error("backwards path left the safe region at site {site} (safe range [{lo}, {hi}])")]
    BufferViolation { site: i64, lo: i64, hi: i64 },

    #[error("misuse: {0}")]
    Misuse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub fn check_density(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("{value} is not in (0,1)")))
    }
}

/// Checks `rho1 ∈ (0,1)` and `rho2 ∈ (0, 1 - rho1)`.
pub fn check_two_species(rho1: f64, rho2: f64) -> Result<()> {
    check_density("rho1", rho1)?;
    if !(rho2.is_finite() && rho2 > 0.0 && rho1 + rho2 < 1.0) {
        return Err(invalid(
            "rho2",
            format!("{rho2} is not in (0, 1 - rho1) = (0, {})", 1.0 - rho1),
        ));
    }
    Ok(())
}

pub fn check_asymmetry(q: f64) -> Result<()> {
    if q.is_finite() && (0.0..1.0).contains(&q) {
        Ok(())
    } else {
        Err(invalid("q", format!("{q} is not in [0,1)")))
    }
}
