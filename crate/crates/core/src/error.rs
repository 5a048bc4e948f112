use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("contract error: {0}")]
    Contract(String),
    #[error("contiguity error: Q places mass {escaping_mass:e} where P has none")]
    Contiguity { escaping_mass: f64 },
    #[error("partition error: {0}")]
    Partition(String),
    #[error("ordering error: {0}")]
    Ordering(String),
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("verification failure for pair ({g1}, {g2}) at alpha = {alpha}: slack {slack:e}")]
    Verification {
        g1: f64,
        g2: f64,
        alpha: f64,
        slack: f64,
    },
    #[error("lemma check failure: {name} violated at alpha = {alpha} with slack {slack:e}")]
    LemmaCheck { name: String, alpha: f64, slack: f64 },
    #[error("spec error: {0}")]
    Spec(String),
    #[error("numerical consistency error: gap {gap:e} exceeds {tolerance:e}")]
    NumericalConsistency { gap: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
