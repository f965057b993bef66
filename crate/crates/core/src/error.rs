use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("basis columns are not orthonormal (max |U^H U - I| = {max_deviation:.3e})")]
    NotOrthonormal { max_deviation: f64 },

    #[error("basis has a row with squared norm {eta_lower:.3e}; the bounds need eta_L > 0")]
    DegenerateRow { eta_lower: f64 },

    #[error("{0} requires a stationary signal (constant component variances)")]
    NotStationary(&'static str),

    #[error("slot {slot} carries zero signal variance")]
    ZeroSlotVariance { slot: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
