use thiserror::Error;

use crate::fields::Vec3;

#[derive(Debug, Error)]
pub enum Error {
    #[error("magnetic field strength {magnitude:e} is below the singular-field threshold at {position:?}")]
    SingularField { position: [f64; 3], magnitude: f64 },

    #[error("point {position:?} lies outside the domain of the {model} field model")]
    OutsideDomain { model: &'static str, position: [f64; 3] },

    #[error("implicit step did not converge after {iterations} iterations (residual {residual:e})")]
    StepFailure { iterations: usize, residual: f64 },

    #[error("gyrophase 1-form is undefined at |u_perp| = {0:e}")]
    GyrophaseSingular(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn singular(x: &Vec3, magnitude: f64) -> Self {
        Error::SingularField {
            position: [x.x, x.y, x.z],
            magnitude,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
