use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("quadrature did not reach tolerance (estimate {estimate:e}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },
    #[error("extrapolation unstable: successive extrapolants differ by {spread:e}")]
    Extrapolation { spread: f64 },
    #[error("resolution: {0}")]
    Resolution(String),
    #[error("root not bracketed: {0}")]
    Bracket(String),
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("step size underflow at state {state:e}")]
    StepUnderflow { state: f64 },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        domain,
    }
}
