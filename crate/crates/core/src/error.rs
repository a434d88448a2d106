use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole at z = {0}")]
    Pole(Complex64),
    #[error("point {0} lies in E[2]")]
    TwoTorsion(Complex64),
    #[error("{0} failed to converge")]
    NoConvergence(&'static str),
    #[error("branch tracking failed: jump of {0:.3e}")]
    Branch(f64),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
