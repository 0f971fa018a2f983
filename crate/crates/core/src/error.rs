use thiserror::Error;

use crate::pwl::PwlError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Pwl(#[from] PwlError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid expression: {0}")]
    InvalidExpr(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("f(0) = +inf: the origin is not in the domain")]
    OriginNotInDomain,
    #[error("measure has an atom at 0")]
    AtomAtZero,
    #[error("measure has no atoms")]
    EmptyMeasure,
    #[error("orbit quadrature is not available in dimension {0}")]
    UnsupportedDimension(usize),
    #[error("zero vector has no canonical rotation")]
    ZeroVector,
    #[error("support data is not 1-homogeneous: {0}")]
    NotHomogeneous(String),
    #[error("kernel is not affine in y beyond +-R at x = {x}, y = {y} (defect {defect:e})")]
    TailNotAffine { x: f64, y: f64, defect: f64 },
    #[error("kernel is not affine in x on A at x = {x}, y = {y} (defect {defect:e})")]
    XSliceNotAffine { x: f64, y: f64, defect: f64 },
    #[error("x = {0} lies outside A")]
    OutsideA(f64),
    #[error("({x}, {y}) lies outside the kernel's validity box")]
    OutsideValidity { x: f64, y: f64 },
    #[error("phi is not even: phi({t}) != phi({})", -t)]
    PhiNotEven { t: f64 },
    #[error("phi is negative at {t}")]
    PhiNegative { t: f64 },
    #[error("base + perturbation is not convex (base #{base})")]
    PerturbationNotConvex { base: usize },
    #[error("evaluation produced +inf where a finite value is required: {0}")]
    InfiniteValue(String),
}
