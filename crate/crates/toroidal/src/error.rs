use thiserror::Error;

/// Errors raised across the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("iteration cap of {cap} reached in {what}")]
    IterationCap { what: &'static str, cap: usize },
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("invariant `{name}` violated: {detail}")]
    Invariant { name: &'static str, detail: String },
    #[error("no event found on [{t0}, {t1}]")]
    NoEvent { t0: f64, t1: f64 },
    #[error("degenerate immersion at grid point ({i}, {k}): {detail}")]
    Immersion { i: usize, k: usize, detail: String },
    #[error("grid mismatch: {0}")]
    Grid(String),
    #[error("solvability violation: kernel component {coeff:e} exceeds tolerance")]
    Solvability { coeff: f64 },
    #[error("singular linear system in {0}")]
    Singular(&'static str),
    #[error("radius {radius} below the curvature floor {floor}")]
    BelowFloor { radius: f64, floor: f64 },
    #[error("fixed point diverged after {iterations} iterations (step norm {step:e})")]
    Divergence { iterations: usize, step: f64 },
    #[error("no sign change of λ⁰ on the bracket; sweep: {sweep:?}")]
    NoSignChange { sweep: Vec<(f64, f64)> },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
