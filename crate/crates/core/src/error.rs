use thiserror::Error;

/// Errors produced by the simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A value lies outside the range where a fit or model is valid.
    #[error("{quantity} = {value} outside valid range [{min}, {max}]")]
    Range {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    /// Species whose structure the gate modules cannot handle.
    #[error("unsupported species {name}: nuclear spin {nuclear_spin} (only I = 1/2 is supported)")]
    UnsupportedSpecies { name: String, nuclear_spin: f64 },
    /// Iterative solver did not reach its tolerance.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    /// A numerical routine failed for a reason other than convergence.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Problem size above the supported cap.
    #[error("capacity exceeded: {what} = {value} (max {max})")]
    Capacity {
        what: &'static str,
        value: usize,
        max: usize,
    },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("unstable trap parameters: a = {a}, q = {q}")]
    Unstable { a: f64, q: f64 },
}

impl Error {
    /// True for failures of numerical machinery, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
