//! Multistep time stepping for Hamiltonian systems.
//!
//! The `*_step` functions are pure: they take a window `y_n..y_{n+k-1}` and
//! return `y_{n+k}`. [`Propagator`] advances a trajectory one state at a time
//! with O(k) memory, and [`integrate`] collects a full [`Trajectory`].

mod propagate;
mod start;
mod step;

pub use propagate::{integrate, Propagator, Trajectory};
pub use start::{exact_start, rk4_start, rk4_step, starting_states};
pub use step::{
    generalized_residual, generalized_step, implicit_solve, lmm_residual, lmm_step, method_residual,
    method_step, oneleg_residual, oneleg_step, partitioned_residual, partitioned_step, pc_step,
    solve_linear_implicit,
};

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Starter {
    /// classical four-stage Runge–Kutta
    Rk4,
    /// exact flow; linear systems only
    Exact,
}

impl Starter {
    pub fn as_str(self) -> &'static str {
        match self {
            Starter::Rk4 => "rk4",
            Starter::Exact => "exact",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rk4" => Some(Starter::Rk4),
            "exact" => Some(Starter::Exact),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// relative update tolerance of implicit iterations
    pub tolerance: f64,
    pub max_iterations: usize,
    pub starter: Starter,
    /// fixed-point relaxation factor in (0, 1]
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-14,
            max_iterations: 50,
            starter: Starter::Rk4,
            damping: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn with_starter(mut self, starter: Starter) -> Self {
        self.starter = starter;
        self
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        if !(self.tolerance > 0.0) {
            return Err(IntegrateError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations < 1 {
            return Err(IntegrateError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(IntegrateError::InvalidConfig(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrateError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("step size must be finite and nonzero, got {0}")]
    InvalidStep(f64),
    #[error("window holds {found} states, expected {expected}")]
    WindowLength { expected: usize, found: usize },
    #[error("state has dimension {found}, field expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("implicit iteration did not converge in {iterations} iterations (last update {update:e})")]
    NotConverged { iterations: usize, update: f64 },
    #[error("implicit iteration diverged at iteration {iteration} (update {update:e})")]
    Diverged { iteration: usize, update: f64 },
    #[error("implicit system singular at h = {h}: alpha_k/(h beta_k) = {ratio} is an eigenvalue of A")]
    Singular { h: f64, ratio: f64 },
    #[error("one-leg method requires sigma(1) = 1, found {0}")]
    Normalization(Rational),
    #[error("generalized step requires a gamma matrix")]
    MissingGamma,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("non-finite state at step {index}")]
    NonFinite { index: usize },
    #[error("steps = {steps} is smaller than the step count k = {k}")]
    TooFewSteps { steps: usize, k: usize },
    #[error("exact starting values need a linear system")]
    NotLinear,
    #[error("step {index}: {source}")]
    Aborted {
        index: usize,
        #[source]
        source: Box<IntegrateError>,
    },
}

impl IntegrateError {
    /// Index of the failing state, when the error happened during a run.
    pub fn failing_index(&self) -> Option<usize> {
        match self {
            IntegrateError::NonFinite { index } | IntegrateError::Aborted { index, .. } => Some(*index),
            _ => None,
        }
    }
}
