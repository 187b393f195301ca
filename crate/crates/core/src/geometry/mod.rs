//! Numerical checks of geometric structure: (G-)symplecticity of the window
//! transfer map, area preservation, time reversibility, energy behaviour, and
//! the step-transition matrix of a multistep scheme on a linear system.

mod invariants;
mod structure;
mod transfer;
mod transition;

pub use invariants::{
    energy_drift, lambda_f64, reversibility_residual, scheme_reversibility_residual, window_energy_form,
    window_skew_form, DriftAccumulator, EnergyDrift,
};
pub use structure::{
    area_defect_map, area_defect_matrix, canonical_defect, finite_difference_jacobian, g_symplecticity_defect,
    symplecticity_defect, StructureDefectReport, PRESERVED_THRESHOLD,
};
pub use transfer::{transfer_matrix, TransferMatrix};
pub use transition::{orbit_residual, step_transition, StepTransition, AMBIGUITY_GAP, MAX_EIGENBASIS_CONDITION};

use crate::scheme::SchemeError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("leading block singular at h = {h}")]
    Singular { h: f64 },
    #[error("lambda matrix of `{0}` vanishes; no structure to test")]
    LambdaZero(String),
    #[error("eigenbasis of A is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("principal root ambiguous for eigenvalue {re}{im:+}i: two roots within {gap:e} of exp(h lambda)")]
    AmbiguousRoot { re: f64, im: f64, gap: f64 },
    #[error("scheme `{0}` has no scalar recurrence on eigencomponents")]
    NoScalarRecurrence(String),
    #[error("non-finite Jacobian entry")]
    NonFiniteJacobian,
    #[error("trajectory has {found} states, need at least {needed}")]
    TooShort { found: usize, needed: usize },
}
