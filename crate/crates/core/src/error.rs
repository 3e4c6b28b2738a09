//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("direction index {0} out of range 0..4")]
    DirectionOutOfRange(usize),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("action mismatch: {0}")]
    ActionMismatch(String),

    #[error("Newton projection did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate fiber: auxiliary fundamental vectors are linearly dependent (pivot {pivot:.3e})")]
    DegenerateFiber { pivot: f64 },

    #[error("spinor image hits a U(1) fixed point (|K_i| = {magnitude:.3e} below floor {floor:.1e})")]
    FixedPointOnImage { magnitude: f64, floor: f64 },

    #[error("singular set: |mu ∘ u| = {magnitude:.3e} below floor {floor:.1e}")]
    SingularSet { magnitude: f64, floor: f64 },

    #[error("constraint violated: sup |mu_g ∘ u| = {magnitude:.3e} exceeds {limit}")]
    ConstraintViolated { magnitude: f64, limit: f64 },

    #[error("jet constraint violated: {0}")]
    JetConstraintViolated(String),

    #[error("flow step too large: energy increased after {halvings} halvings")]
    StepTooLarge { halvings: usize },

    #[error("spinor field is not flagged constrained but the action has auxiliary generators")]
    NotConstrained,

    #[error("snapshot i/o: {0}")]
    Snapshot(String),
}

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Snapshot(e.to_string())
    }
}
