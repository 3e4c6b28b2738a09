//! Centralized tolerances and floors.
//!
//! Every threshold used by the verification suites and the acceptance gate is
//! pinned here. Exact-algebra checks sit near machine precision; differential
//! identities are gated by second-order grid-refinement ratios.

/// Exact quaternion/Clifford identities (anticommutation, I_i I_j = I_k).
pub const EXACT_ALGEBRA: f64 = 1e-12;

/// Identities that are exact up to a short chain of roundings.
pub const EXACT_IDENTITY: f64 = 1e-12;

/// Moment-map defining identity, central finite difference vs Kähler pairing.
pub const MOMENT_IDENTITY: f64 = 1e-6;

/// Step for the moment-map finite-difference probe.
pub const MOMENT_FD_STEP: f64 = 1e-4;

/// Euler-field / permuting-action finite-difference identity.
pub const EULER_FD: f64 = 1e-8;

/// Discrete adjointness ⟨Du, v⟩ = ⟨u, D*v⟩ and other transpose-exact checks.
pub const ADJOINT: f64 = 1e-10;

/// Sitewise horizontality after connection recovery.
pub const HORIZONTAL: f64 = 1e-10;

/// Local-model jet identities (exact derivatives, no discretization).
pub const JET_IDENTITY: f64 = 1e-10;

/// Jet admissibility validation (Dirac relations, normalization).
pub const JET_CONSTRAINT: f64 = 1e-12;

/// Sitewise splitting Pythagoras |∇Ω|² = |N|² + |dΩ|².
pub const PYTHAGORAS: f64 = 1e-9;

/// Frame-choice independence of the twistor-equation residual.
pub const FRAME_INVARIANCE: f64 = 1e-9;

/// Relative accuracy of the energy gradient vs directional differences.
pub const GRADIENT_REL: f64 = 1e-5;

/// Step for the energy-gradient directional probe.
pub const GRADIENT_FD_STEP: f64 = 1e-5;

/// Connection recovery: ‖D̸u‖ after solving, and uniqueness across fiducials.
pub const RECOVERY: f64 = 1e-10;

/// Newton projection onto the auxiliary zero level set.
pub const NEWTON: f64 = 1e-12;

/// Newton iteration cap.
pub const NEWTON_MAX_ITER: usize = 50;

/// Constrained-spinor flag requirement: sup ‖mu_g ∘ u‖ at every site.
pub const CONSTRAINED_SUP: f64 = 1e-10;

/// Hard error threshold for data far off the auxiliary level set.
pub const CONSTRAINT_LIMIT: f64 = 0.1;

/// Floor on |mu ∘ u| below which the singular set is reported, never clamped.
pub const SINGULAR_FLOOR: f64 = 1e-6;

/// Floor on |K_i| below which Lemma-style division is refused.
pub const FUNDAMENTAL_FLOOR: f64 = 1e-8;

/// Antipodal tie-break zone for the Ω-adapted frame rotation.
pub const ANTIPODAL: f64 = 1e-8;

/// Second-order convergence window for h → h/2 refinement (8⁴ vs 16⁴).
pub const RATIO_LO: f64 = 3.5;
/// See [`RATIO_LO`].
pub const RATIO_HI: f64 = 4.5;

/// Backtracking halvings before a flow step is declared too large.
pub const FLOW_MAX_HALVINGS: usize = 20;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floors_sit_below_identity_tolerances() {
        assert!(NEWTON < MOMENT_IDENTITY);
        assert!(EXACT_ALGEBRA < ADJOINT);
        assert!(FUNDAMENTAL_FLOOR < SINGULAR_FLOOR);
        assert!(RATIO_LO < 4.0 && 4.0 < RATIO_HI);
    }
}
