//! Numerical laboratory for generalized Seiberg-Witten systems on flat 4-tori.
//!
//! The crate implements the quaternionic algebra underlying spinor bundles in
//! four dimensions, flat hyperKähler targets H^n = V ⊕ V* with torus
//! symmetries and their moment maps, periodic-lattice field calculus, the
//! generalized Dirac operator with its conformal covariance, residual
//! evaluation for Seiberg-Witten-type systems, and the reformulation of those
//! systems in terms of unit self-dual 2-forms (almost-complex structures),
//! including a projected gradient flow for the twistor energy ∫|∇Ω|².
//!
//! Everything is verified at desk scale: exact algebra checks at machine
//! precision and grid-refinement ratio tests for every differential identity.
//! See the `suites` module for the runnable verification suites and
//! `tests/acceptance.rs` for the acceptance gate.

pub mod dirac;
pub mod error;
pub mod lattice;
pub mod quat;
pub mod suites;
pub mod sw;
pub mod synth;
pub mod target;
pub mod tol;
pub mod twistor;

mod linalg;

pub use error::CoreError;
pub use quat::{ImQuaternion, Quaternion};
