//! Spectral Galerkin solver for the Doi-Edwards configurational equation on
//! `]0,1[ × S₂`.
//!
//! The unknown is the homogenized density `f = F − 1/4π`, expanded as
//! `f(s,u) = Σₙ fₙ(u) Hₙ(s)` with `Hₙ(s) = √2 sin(nπs)` and each `fₙ`
//! stored as real spherical-harmonic coefficients.
//!
//! Layout:
//!
//! - [`sphere`]: quadrature grid, harmonic transforms, tangential calculus,
//!   the drift field `𝒢 = κu − (κ:u⊗u)u`.
//! - [`modal`]: sine-basis algebra in `s`: source coefficients `1ₙ`, the
//!   tube profile `κ:λ(ψ)`, the bilinear operator `B`, norms.
//! - [`galerkin`]: per-`κ` matrices shared by the solvers.
//! - [`stationary`]: per-mode resolvents, the residual operator `𝒯(ε,·)`,
//!   Newton continuation in `ε`.
//! - [`evolution`]: IMEX time marching and convergence diagnostics.
//! - [`diagnostics`]: independent oracles and bound certification.
//! - [`cli`]: configuration parsing and the batch subcommands.
//!
//! Harmonic coefficients are ordered by degree ascending, then order
//! `m = −ℓ..=ℓ`; index `ℓ² + ℓ + m`.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod galerkin;
pub mod krylov;
pub mod modal;
pub mod sphere;
pub mod stationary;

pub use error::{Error, Result};
pub use galerkin::GalerkinOperators;
pub use modal::{CosProfile, ModalField};
pub use sphere::{KappaTensor, SphereField, SphereGrid, TangentField};
