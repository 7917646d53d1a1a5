//! Numerical laboratory for periodic geodesics of contact sub-Riemannian
//! 3-manifolds.
//!
//! Two engines share this crate. The normal-form model (`birkhoff`) studies
//! geodesics spiraling around a nondegenerate closed Reeb orbit: its Poincare
//! section, the closure equation for the action values I_k, and the length
//! asymptotics l_k ~ 2 sqrt(pi k T0). The Lie-Poisson engine (`sl2`, `euler`,
//! `flow`, `catalog`) works on the unit cotangent bundle of a hyperbolic
//! surface: Euler equations on the dual of sl2(R), Casimir leaves, rotation
//! numbers of invariant 2-tori, and a catalog of closed geodesics at rational
//! rotation number. `annulus` and `flowcmp` hold the supporting machinery:
//! twist-map fixed points, Newton continuation of invariant graphs, and the
//! conjugator equation comparing a flow with a perturbation.

pub mod annulus;
pub mod birkhoff;
pub mod catalog;
pub mod error;
pub mod euler;
pub mod flow;
pub mod flowcmp;
pub mod lab;
pub mod ode;
pub mod quad;
pub mod sl2;

pub use error::{Error, Result};
