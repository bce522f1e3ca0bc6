//! Simulator for quantum measurement processes with intentionally biased
//! ("null-measurement") detectors.
//!
//! Small quantum states evolve through a catalog of unitary elements and
//! branch on click/no-click detector events: a click collapses the state to
//! the clicked basis vector, a non-click projects onto the uncovered
//! subspace and renormalizes. Built-in scenarios cover an isotropic emitter
//! watched by a biased shell, a Mach-Zehnder bomb tester, and a modified
//! Stern-Gerlach set-up; each ships with an exact Born-rule oracle that the
//! seeded Monte-Carlo engine is checked against. A small scenario language
//! (`.scn` files) describes further experiments and lowers to the same
//! executable form.

pub mod dsl;
pub mod engine;
pub mod error;
pub mod measurement;
pub mod operators;
pub mod qstate;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
