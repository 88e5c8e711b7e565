//! Simulation and verification of massive particle systems.
//!
//! A massive system is a (truncated) family of particles with masses
//! `s_1 ≥ s_2 ≥ … > 0` summing to one, particle `i` running an independent
//! copy of a base diffusion at speed `1/s_i`. Its state is the purely atomic
//! measure `μ = Σ s_i δ_{x_i}`.
//!
//! * [`simplex`]: mass sequences, Poisson–Dirichlet sampling, `t*` diagnostics.
//! * [`ambient`]: base spaces, exact transition sampling, test functions, heat kernel.
//! * [`dynamics`]: free and interacting path simulation, collision detection.
//! * [`measures`]: atomic measures and Prokhorov / weak-atomic / bL / W2 distances.
//! * [`cylinder`]: cylinder functions, generator, carré du champ, Girsanov drift.
//! * [`verify`]: ensemble Monte-Carlo tests of martingale problems and invariances.

pub mod ambient;
pub mod cylinder;
pub mod dynamics;
pub mod error;
pub mod measures;
pub mod rng;
pub mod simplex;
pub mod verify;

pub use error::{Error, Result};
