//! Domino shuffling as a random height process on the plane, together with
//! the Hamilton-Jacobi equation `u_t + H(u_x) = 0` that governs its rescaled
//! evolution.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] and [`height`]: faces, the crossing rule, admissible height
//!   fields, the pyramid function and the discretisation `phi_g^n`.
//! * [`shuffle`]: the local update rules, seeded Bernoulli marks and the
//!   coupled evolution.
//! * [`scaling`]: even-sublattice interpolation and the rescaled field `S_n`.
//! * [`equilibrium`]: closed-form Gibbs angles, local probabilities and `H`.
//! * [`pde`]: a monotone Lax-Friedrichs solver for the continuum equation.
//! * [`harness`]: experiment configuration, comparison runs and outputs.

pub mod equilibrium;
pub mod error;
pub mod harness;
pub mod height;
pub mod lattice;
pub mod pde;
pub mod scaling;
pub mod shuffle;

pub use error::{Error, Result};
pub use height::{HeightField, Profile};
pub use lattice::{Face, Rect};
