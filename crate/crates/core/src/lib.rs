//! Numerical laboratory for time-dependent N-body Schrödinger propagators.
//!
//! The crate builds discretized Hamiltonians on periodic tensor grids,
//! evolves states with exponential and split-step backends, constructs
//! interacting propagators by Duhamel–Picard iteration and measures the
//! invariants those propagators should satisfy.

pub mod config;
pub mod duhamel;
pub mod error;
pub mod exponent;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod norms;
pub mod par;
pub mod propagator;
pub mod state;
pub mod timegrid;
pub mod verify;

pub use error::{Error, Result};
pub use exponent::{ClusterSpec, Exponent};
pub use geometry::ParticleSystem;
pub use grid::TensorGrid;
pub use state::StateVector;

pub use num_complex::Complex64;
