//! Simulation and verification laboratory for stationary symmetric
//! alpha-stable (SaS) random fields on the integer lattice `Z^d`.
//!
//! The crate has three layers:
//!
//! * exact integer-lattice algebra for quotient-group actions
//!   ([`lattice`]) and the polytope geometry attached to them
//!   ([`geometry`]),
//! * field specification and samplers, both an exact finite-atom sampler
//!   and a truncated Poisson-series sampler ([`field`]), together with
//!   closed-form large-deviation limit constants ([`limits`]),
//! * a Monte Carlo harness that estimates scaled rare-event probabilities
//!   and compares them against the analytic limits ([`harness`]), driven
//!   by a declarative JSON configuration ([`config`]).
//!
//! Everything is deterministic for a fixed seed: samplers draw from
//! counter-based RNG streams keyed by `(seed, stream)`, and parallel
//! experiments aggregate by order-independent counting.

pub mod config;
pub mod error;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod lattice;
pub mod limits;
pub mod numeric;
pub mod output;

pub use error::{Error, Result};
