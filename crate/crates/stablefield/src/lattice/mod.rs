//! Exact integer-lattice algebra for quotient-group actions on `Z^d`.
//!
//! A translation-quotient action is parameterized by an integer basis of
//! its kernel `K`. From that basis we compute the free rank `p`, the
//! torsion order `l`, a free complement `F` (basis `U`), coset
//! representatives of `Z^d/(F+K)`, and the index group
//! `H = union_k (x_k + F)` with its quotient norm
//! `N(s) = min { ||s+v||_inf : v in K }`.
//!
//! All arithmetic is exact 64-bit with explicit overflow detection; an
//! overflow surfaces as [`crate::Error::Capacity`], never as a silent wrap.

mod group;
mod matrix;
mod snf;

pub use group::{analyze_action, GroupStructure, HElement};
pub use matrix::IntMatrix;
pub use snf::{smith_normal_form, SmithDecomposition};
