//! Almost-prime values of products of irreducible binary quadratic forms.
//!
//! The crate computes the exact local densities attached to a system of
//! forms, counts lattice points in residue classes, evaluates the
//! Diamond–Halberstam–Richert sieve functions and the resulting almost-prime
//! bound, and runs desk-scale experiments tallying prime factor counts.

pub mod experiment;
pub mod forms;
pub mod lattice;
pub mod localdensity;
pub mod numutil;
pub mod region;
pub mod sievebound;
pub mod verify;

pub use forms::{FormError, FormSystem, QuadraticForm};
pub use localdensity::ModulusVector;
pub use region::Region;

/// Exact rational numbers used for sieve densities.
pub type Rational = num_rational::BigRational;
