//! Arithmetic over prime fields GF(q).
//!
//! Field elements carry their modulus so that mixing fields is caught early;
//! matrices and solvers store a single modulus and raw residues.

mod element;
mod matrix;
mod solve;
mod sparse;

pub use element::{field_inv, is_prime, next_prime_above, FieldElement, PrimeField};
pub use matrix::{rs_generator, FieldMatrix};
pub use solve::{solve_linear, LinearSolution};
pub use sparse::{SparseSolution, SparseSystem};
