//! Adjacency matrices of quantum lens space graph algebras, their closed forms,
//! isomorphism invariants and SL_P equivalence certificates.

pub mod classify;
pub mod cli;
pub mod closedform;
pub mod intsolve;
pub mod lensgraph;
pub mod numtheory;
pub mod slp;
pub mod sweep;
pub mod verify;

/// Dense integer matrix used for adjacency matrices and certificates.
pub type IntMatrix = nalgebra::DMatrix<i128>;
