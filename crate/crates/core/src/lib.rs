//! Symbolic and numeric toolkit for Lagrangian field theories on the bundle
//! of k^1-velocities `T^1_k Q`, in a single global chart with coordinates
//! `q^i` and `v^i_alpha`.

pub mod expr;
pub mod geometry;
pub mod lagrangian;
pub mod sopde;
pub mod numverify;
pub mod symmetry;

mod linsolve;

#[cfg(test)]
mod testutil;
