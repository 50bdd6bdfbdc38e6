//! Solver and verification harness for the singular fractional p-Laplace
//! Dirichlet problem on the Heisenberg group.
//!
//! The equation `L_{s,p} u = f u^{-δ(x)}` in a bounded domain, with `u = 0`
//! outside, is discretized on a point cloud with an exterior collar and
//! solved through a monotone sequence of regularized convex problems. On
//! top of the solver sit the extremal-constant computation for the
//! associated Sobolev-type inequality and property checks for the
//! supporting algebraic facts.

// validations use `!(v > 0.0)` so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod extremal;
pub mod heisenberg;
pub mod mesh;
pub mod operator;
pub mod solver;
