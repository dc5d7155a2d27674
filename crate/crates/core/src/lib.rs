//! Numerical laboratory for peak sections on toric manifolds: lattice polytopes,
//! ray sequences of weights, log-sum-exp potentials, norm and tail asymptotics,
//! and a Laplace-transform oracle for the underlying one-dimensional integrals.

pub mod exact;
pub mod lattice;
pub mod polytope;
pub mod rays;
pub mod potential;
pub mod quadrature;
pub mod special;
pub mod asymptotics;
pub mod laplace;
pub mod config;
pub mod report;
pub mod cli;
pub mod selftest;
