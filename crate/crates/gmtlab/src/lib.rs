//! A desk-scale numerical laboratory for geometric measure theory.
//!
//! The crate computes, for weighted point clouds standing in for measures on
//! R^d, the quantitative objects of singular-integral rectifiability theory:
//! growth constants, dyadic densities, Calderón–Zygmund transforms and their
//! operator norms, Wolff potentials, senior/regular cube decompositions,
//! local-convexity diagnostics, and oscillation/Riesz-system constants.
//! Every inequality the crate claims is checked by brute force somewhere in
//! the test suite; the `acceptance` module bundles those checks into a
//! machine-runnable verdict list (`gmtlab verify-all`).

pub mod divergence;
pub mod error;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod lcv;
pub mod measure;
pub mod numeric;
pub mod oscillation;
pub mod regularity;
pub mod spatial;
pub mod transform;
pub mod treecode;
pub mod wolff;
pub mod zoo;

pub use error::{Error, Result};
pub use kernel::KernelSpec;
pub use lattice::{CubeAddress, DensityTable, DyadicLattice};
pub use measure::{DiscreteMeasure, GrowthReport};
