//! Numerical laboratory for eigenvalue-counting estimates of the Anderson model.
//!
//! The crate builds finite-volume Hamiltonians `H_0 + sum_j omega_j Pi_j`,
//! counts their eigenvalues in intervals by matrix inertia, and compares Monte
//! Carlo estimates of counting statistics (Wegner, Minami and their
//! multi-interval generalizations) against the corresponding upper bounds.
//! A rank-one laboratory checks the spectral averaging inequalities that drive
//! those bounds.

pub mod eigencount;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod lattice;
pub mod matrix;
pub mod measures;
pub mod rank_one;

pub use eigencount::{count_in_interval, full_spectrum, inertia_leq, HalfOpenInterval};
pub use error::{Error, Result};
pub use estimators::{BoundReport, McConfig};
pub use lattice::{Boundary, Ensemble, FiniteVolume, FreeOperator, PotentialConfig};
pub use matrix::SymBandMatrix;
pub use measures::{HolderFit, Measure};
pub use rank_one::RankOneModel;
