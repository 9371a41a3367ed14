//! Entanglement analysis and site-ordering optimization for 1D chains.
//!
//! The crate computes, for small exactly-represented quantum states:
//!
//! - Schmidt spectra, reduced density matrices and matrix-product-state
//!   truncation errors ([`state`], [`mps`]);
//! - von Neumann / Renyi / Hartley entropies, pairwise quantum mutual
//!   information and bond-dimension simulability bounds ([`entropy`]);
//! - ordering cost functions built from single-site entropies and the
//!   mutual-information matrix, including per-cut block-entropy bounds and
//!   their log-sum-exp aggregate over cuts ([`cost`]);
//! - permutation searches (exhaustive, 2-opt descent, simulated annealing)
//!   minimizing those costs over site orderings ([`optimize`]);
//! - brute-force verification of every inequality the cost functions rest
//!   on: SSA and its chained forms, weak subadditivity of Renyi orders,
//!   rank subadditivity, the Slater singular-value pairing ([`verify`]).
//!
//! States are dense complex amplitude vectors, so everything is exact up to
//! floating point and sized for L up to ~12 qubit-like sites.

pub mod cost;
pub mod entropy;
pub mod error;
pub mod generate;
pub mod io;
pub mod mps;
pub mod optimize;
pub mod state;
pub mod verify;

pub use cost::{CostInputs, CostReport, Sign};
pub use entropy::{Alpha, EntropyProfile, QmiMatrix};
pub use error::{Error, Result};
pub use generate::HamiltonianSpec;
pub use mps::{MatrixProductState, TruncationProfile};
pub use optimize::{AnnealParams, Method, Objective, OrderingReport, SearchConfig};
pub use state::{DenseState, DensityMatrix, SchmidtSpectrum, SitePermutation, SiteSubset};
pub use verify::{CheckResult, EfficacyReport};
