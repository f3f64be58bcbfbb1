//! Multiscale binning tests for Poisson point processes and longitudinal
//! networks.
//!
//! The event domain is split by a hierarchical dyadic partition. Every bin at
//! every resolution level gets a local p-value, p-values are combined within a
//! level (Fisher or minimum combination) and across levels (minimum), the
//! result is calibrated by resampling under the null, and a hierarchical
//! adjustment turns the per-node p-values into a tree of simultaneously valid
//! p-values with family-wise error control.
//!
//! Supported tests:
//!
//! * two-sample test for a pair of point processes ([`twosample`]),
//! * symmetric longitudinal networks with a Tracy–Widom eigenvalue statistic,
//! * degree-corrected networks with signed-triangle / signed-quadrilateral
//!   statistics and degree-conditioned MCMC calibration,
//! * bipartite (asymmetric) networks ([`longitudinal`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel execution live in the companion `multiscale` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod combine;
pub mod dists;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod longitudinal;
pub mod netstats;
pub mod network;
pub mod partition;
pub mod pointproc;
pub mod resample;
pub mod rng;
pub mod simlab;
pub mod twosample;

pub use combine::{Calibration, Combiner, PvalNode, PvalTree};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use network::{Directedness, LongitudinalNetwork};
pub use partition::{Domain, PartitionTree};
pub use pointproc::{Intensity, PointPattern};
