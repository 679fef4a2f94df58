//! Differentially private symmetric-matrix approximation with a prescribed
//! spectrum, plus the random-matrix machinery used to check its guarantees.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs and a 64-bit seed; file formats, the command line
//! and parallel trial execution live in the `spectral-dp` companion crate.
//!
//! Module map:
//!
//! * [`linalg`]: dense symmetric matrices, eigendecomposition, norms.
//! * [`mechanism`]: the Gaussian mechanism and its post-processings.
//! * [`bounds`]: eigenvalue-gap checker and closed-form utility bounds.
//! * [`dbm`]: Dyson Brownian motion paths, SDE integrators, lemma validators.
//! * [`experiments`]: Monte Carlo utility estimates, Wishart gap tables,
//!   synthetic test spectra.
//! * [`ingest`]: dataset preprocessing, covariance, dataset gap reports.
//! * [`trials`] and [`rng`]: deterministic trial fan-out and seeding.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod bounds;
pub mod dbm;
mod error;
pub mod experiments;
pub mod ingest;
pub mod linalg;
pub mod mechanism;
pub mod rng;
pub mod stats;
pub mod trials;

pub use error::{Error, Result};
pub use linalg::{Matrix, Spectrum, SymMatrix};
pub use mechanism::{PrivacyParams, TargetSpectrum};
pub use trials::{Sequential, TrialExecutor};
