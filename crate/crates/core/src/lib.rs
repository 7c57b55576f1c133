//! Synthetic-data benchmark for class-probability and uncertainty estimates.
//!
//! The crate generates radially symmetric two-class datasets whose exact
//! class-probability function (the long-run frequency distribution, LRFD) is
//! known in closed form, trains six probabilistic classifiers on them, and
//! scores the estimates against the LRFD:
//!
//! | algorithm | module |
//! |-----------|--------|
//! | neural network ensemble (NNE) | [`classifiers::ensemble`] |
//! | ensemble with conflictual loss (CL) | [`classifiers::ensemble`] |
//! | evidential deep learning (EDL) | [`classifiers::edl`] |
//! | Monte Carlo dropout (MCD) | [`classifiers::mcd`] |
//! | Gaussian process, Laplace approximation (GP) | [`gp`] |
//! | truncated Dirichlet-process mixture (DPMM) | [`dpmm`] |
//!
//! The runnable programs under `examples/` walk through each capability, and
//! the `uqbench` binary drives full studies from the command line.

pub mod classifiers;
pub mod dpmm;
pub mod error;
pub mod gp;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod posterior;
pub mod rng;
pub mod special;
pub mod synthdata;

pub use error::{Error, Result};
pub use posterior::PredictiveEstimate;
pub use synthdata::{Class, DatasetId, GammaClassSpec, LabeledPoint};
