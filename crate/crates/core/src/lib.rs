//! Participant-invariant influence patterns of temporal networks.
//!
//! The pipeline: [`ingest`] a timestamped edge list and cut it into equal
//! edge-count snapshots, build the aligned influence-increment matrix in
//! [`influence`], [`factorize`] it into `W H`, check that `H` survives
//! participant subsampling in [`uniqueness`], and compare or classify
//! networks by the DTW distance of their `H` patterns in [`similarity`].
//! [`synth`] provides planted instances and independent oracles; [`io`]
//! holds the on-disk formats.

pub mod error;
pub mod factorize;
pub mod influence;
pub mod ingest;
pub mod io;
pub mod similarity;
pub mod synth;
pub mod uniqueness;

pub use error::{Error, Result};
