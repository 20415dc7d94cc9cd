//! Job title benchmarking as link prediction on a job-transition graph.
//!
//! The pipeline runs career records through [`ingest`] and [`titlenorm`]
//! into a [`jobgraph::JobGraph`], learns four per-view embeddings
//! ([`views`]), fuses them with a collective autoencoder ([`cmvae`]) and
//! scores the result with [`evalkit`]. [`synthgen`] produces planted
//! benchmark data.

pub mod cmvae;
pub mod error;
pub mod evalkit;
pub mod ingest;
pub mod io;
pub mod jobgraph;
pub mod par;
pub mod pipeline;
pub mod synthgen;
pub mod titlenorm;
pub mod views;

pub use error::{Error, Result};
pub use par::Exec;
