//! Feature selection for network-flow intrusion data by probing a GAN discriminator.
//!
//! A small GAN is trained on attack-only flow records. The discriminator is then
//! perturbed feature by feature and the resulting confidence shifts rank the
//! features. Classical filter, wrapper and embedded selectors plus two downstream
//! classifiers are included so the ranking can be benchmarked end to end.

pub mod baseline;
pub mod classifiers;
pub mod error;
pub mod flow_data;
pub mod gan;
pub mod metrics;
pub mod neural;
pub mod numfmt;
pub mod pipeline;
pub mod rng;
pub mod sensitivity;

pub use error::{Error, Result};
