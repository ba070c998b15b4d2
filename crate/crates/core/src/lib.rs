//! Factored categorical observation models and three interchangeable
//! log-likelihood backends.
//!
//! The observation model of a discrete POMDP agent is a list of likelihood
//! tables `p(o^m | s_deps(m))`, one per modality, each conditioned on a
//! subset of the hidden-state factors. This crate evaluates the
//! log-likelihood of an observation against that model in three ways:
//!
//! * [`likelihood::RaggedBackend`]: one tensor per modality, walked with
//!   per-modality loops.
//! * [`likelihood::UnifiedDenseBackend`]: every modality packed into one
//!   padded, shape-aligned array (see [`layout`]).
//! * [`likelihood::UnifiedSparseBackend`]: the packed array stored in
//!   coordinate format (see [`coo`]), so zeros are never touched.
//!
//! All three produce the same numbers; [`likelihood::brute_force_oracle`]
//! is an independent reference. [`bench`] drives the latency and memory
//! comparison.

pub mod bench;
pub mod coo;
pub mod error;
pub mod layout;
pub mod likelihood;
pub mod model;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{DenseTensor, Real};
