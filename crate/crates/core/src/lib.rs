//! Simulation and inference for affine preferential-attachment graphs whose
//! attachment shift may change once over time.
//!
//! Graphs are stored as attachment logs ([`AttachmentLog`]): for every arrival
//! `t >= 2` the ordered list of its `m` targets. Everything else (degrees,
//! likelihoods, estimators, permutation machinery) is computed from the log.

pub mod campaign;
pub mod error;
mod fenwick;
pub mod graph;
pub mod inference;
pub mod likelihood;
pub mod numeric;
pub mod reduction;
pub mod simulator;
pub mod theory;

pub use campaign::McResult;
pub use error::{Error, Result, Window};
pub use graph::{AttachmentLog, BoldSet, DegreeTailCounts};
pub use inference::{MleResult, TestMode, TestVerdict};
pub use likelihood::{Bracket, LogLik};
pub use reduction::{Preconditions, ProbeConfig, ReductionContext};
pub use simulator::{DeltaProfile, SamplerState};
pub use theory::{DegreeLaw, Hypothesis, MomentCoeffs, SeriesValue};
