//! Verification-aware reward engine for quantum-mechanics reasoning.
//!
//! Answers are checked by a suite of deterministic math and physics checks
//! ([`ses`]), scored semantically by a judge backend ([`judge`]) or a small
//! trained two-headed reward model ([`vrm`]), and the two signals are fused into
//! a scalar reward ([`fusion`]). [`pipeline`] runs the same machinery over whole
//! corpora: dedup, automated verification, batch audit and confusion analysis.

pub mod corpus;
pub mod expr;
pub mod fusion;
pub mod harness;
pub mod judge;
pub mod pipeline;
pub mod ses;
mod util;
pub mod vrm;

pub use fusion::{LambdaMap, RewardBreakdown, RewardEngine, ScoreMode};
pub use judge::{EvalDimension, PerDim, SemanticScores};
pub use pipeline::SampleRecord;
pub use ses::{Indicator, VerificationVector};
