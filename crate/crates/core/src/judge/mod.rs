//! Multidimensional semantic scoring behind a pluggable backend.
//!
//! Backends return soft scores in `[0,1]` per dimension and, in oracle mode,
//! importance weights. [`score_semantic`] clamps whatever a backend returns.

mod remote;
mod stub;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use remote::{RemoteJudge, RemoteJudgeConfig, PROMPT_TEMPLATE, TEMPLATE_ID};
pub use stub::{StubJudge, StubJudgeConfig};

pub use crate::ses::{EvalDimension, PerDim};
use crate::ses::{CheckReport, VerificationVector};

pub type SemanticScores = PerDim<f64>;
pub type OracleWeights = PerDim<f64>;

/// Default semantic pass threshold.
pub const DEFAULT_ZETA: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JudgeError {
    /// The backend could not produce scores; callers treat scores as absent.
    #[error("judge unavailable: {0}")]
    Unavailable(String),
}

/// Everything a backend may look at.
#[derive(Debug, Clone, Copy)]
pub struct JudgeRequest<'a> {
    pub question: &'a str,
    pub answer: &'a str,
    pub reference: Option<&'a str>,
    pub verification: &'a VerificationVector,
    pub reports: &'a [CheckReport],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeOutput {
    pub scores: SemanticScores,
    #[serde(default)]
    pub weights: Option<OracleWeights>,
    #[serde(default)]
    pub rationale: String,
}

pub trait JudgeBackend: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, request: &JudgeRequest<'_>) -> Result<JudgeOutput, JudgeError>;
}

fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

pub fn clamp_scores(s: &PerDim<f64>) -> PerDim<f64> {
    s.map(|_, v| clamp_unit(*v))
}

/// Scores one answer and clamps every value into `[0,1]`.
pub fn score_semantic(backend: &dyn JudgeBackend, request: &JudgeRequest<'_>) -> Result<JudgeOutput, JudgeError> {
    let out = backend.score(request)?;
    Ok(JudgeOutput {
        scores: clamp_scores(&out.scores),
        weights: out.weights.as_ref().map(clamp_scores),
        rationale: out.rationale,
    })
}

/// True iff the mean of the three scores reaches `zeta`.
pub fn classify_semantic(scores: &SemanticScores, zeta: f64) -> bool {
    let mean = scores.to_array().iter().sum::<f64>() / 3.0;
    // absorb the last-bit rounding of the three-term mean, e.g. (0.7+0.8+0.9)/3
    mean >= zeta - 1e-12
}

/// Per-dimension average over several backends.
pub struct EnsembleJudge {
    members: Vec<Arc<dyn JudgeBackend>>,
}

impl EnsembleJudge {
    pub fn new(members: Vec<Arc<dyn JudgeBackend>>) -> Self {
        assert!(!members.is_empty(), "ensemble needs at least one member");
        Self { members }
    }
}

impl JudgeBackend for EnsembleJudge {
    fn name(&self) -> &str {
        "ensemble"
    }

    fn score(&self, request: &JudgeRequest<'_>) -> Result<JudgeOutput, JudgeError> {
        let outputs = self
            .members
            .iter()
            .map(|m| score_semantic(m.as_ref(), request))
            .collect::<Result<Vec<_>, _>>()?;
        let n = outputs.len() as f64;
        let scores = PerDim::from_fn(|d| outputs.iter().map(|o| *o.scores.get(d)).sum::<f64>() / n);
        let weighted: Vec<&OracleWeights> = outputs.iter().filter_map(|o| o.weights.as_ref()).collect();
        let weights = (!weighted.is_empty()).then(|| {
            let k = weighted.len() as f64;
            PerDim::from_fn(|d| weighted.iter().map(|w| *w.get(d)).sum::<f64>() / k)
        });
        let rationale = outputs
            .iter()
            .zip(&self.members)
            .map(|(o, m)| format!("[{}] {}", m.name(), o.rationale))
            .collect::<Vec<_>>()
            .join(" ");
        Ok(JudgeOutput { scores, weights, rationale })
    }
}
