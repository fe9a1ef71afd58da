//! Adaptive reward fusion: per dimension `s̃ = λ(v) + (1 − λ(v))·s`, then
//! `r = Σ w·s̃`, plus Best-of-N selection on top of it.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::judge::{score_semantic, JudgeBackend, JudgeError, JudgeRequest, OracleWeights, SemanticScores};
use crate::pipeline::SampleRecord;
use crate::ses::{CheckReport, Indicator, PerDim, Ses, VerificationVector};
use crate::vrm::{extract_features, FeatureInput, VrmModel};

/// Bumped on any change to the serialized breakdown.
pub const BREAKDOWN_SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_LAMBDA_FAIL: f64 = 0.05;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error("λ(−1) must lie in (0, 0.5), got {0}")]
    InvalidLambda(f64),
    #[error("no candidates to rank")]
    NoCandidates,
    #[error("judge-passthrough mode needs a judge backend")]
    MissingJudge,
}

/// Trust placed in each verification outcome. `λ(+1) = 1` and `λ(0) = 0` are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaMap {
    fail: f64,
}

impl Default for LambdaMap {
    fn default() -> Self {
        Self {
            fail: DEFAULT_LAMBDA_FAIL,
        }
    }
}

impl LambdaMap {
    pub fn new(fail: f64) -> Result<Self, FusionError> {
        if fail > 0.0 && fail < 0.5 {
            Ok(Self { fail })
        } else {
            Err(FusionError::InvalidLambda(fail))
        }
    }

    pub fn fail(&self) -> f64 {
        self.fail
    }

    pub fn lambda(&self, v: Indicator) -> f64 {
        match v {
            Indicator::Pass => 1.0,
            Indicator::Unavailable => 0.0,
            Indicator::Fail => self.fail,
        }
    }
}

pub fn fuse(v: &VerificationVector, s: &SemanticScores, lambda: &LambdaMap) -> PerDim<f64> {
    PerDim::from_fn(|d| {
        let l = lambda.lambda(*v.get(d));
        l + (1.0 - l) * s.get(d)
    })
}

pub fn aggregate(w: &OracleWeights, fused: &PerDim<f64>) -> f64 {
    w.corr * fused.corr + w.phys * fused.phys + w.inst * fused.inst
}

/// Where `s` and `w` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Both from the trained heads.
    Vrm,
    /// `s` from the judge backend, `w` from the weight head.
    JudgePassthrough,
}

impl fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreMode::Vrm => "vrm",
            ScoreMode::JudgePassthrough => "judge_passthrough",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionBreakdown {
    pub v: Indicator,
    pub s: f64,
    pub lambda: f64,
    pub fused: f64,
    pub w: f64,
    pub contribution: f64,
}

/// Every intermediate of one reward computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub schema_version: u32,
    pub mode: ScoreMode,
    /// False when the checks were switched off and `v` forced to 0.
    pub verifier_enabled: bool,
    pub v: VerificationVector,
    pub dimensions: PerDim<DimensionBreakdown>,
    /// Sum of the stored contributions, Corr + Phys + Inst in that order.
    pub reward: f64,
    #[serde(default)]
    pub reports: Vec<CheckReport>,
}

impl RewardBreakdown {
    pub fn compose(
        v: VerificationVector,
        s: &SemanticScores,
        w: &OracleWeights,
        lambda: &LambdaMap,
        mode: ScoreMode,
    ) -> Self {
        let fused = fuse(&v, s, lambda);
        let dimensions = PerDim::from_fn(|d| {
            let fused = *fused.get(d);
            let w = *w.get(d);
            DimensionBreakdown {
                v: *v.get(d),
                s: *s.get(d),
                lambda: lambda.lambda(*v.get(d)),
                fused,
                w,
                contribution: w * fused,
            }
        });
        let reward = dimensions.corr.contribution + dimensions.phys.contribution + dimensions.inst.contribution;
        Self {
            schema_version: BREAKDOWN_SCHEMA_VERSION,
            mode,
            verifier_enabled: true,
            v,
            dimensions,
            reward,
            reports: Vec::new(),
        }
    }
}

/// Checks, scoring and fusion wired together.
#[derive(Clone)]
pub struct RewardEngine {
    pub ses: Ses,
    pub model: Arc<VrmModel>,
    pub judge: Option<Arc<dyn JudgeBackend>>,
    pub lambda: LambdaMap,
    pub mode: ScoreMode,
    /// With the verifier off, `v` is forced to 0 and the features see no check results.
    pub verifier_enabled: bool,
}

impl fmt::Debug for RewardEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RewardEngine")
            .field("mode", &self.mode)
            .field("lambda", &self.lambda)
            .field("verifier_enabled", &self.verifier_enabled)
            .finish_non_exhaustive()
    }
}

impl RewardEngine {
    pub fn new(model: Arc<VrmModel>) -> Self {
        Self {
            ses: Ses::default(),
            model,
            judge: None,
            lambda: LambdaMap::default(),
            mode: ScoreMode::Vrm,
            verifier_enabled: true,
        }
    }

    /// Judge-passthrough mode: `s` comes from `judge`.
    pub fn with_judge(mut self, judge: Arc<dyn JudgeBackend>) -> Self {
        self.judge = Some(judge);
        self.mode = ScoreMode::JudgePassthrough;
        self
    }

    pub fn with_lambda(mut self, lambda: LambdaMap) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn without_verifier(mut self) -> Self {
        self.verifier_enabled = false;
        self
    }

    /// Same engine with a different probing seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        out.ses = self.ses.with_seed(seed);
        out
    }

    pub fn reward(&self, sample: &SampleRecord) -> Result<RewardBreakdown, FusionError> {
        let (v, reports) = if self.verifier_enabled {
            let out = self.ses.verify(sample);
            (out.v, out.reports)
        } else {
            (VerificationVector::unavailable(), Vec::new())
        };
        let h = extract_features(
            &self.model.features,
            &FeatureInput {
                question: &sample.question,
                answer: &sample.answer,
                reports: &reports,
                task_type: Some(sample.task_type),
            },
        );
        let (model_s, w) = self
            .model
            .forward(&h, &v)
            .expect("features are built with the model's own config");
        let s = match self.mode {
            ScoreMode::Vrm => model_s,
            ScoreMode::JudgePassthrough => {
                let judge = self.judge.as_ref().ok_or(FusionError::MissingJudge)?;
                let request = JudgeRequest {
                    question: &sample.question,
                    answer: &sample.answer,
                    reference: sample.reference_answer.as_deref(),
                    verification: &v,
                    reports: &reports,
                };
                score_semantic(judge.as_ref(), &request)?.scores
            }
        };
        let mut out = RewardBreakdown::compose(v, &s, &w, &self.lambda, self.mode);
        out.verifier_enabled = self.verifier_enabled;
        out.reports = reports;
        Ok(out)
    }

    pub fn reward_qa(&self, question: &str, answer: &str) -> Result<RewardBreakdown, FusionError> {
        self.reward(&SampleRecord::adhoc(question, answer))
    }

    /// Scores every candidate answer to `base.question` and picks the best.
    pub fn best_of_n(
        &self,
        base: &SampleRecord,
        candidates: &[String],
    ) -> Result<(usize, Vec<RewardBreakdown>), FusionError> {
        if candidates.is_empty() {
            return Err(FusionError::NoCandidates);
        }
        let breakdowns = candidates
            .par_iter()
            .map(|answer| {
                self.reward(&SampleRecord {
                    answer: answer.clone(),
                    ..base.clone()
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rewards: Vec<f64> = breakdowns.iter().map(|b| b.reward).collect();
        Ok((select_best(&rewards), breakdowns))
    }
}

/// Index of the largest reward; ties go to the lowest index.
pub fn select_best(rewards: &[f64]) -> usize {
    let mut best = 0;
    for (i, r) in rewards.iter().enumerate().skip(1) {
        if *r > rewards[best] {
            best = i;
        }
    }
    best
}
