use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{JudgeBackend, JudgeError, JudgeOutput, JudgeRequest, OracleWeights, SemanticScores};
use crate::ses::{EvalDimension, Indicator, PerDim};
use crate::util::{fnv1a, fnv1a_extend, unit_interval};

/// Tunables for [`StubJudge`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StubJudgeConfig {
    pub seed: u64,
    /// Half-width of the deterministic pseudo-noise added to each score.
    pub score_noise: f64,
    /// Share of the Corr/Phys score driven by the claim pass ratio.
    pub pass_ratio_weight: f64,
    pub weight_noise: f64,
    /// Oracle weight for a dimension by its indicator.
    pub weight_pass: f64,
    pub weight_fail: f64,
    pub weight_unavailable: f64,
}

impl Default for StubJudgeConfig {
    fn default() -> Self {
        Self {
            seed: 17,
            score_noise: 0.08,
            pass_ratio_weight: 0.2,
            weight_noise: 0.04,
            weight_pass: 0.9,
            weight_fail: 0.7,
            weight_unavailable: 0.35,
        }
    }
}

/// Deterministic, feature-based judge: a pure function of the request and the seed.
///
/// Corr/Phys blend the dimension's claim pass ratio, keyword coverage against the
/// reference (or the question when no reference exists) and an answer-length band.
/// Inst blends length band, presence of structured claims and coverage. Weights
/// favour dimensions whose check outcome is known.
#[derive(Debug, Clone, Default)]
pub struct StubJudge {
    pub config: StubJudgeConfig,
}

impl StubJudge {
    pub fn new(config: StubJudgeConfig) -> Self {
        Self { config }
    }

    fn noise(&self, request: &JudgeRequest<'_>, salt: &str, amplitude: f64) -> f64 {
        let mut h = fnv1a(&self.config.seed.to_le_bytes());
        h = fnv1a_extend(h, request.question.as_bytes());
        h = fnv1a_extend(h, &[0xff]);
        h = fnv1a_extend(h, request.answer.as_bytes());
        h = fnv1a_extend(h, salt.as_bytes());
        amplitude * (2.0 * unit_interval(h) - 1.0)
    }
}

pub(crate) fn keywords(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.chars().count() >= 3 && w.chars().any(char::is_alphabetic))
        .map(str::to_lowercase)
        .collect()
}

/// Fraction of the reference keywords that also occur in the answer.
pub(crate) fn coverage(answer: &str, reference: &str) -> f64 {
    let wanted = keywords(reference);
    if wanted.is_empty() {
        return 0.0;
    }
    let have = keywords(answer);
    wanted.intersection(&have).count() as f64 / wanted.len() as f64
}

fn length_band(answer: &str) -> f64 {
    match answer.trim().len() {
        0 => 0.0,
        1..=39 => 0.2,
        40..=149 => 0.6,
        150..=4000 => 1.0,
        _ => 0.7,
    }
}

fn pass_ratio(request: &JudgeRequest<'_>, dim: EvalDimension) -> f64 {
    let (pass, fail) = request
        .reports
        .iter()
        .filter(|r| r.check.dimension() == dim)
        .fold((0usize, 0usize), |(p, f), r| match r.status {
            Indicator::Pass => (p + 1, f),
            Indicator::Fail => (p, f + 1),
            Indicator::Unavailable => (p, f),
        });
    if pass + fail == 0 {
        0.5
    } else {
        pass as f64 / (pass + fail) as f64
    }
}

impl JudgeBackend for StubJudge {
    fn name(&self) -> &str {
        "stub"
    }

    fn score(&self, request: &JudgeRequest<'_>) -> Result<JudgeOutput, JudgeError> {
        let cfg = &self.config;
        let answer = request.answer;
        let weights = OracleWeights::from_fn(|d| {
            let base = match request.verification.get(d) {
                Indicator::Pass => cfg.weight_pass,
                Indicator::Fail => cfg.weight_fail,
                Indicator::Unavailable => cfg.weight_unavailable,
            };
            base + self.noise(request, &format!("w{d}"), cfg.weight_noise)
        });

        if answer.trim().is_empty() {
            return Ok(JudgeOutput {
                scores: SemanticScores::splat(0.0),
                weights: Some(weights),
                rationale: "empty answer".into(),
            });
        }

        let cov = coverage(answer, request.reference.unwrap_or(request.question));
        let band = length_band(answer);
        let structured = if answer.contains("@claim{") || answer.contains("<think>") { 1.0 } else { 0.0 };
        let rw = cfg.pass_ratio_weight;
        let scores = SemanticScores::from_fn(|d| {
            let base = match d {
                EvalDimension::Inst => 0.5 * band + 0.3 * structured + 0.2 * cov,
                _ => rw * pass_ratio(request, d) + (0.85 - rw) * cov + 0.15 * band,
            };
            // a fully covered, well-sized answer sits at the top of the scale
            let lifted = base + 0.1 * cov * band;
            lifted + self.noise(request, &format!("s{d}"), cfg.score_noise)
        });
        let rationale = format!(
            "coverage {cov:.2}, length band {band:.1}, Corr pass ratio {:.2}, Phys pass ratio {:.2}",
            pass_ratio(request, EvalDimension::Corr),
            pass_ratio(request, EvalDimension::Phys)
        );
        Ok(JudgeOutput {
            scores: scores.map(|_, v| v.clamp(0.0, 1.0)),
            weights: Some(weights.map(|_, v| v.clamp(0.0, 1.0))),
            rationale,
        })
    }
}

impl PerDim<f64> {
    pub fn mean(&self) -> f64 {
        (self.corr + self.phys + self.inst) / 3.0
    }
}
