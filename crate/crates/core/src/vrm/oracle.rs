use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureConfig, FeatureInput};
use super::model::Prepared;
use crate::corpus::Corruptor;
use crate::judge::{score_semantic, JudgeBackend, JudgeError, JudgeRequest, OracleWeights, SemanticScores};
use crate::pipeline::{SampleRecord, TaskType};
use crate::ses::{CheckReport, Ses, VerificationVector};

/// One distillation target: `(question, answer, v, s*, w*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_type: Option<TaskType>,
    pub v: VerificationVector,
    #[serde(default)]
    pub reports: Vec<CheckReport>,
    pub s_star: SemanticScores,
    pub w_star: OracleWeights,
    /// Whether this is a rule-corrupted copy.
    #[serde(default)]
    pub corrupted: bool,
}

impl TrainingExample {
    pub fn prepare(&self, features: &FeatureConfig) -> Prepared {
        let h = extract_features(
            features,
            &FeatureInput {
                question: &self.question,
                answer: &self.answer,
                reports: &self.reports,
                task_type: self.task_type,
            },
        );
        Prepared {
            h,
            v: self.v.as_reals(),
            s_star: self.s_star.to_array(),
            w_star: self.w_star.to_array(),
        }
    }
}

fn annotate(
    record: &SampleRecord,
    ses: &Ses,
    backend: &dyn JudgeBackend,
    corrupted: bool,
) -> Result<TrainingExample, JudgeError> {
    let verification = ses.verify(record);
    let out = score_semantic(
        backend,
        &JudgeRequest {
            question: &record.question,
            answer: &record.answer,
            reference: record.reference_answer.as_deref(),
            verification: &verification.v,
            reports: &verification.reports,
        },
    )?;
    let w_star = out
        .weights
        .ok_or_else(|| JudgeError::Unavailable(format!("{} returned no oracle weights", backend.name())))?;
    Ok(TrainingExample {
        question: record.question.clone(),
        answer: record.answer.clone(),
        task_type: Some(record.task_type),
        v: verification.v,
        reports: verification.reports,
        s_star: out.scores,
        w_star,
        corrupted,
    })
}

/// Positives are the fixtures verbatim; each fixture also yields a corrupted
/// copy with probability `corruptor.rate` (when one of its claims can be broken).
pub fn build_oracle_dataset(
    fixtures: &[SampleRecord],
    backend: &dyn JudgeBackend,
    ses: &Ses,
    corruptor: &Corruptor,
) -> Result<Vec<TrainingExample>, JudgeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(corruptor.seed);
    let mut out = Vec::with_capacity(fixtures.len() * 2);
    for record in fixtures {
        out.push(annotate(record, ses, backend, false)?);
        if corruptor.rate > 0.0 && rng.random_bool(corruptor.rate.min(1.0)) {
            let salt = rng.random();
            if let Some(bad) = corruptor.corrupt(record, salt) {
                out.push(annotate(&bad, ses, backend, true)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{box_ground_state_fixture, commutator_fixture, SyntheticCorpus};
    use crate::judge::StubJudge;
    use crate::ses::Indicator;

    #[test]
    fn test_zero_rate_is_positives_only() {
        let fixtures = SyntheticCorpus::new(1).take(40);
        let data = build_oracle_dataset(&fixtures, &StubJudge::default(), &Ses::default(), &Corruptor::new(0.0, 1)).unwrap();
        assert_eq!(data.len(), 40);
        assert!(data.iter().all(|e| e.v.phys != Indicator::Fail && !e.corrupted));
    }

    #[test]
    fn test_native_hard_negative_and_corrupted_commutator() {
        let fixtures = vec![commutator_fixture(), box_ground_state_fixture()];
        let data = build_oracle_dataset(&fixtures, &StubJudge::default(), &Ses::default(), &Corruptor::new(1.0, 3)).unwrap();
        let native = data.iter().find(|e| e.answer == fixtures[1].answer).unwrap();
        assert_eq!(native.v, VerificationVector::new(Indicator::Pass, Indicator::Fail, Indicator::Unavailable));
        let broken = data.iter().find(|e| e.corrupted && e.question == fixtures[0].question).unwrap();
        assert_eq!(broken.v.phys, Indicator::Fail);
    }

    #[test]
    fn test_jsonl_round_trip() {
        let fixtures = vec![commutator_fixture()];
        let data = build_oracle_dataset(&fixtures, &StubJudge::default(), &Ses::default(), &Corruptor::new(0.0, 0)).unwrap();
        let line = serde_json::to_string(&data[0]).unwrap();
        assert!(line.contains(r#""v":{"Corr":1,"Phys":1,"Inst":0}"#));
        let back: TrainingExample = serde_json::from_str(&line).unwrap();
        assert_eq!(back, data[0]);
    }
}
