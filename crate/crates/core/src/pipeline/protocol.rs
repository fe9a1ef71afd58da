use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Difficulty, SampleRecord, TaskType};
use crate::judge::{classify_semantic, score_semantic, JudgeBackend, JudgeRequest, SemanticScores, DEFAULT_ZETA};
use crate::ses::{CheckReport, Indicator, Ses, VerificationVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Unparsable,
}

/// Layer-1 outcome for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub id: String,
    pub task_type: TaskType,
    pub difficulty: Difficulty,
    pub v: VerificationVector,
    pub reports: Vec<CheckReport>,
    /// Absent when the judge was unavailable.
    pub scores: Option<SemanticScores>,
    pub semantic_pass: bool,
    /// `v_Corr = +1` and `v_Phys = +1`.
    pub deterministic_pass: bool,
    pub verdict: Verdict,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub zeta: f64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            zeta: DEFAULT_ZETA,
            workers: 0,
        }
    }
}

fn verify_one(record: &SampleRecord, ses: &Ses, backend: &dyn JudgeBackend, zeta: f64) -> VerificationRecord {
    let verification = ses.verify(record);
    let request = JudgeRequest {
        question: &record.question,
        answer: &record.answer,
        reference: record.reference_answer.as_deref(),
        verification: &verification.v,
        reports: &verification.reports,
    };
    let judged = score_semantic(backend, &request);
    let (scores, rationale) = match judged {
        Ok(out) => (Some(out.scores), out.rationale),
        Err(e) => (None, e.to_string()),
    };
    let semantic_pass = scores.as_ref().is_some_and(|s| classify_semantic(s, zeta));
    let v = verification.v;
    let deterministic_pass = v.corr == Indicator::Pass && v.phys == Indicator::Pass;
    let any_fail = verification.reports.iter().any(|r| r.status == Indicator::Fail);
    let verdict = if verification.unparsable || scores.is_none() {
        Verdict::Unparsable
    } else if any_fail || !semantic_pass {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    VerificationRecord {
        id: record.id.clone(),
        task_type: record.task_type,
        difficulty: record.difficulty,
        v,
        reports: verification.reports,
        scores,
        semantic_pass,
        deterministic_pass,
        verdict,
        rationale,
    }
}

/// Runs the checks and the semantic judge over a corpus. Output is sorted by id.
pub fn run_protocol(
    records: &[SampleRecord],
    ses: &Ses,
    backend: &dyn JudgeBackend,
    config: &ProtocolConfig,
) -> Vec<VerificationRecord> {
    let work = || -> Vec<VerificationRecord> {
        records
            .par_iter()
            .map(|r| verify_one(r, ses, backend, config.zeta))
            .collect()
    };
    let mut out = if config.workers > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(config.workers).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        }
    } else {
        work()
    };
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{box_ground_state_fixture, commutator_fixture};
    use crate::judge::{JudgeError, JudgeOutput, StubJudge};

    struct Down;

    impl JudgeBackend for Down {
        fn name(&self) -> &str {
            "down"
        }
        fn score(&self, _: &JudgeRequest<'_>) -> Result<JudgeOutput, JudgeError> {
            Err(JudgeError::Unavailable("offline".into()))
        }
    }

    #[test]
    fn test_fixture_verdicts() {
        let records = vec![box_ground_state_fixture(), commutator_fixture()];
        let out = run_protocol(&records, &Ses::default(), &StubJudge::default(), &ProtocolConfig::default());
        assert_eq!(out[0].id, "04215");
        assert_eq!(out[0].verdict, Verdict::Pass);
        assert!(out[0].deterministic_pass);
        assert_eq!(out[1].verdict, Verdict::Fail);
        assert!(!out[1].deterministic_pass);
    }

    #[test]
    fn test_malformed_block_is_unparsable() {
        let mut record = commutator_fixture();
        record.answer.push_str("@claim{kind=energy, value=1");
        let out = run_protocol(&[record], &Ses::default(), &StubJudge::default(), &ProtocolConfig::default());
        assert_eq!(out[0].verdict, Verdict::Unparsable);
    }

    #[test]
    fn test_judge_down_marks_scores_absent() {
        let out = run_protocol(&[commutator_fixture()], &Ses::default(), &Down, &ProtocolConfig::default());
        assert_eq!(out[0].scores, None);
        assert!(!out[0].semantic_pass);
        assert_eq!(out[0].verdict, Verdict::Unparsable);
    }

    #[test]
    fn test_bounded_pool_matches_global() {
        let mut corpus = crate::corpus::SyntheticCorpus::new(9);
        let records = corpus.take(40);
        let judge = StubJudge::default();
        let a = run_protocol(&records, &Ses::default(), &judge, &ProtocolConfig::default());
        let b = run_protocol(&records, &Ses::default(), &judge, &ProtocolConfig { workers: 2, ..Default::default() });
        assert_eq!(a, b);
    }
}
