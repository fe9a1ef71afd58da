use std::time::{Duration, Instant};

use qreward_core::corpus::{box_ground_state_fixture, commutator_fixture};
use qreward_core::judge::{classify_semantic, score_semantic, JudgeRequest, StubJudge, DEFAULT_ZETA};
use qreward_core::ses::{CheckId, Indicator, PerDim, Ses};

#[test]
fn test_commutator_fixture_passes_both_dimensions() {
    let ses = Ses::default();
    let start = Instant::now();
    let out = ses.verify(&commutator_fixture());
    assert!(start.elapsed() < Duration::from_secs(1));
    assert_eq!(out.v, PerDim::new(Indicator::Pass, Indicator::Pass, Indicator::Unavailable));
    assert!(!out.unparsable);
    let passed: Vec<CheckId> = out.reports.iter().filter(|r| r.status == Indicator::Pass).map(|r| r.check).collect();
    assert!(passed.contains(&CheckId::M1) && passed.contains(&CheckId::P5), "{passed:?}");
}

#[test]
fn test_box_fixture_fails_zero_point_energy() {
    let ses = Ses::default();
    let start = Instant::now();
    let out = ses.verify(&box_ground_state_fixture());
    assert!(start.elapsed() < Duration::from_secs(1));
    assert_eq!(out.v, PerDim::new(Indicator::Pass, Indicator::Fail, Indicator::Unavailable));
    let failing: Vec<_> = out.reports.iter().filter(|r| r.status == Indicator::Fail).collect();
    assert_eq!(failing.len(), 1);
    assert_eq!(failing[0].check, CheckId::P7);
    assert_eq!(failing[0].check.title(), "Zero-Point Energy Check");
}

#[test]
fn test_verification_is_deterministic() {
    let ses = Ses::default();
    for record in [commutator_fixture(), box_ground_state_fixture()] {
        assert_eq!(ses.verify(&record), ses.verify(&record));
    }
}

#[test]
fn test_stub_judge_rates_commutator_fixture_highly() {
    let record = commutator_fixture();
    let out = Ses::default().verify(&record);
    let judged = score_semantic(
        &StubJudge::default(),
        &JudgeRequest {
            question: &record.question,
            answer: &record.answer,
            reference: record.reference_answer.as_deref(),
            verification: &out.v,
            reports: &out.reports,
        },
    )
    .unwrap();
    assert!(judged.scores.corr >= 0.9 && judged.scores.phys >= 0.9, "{:?}", judged.scores);
    assert!(classify_semantic(&judged.scores, DEFAULT_ZETA));
}
