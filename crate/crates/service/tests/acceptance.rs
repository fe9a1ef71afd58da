//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p qreward --test acceptance`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use qreward_core::corpus::{
    box_ground_state_fixture, commutator_fixture, planted_records, Corruptor, PlantedCells, SyntheticCorpus,
};
use qreward_core::fusion::{aggregate, fuse, LambdaMap, RewardBreakdown};
use qreward_core::harness::{
    ablation_auc, audit_with_errors, bon_curve, gradient_check, max_pairwise_similarity, stub_oracle_corpus,
};
use qreward_core::judge::DEFAULT_ZETA;
use qreward_core::pipeline::{confusion_matrix, corpus_stats, dedup, AuditConfig, Decision, TrigramCosine, DEFAULT_UPSILON};
use qreward_core::ses::{CheckId, Indicator, PerDim, Ses};
use qreward_core::vrm::{prepare, train, FeatureConfig, TrainConfig, VrmModel};
use qreward_core::RewardEngine;
use qreward_service::config::ServiceConfig;
use qreward_service::server::{serve_background, AppState, ScoreRequest};
use qreward_service::{build_engine, load_model};

// pinned tolerances
const ARF_TOL: f64 = 1e-12;
const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_BUDGET: Duration = Duration::from_secs(30);
const FIXTURE_BUDGET: Duration = Duration::from_secs(1);
const LOSS_RATIO_MAX: f64 = 0.2;
const BON_TRIALS: usize = 120;
const BON_SPEARMAN_MIN: f64 = 0.9;
const ABLATION_ITEMS: usize = 500;
const ABLATION_GAP_MIN: f64 = 0.05;
const PARITY_FIXTURES: u64 = 100;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn fixture_verdicts() -> Outcome {
    let ses = Ses::default();
    let t0 = Instant::now();
    let one = ses.verify(&commutator_fixture());
    let d1 = t0.elapsed();
    let t1 = Instant::now();
    let two = ses.verify(&box_ground_state_fixture());
    let d2 = t1.elapsed();
    let failing: Vec<_> = two.reports.iter().filter(|r| r.status == Indicator::Fail).map(|r| r.check).collect();
    let pass = one.v == PerDim::new(Indicator::Pass, Indicator::Pass, Indicator::Unavailable)
        && two.v == PerDim::new(Indicator::Pass, Indicator::Fail, Indicator::Unavailable)
        && failing == [CheckId::P7]
        && CheckId::P7.title() == "Zero-Point Energy Check"
        && d1 < FIXTURE_BUDGET
        && d2 < FIXTURE_BUDGET;
    Outcome {
        name: "fixture verdicts",
        pass,
        detail: format!(
            "sample1 v={:?} ({d1:.1?}), sample2 v={:?} failing={failing:?} ({d2:.1?})",
            one.v.as_reals(),
            two.v.as_reals()
        ),
    }
}

fn arf_arithmetic() -> Outcome {
    let lambda = LambdaMap::new(0.05).unwrap();
    let fused = fuse(&PerDim::splat(Indicator::Fail), &PerDim::splat(0.6), &lambda).phys;
    let r = aggregate(&PerDim::new(0.5, 0.8, 0.2), &PerDim::new(1.0, 0.62, 0.7));
    Outcome {
        name: "fusion arithmetic",
        pass: (fused - 0.62).abs() <= ARF_TOL && (r - 1.136).abs() <= ARF_TOL,
        detail: format!("s~={fused:.15} (0.62), r={r:.15} (1.136), tol {ARF_TOL:e}"),
    }
}

fn gradients() -> Outcome {
    let batch = prepare(&FeatureConfig::default(), &stub_oracle_corpus(3, 16).unwrap());
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let model = VrmModel::init(FeatureConfig::default(), 64, seed);
        worst = worst.max(gradient_check(&model, &batch, 1.0, 50, seed + 100).max_rel_error);
    }
    let elapsed = start.elapsed();
    Outcome {
        name: "gradient check",
        pass: worst <= GRAD_REL_TOL && elapsed < GRAD_BUDGET,
        detail: format!("max rel err {worst:.2e} over 50 coords x 10 seeds (tol {GRAD_REL_TOL:e}), {elapsed:.1?}"),
    }
}

fn convergence() -> (Outcome, VrmModel) {
    let data = stub_oracle_corpus(1, 1000).unwrap();
    let (train_set, held_out) = data.split_at(1800);
    let report = train(train_set, &TrainConfig::default()).unwrap();
    let ratio = report.epoch_losses.last().unwrap() / report.initial_loss;
    let (mut pass_w, mut unavailable_w) = (Vec::new(), Vec::new());
    for ex in held_out {
        let p = ex.prepare(&report.model.features);
        let (_, w) = report.model.forward(&p.h, &ex.v).unwrap();
        for (dim, v) in ex.v.iter() {
            match v {
                Indicator::Pass => pass_w.push(*w.get(dim)),
                Indicator::Unavailable => unavailable_w.push(*w.get(dim)),
                Indicator::Fail => {}
            }
        }
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
    let (mp, mu) = (mean(&pass_w), mean(&unavailable_w));
    let outcome = Outcome {
        name: "training convergence",
        pass: data.len() == 2000 && ratio <= LOSS_RATIO_MAX && mp > mu,
        detail: format!(
            "{} examples, loss {:.4} -> {:.4} (ratio {ratio:.3}, max {LOSS_RATIO_MAX}); held-out mean w: v=+1 {mp:.3}, v=0 {mu:.3}",
            data.len(),
            report.initial_loss,
            report.epoch_losses.last().unwrap()
        ),
    };
    (outcome, report.model)
}

fn bon(engine: &RewardEngine) -> Outcome {
    let curve = bon_curve(engine, 1234, BON_TRIALS, &[1, 2, 4, 8, 16, 32]).unwrap();
    let rho = curve.spearman();
    Outcome {
        name: "best-of-n monotonicity",
        pass: curve.is_nondecreasing() && rho >= BON_SPEARMAN_MIN,
        detail: format!(
            "{BON_TRIALS} trials, mean quality {:?}, spearman {rho:.3} (min {BON_SPEARMAN_MIN})",
            curve.mean_quality.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn ablation(engine: &RewardEngine) -> Outcome {
    let r = ablation_auc(engine, 77, ABLATION_ITEMS).unwrap();
    Outcome {
        name: "verifier ablation",
        pass: r.gap() >= ABLATION_GAP_MIN,
        detail: format!(
            "{ABLATION_ITEMS} items, AUC full {:.3} vs v forced to 0 {:.3}, gap {:.3} (min {ABLATION_GAP_MIN})",
            r.full_auc,
            r.ablated_auc,
            r.gap()
        ),
    }
}

fn confusion() -> Outcome {
    let cells = PlantedCells {
        det_pass_sem_pass: 166,
        det_pass_sem_fail: 25,
        det_fail_sem_pass: 158,
        det_fail_sem_fail: 151,
    };
    let records = planted_records(cells, PerDim::new(407, 340, 463)).unwrap();
    let m = confusion_matrix(&records, DEFAULT_ZETA);
    let phys = corpus_stats(&records, DEFAULT_ZETA).dimension_pass_rate.phys;
    Outcome {
        name: "confusion machinery",
        pass: m.cells() == [166, 25, 158, 151] && format!("{phys:.3}") == "0.680",
        detail: format!("cells {:?}, Phys pass rate {phys:.3}", m.cells()),
    }
}

fn audit_and_dedup() -> Outcome {
    let records = SyntheticCorpus::new(9).take(2000);
    let cfg = AuditConfig::default();
    let six = audit_with_errors(&records, &cfg, 6).unwrap();
    let four = audit_with_errors(&records, &cfg, 4).unwrap();
    let corpus = SyntheticCorpus::new(5).take(600);
    let out = dedup(corpus, DEFAULT_UPSILON, &TrigramCosine);
    let worst = max_pairwise_similarity(&out.kept, &TrigramCosine);
    Outcome {
        name: "audit and dedup",
        pass: six.decision == Decision::Reject && four.decision == Decision::Accept && worst < DEFAULT_UPSILON,
        detail: format!(
            "tau 0.05: {:.0}% -> {:?}, {:.0}% -> {:?} (sample {}); dedup kept {} dropped {}, max kept similarity {worst:.3}",
            six.error_rate * 100.0,
            six.decision,
            four.error_rate * 100.0,
            four.decision,
            six.sample_size,
            out.kept.len(),
            out.dropped.len()
        ),
    }
}

fn service_parity(model: &VrmModel) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = load_model(&path).unwrap();
    let cfg = ServiceConfig::default();
    let engine = build_engine(&cfg, loaded.model.clone()).unwrap();
    let state = Arc::new(AppState::new(engine.clone(), loaded.hash.clone(), cfg.max_concurrency, cfg.max_candidates, cfg.body_limit));
    let addr = serve_background("127.0.0.1:0".parse().unwrap(), state).unwrap();
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();

    let mut corpus = SyntheticCorpus::new(2024);
    let corruptor = Corruptor::new(1.0, 9);
    let mut mismatches = 0;
    for i in 0..PARITY_FIXTURES {
        let mut record = corpus.positive();
        if i % 3 == 0 {
            record = corruptor.corrupt(&record, i).unwrap_or(record);
        }
        let request = ScoreRequest {
            question: record.question.clone(),
            answer: record.answer.clone(),
            reference_answer: record.reference_answer.clone(),
            task_type: Some(record.task_type),
        };
        let remote: Option<RewardBreakdown> = agent
            .post(format!("http://{addr}/v1/score"))
            .send_json(&request)
            .ok()
            .filter(|r| r.status() == 200)
            .and_then(|mut r| r.body_mut().read_json().ok());
        if remote.as_ref() != Some(&engine.reward(&request.record()).unwrap()) {
            mismatches += 1;
        }
    }
    Outcome {
        name: "service parity",
        pass: mismatches == 0,
        detail: format!("{PARITY_FIXTURES} fixtures over HTTP, {mismatches} differ from in-process"),
    }
}

fn main() {
    let started = Instant::now();
    let mut outcomes = vec![fixture_verdicts(), arf_arithmetic(), gradients()];
    let (conv, model) = convergence();
    outcomes.push(conv);
    let engine = RewardEngine::new(Arc::new(model.clone()));
    outcomes.push(bon(&engine));
    outcomes.push(ablation(&engine));
    outcomes.push(confusion());
    outcomes.push(audit_and_dedup());
    outcomes.push(service_parity(&model));

    println!("acceptance ({} criteria)", outcomes.len());
    for o in &outcomes {
        println!("{} {:<24} {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("{} passed, {failed} failed in {:.1?}", outcomes.len() - failed, started.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
