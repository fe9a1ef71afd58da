//! Measurement helpers shared by the integration tests, the acceptance suite
//! and the CLI: ranking AUC, Spearman correlation, the BoN quality curve, the
//! verifier-ablation comparison and a finite-difference gradient check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corruptor, SyntheticCorpus};
use crate::fusion::{FusionError, RewardEngine};
use crate::judge::{JudgeError, StubJudge};
use crate::pipeline::{
    audit_batch, draw_audit_sample, Annotation, AuditConfig, AuditDecision, AuditError, AuditVerdict, SampleRecord, Similarity,
};
use crate::ses::Ses;
use crate::vrm::{build_oracle_dataset, Prepared, TrainingExample, VrmModel};

/// Probability that a random positive outranks a random negative; ties count half.
pub fn roc_auc(scored: &[(f64, bool)]) -> f64 {
    let pos: Vec<f64> = scored.iter().filter(|(_, l)| *l).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scored.iter().filter(|(_, l)| !*l).map(|(s, _)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return 0.5;
    }
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        // average rank over the tie group, 1-based
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson on average ranks). NaN for constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs equal-length inputs");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    cov / (vx * vy).sqrt()
}

/// Oracle-distillation corpus: `n_fixtures` synthetic positives, each with one
/// corrupted copy, labelled by the stub judge.
pub fn stub_oracle_corpus(seed: u64, n_fixtures: usize) -> Result<Vec<TrainingExample>, JudgeError> {
    let fixtures = SyntheticCorpus::new(seed).take(n_fixtures);
    build_oracle_dataset(&fixtures, &StubJudge::default(), &Ses::default(), &Corruptor::new(1.0, seed ^ 0x9e37))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BonCurve {
    pub ns: Vec<usize>,
    /// Mean latent quality of the selected candidate for each `N`.
    pub mean_quality: Vec<f64>,
}

impl BonCurve {
    pub fn is_nondecreasing(&self) -> bool {
        self.mean_quality.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn spearman(&self) -> f64 {
        let ns: Vec<f64> = self.ns.iter().map(|n| *n as f64).collect();
        spearman(&ns, &self.mean_quality)
    }
}

/// Runs `trials` pools; the candidates for `N` are the first `N` of a shared
/// pool of size `max(ns)`, so larger `N` always sees a superset.
pub fn bon_curve(engine: &RewardEngine, seed: u64, trials: usize, ns: &[usize]) -> Result<BonCurve, FusionError> {
    let pool = ns.iter().copied().max().unwrap_or(1);
    let corruptor = Corruptor::new(1.0, seed.wrapping_add(5));
    let mut corpus = SyntheticCorpus::new(seed);
    let mut totals = vec![0.0; ns.len()];
    for _ in 0..trials {
        let (base, candidates) = corpus.candidate_pool(pool, &corruptor);
        for (slot, &n) in ns.iter().enumerate() {
            let answers: Vec<String> = candidates[..n].iter().map(|c| c.answer.clone()).collect();
            let (best, _) = engine.best_of_n(&base, &answers)?;
            totals[slot] += candidates[best].quality;
        }
    }
    Ok(BonCurve {
        ns: ns.to_vec(),
        mean_quality: totals.iter().map(|t| t / trials.max(1) as f64).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationResult {
    pub full_auc: f64,
    pub ablated_auc: f64,
}

impl AblationResult {
    pub fn gap(&self) -> f64 {
        self.full_auc - self.ablated_auc
    }
}

/// Labelled corpus of `n_items` (half positives, half rule-corrupted copies)
/// ranked by the full reward and by the reward with every indicator forced to 0.
pub fn ablation_auc(engine: &RewardEngine, seed: u64, n_items: usize) -> Result<AblationResult, FusionError> {
    let corruptor = Corruptor::new(1.0, seed.wrapping_add(5));
    let mut corpus = SyntheticCorpus::new(seed);
    let mut items = Vec::with_capacity(n_items);
    let mut salt = 0;
    while items.len() + 1 < n_items {
        let good = corpus.positive();
        salt += 1;
        if let Some(bad) = corruptor.corrupt(&good, salt) {
            items.push((good, true));
            items.push((bad, false));
        }
    }
    let ablated = engine.clone().without_verifier();
    let mut full_scores = Vec::with_capacity(items.len());
    let mut ablated_scores = Vec::with_capacity(items.len());
    for (record, label) in &items {
        full_scores.push((engine.reward(record)?.reward, *label));
        ablated_scores.push((ablated.reward(record)?.reward, *label));
    }
    Ok(AblationResult {
        full_auc: roc_auc(&full_scores),
        ablated_auc: roc_auc(&ablated_scores),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub coordinates: usize,
}

/// Compares analytic gradients against central differences on random
/// coordinates. The relative error uses `max(|g|, |fd|, floor)` as denominator.
pub fn gradient_check(model: &VrmModel, batch: &[Prepared], beta: f64, coords: usize, seed: u64) -> GradCheck {
    const STEP: f64 = 1e-5;
    const FLOOR: f64 = 1e-7;
    let (_, grad) = model.loss_and_grad(batch, beta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..coords {
        let i = rng.random_range(0..model.params.len());
        let orig = probe.params[i];
        probe.params[i] = orig + STEP;
        let up = probe.loss(batch, beta);
        probe.params[i] = orig - STEP;
        let down = probe.loss(batch, beta);
        probe.params[i] = orig;
        let fd = (up - down) / (2.0 * STEP);
        let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(FLOOR);
        worst = worst.max(rel);
    }
    GradCheck {
        max_rel_error: worst,
        coordinates: coords,
    }
}

/// Audits `records` with a reviewer who marks the first `errors` sampled ids as
/// errors and the rest as ok.
pub fn audit_with_errors(records: &[SampleRecord], cfg: &AuditConfig, errors: usize) -> Result<AuditDecision, AuditError> {
    let sampled = draw_audit_sample(records, cfg);
    let annotations: Vec<Annotation> = sampled
        .iter()
        .enumerate()
        .map(|(i, id)| Annotation {
            id: id.clone(),
            verdict: if i < errors { AuditVerdict::Error } else { AuditVerdict::Ok },
            note: None,
        })
        .collect();
    audit_batch(records, &annotations, cfg)
}

/// Largest pairwise similarity among the given questions (exhaustive, O(n²)).
pub fn max_pairwise_similarity<S: Similarity>(records: &[SampleRecord], sim: &S) -> f64 {
    let emb: Vec<S::Embedding> = records.iter().map(|r| sim.embed(&r.question)).collect();
    let mut worst: f64 = 0.0;
    for i in 0..emb.len() {
        for j in i + 1..emb.len() {
            worst = worst.max(sim.similarity(&emb[i], &emb[j]));
        }
    }
    worst
}
