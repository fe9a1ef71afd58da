use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Verdict, VerificationRecord};
use crate::judge::classify_semantic;
use crate::ses::PerDim;

/// Deterministic verdict (rows) against semantic verdict (columns).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub det_pass_sem_pass: usize,
    pub det_pass_sem_fail: usize,
    pub det_fail_sem_pass: usize,
    pub det_fail_sem_fail: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.det_pass_sem_pass + self.det_pass_sem_fail + self.det_fail_sem_pass + self.det_fail_sem_fail
    }

    pub fn cells(&self) -> [usize; 4] {
        [
            self.det_pass_sem_pass,
            self.det_pass_sem_fail,
            self.det_fail_sem_pass,
            self.det_fail_sem_fail,
        ]
    }

    /// Cell shares of the total, zero for an empty corpus.
    pub fn percentages(&self) -> [f64; 4] {
        let n = self.total();
        self.cells().map(|c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
    }
}

fn semantic_pass(r: &VerificationRecord, zeta: f64) -> bool {
    r.scores.as_ref().is_some_and(|s| classify_semantic(s, zeta))
}

/// Semantic pass is re-derived from the stored scores at `zeta`.
pub fn confusion_matrix(records: &[VerificationRecord], zeta: f64) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::default();
    for r in records {
        let cell = match (r.deterministic_pass, semantic_pass(r, zeta)) {
            (true, true) => &mut m.det_pass_sem_pass,
            (true, false) => &mut m.det_pass_sem_fail,
            (false, true) => &mut m.det_fail_sem_pass,
            (false, false) => &mut m.det_fail_sem_fail,
        };
        *cell += 1;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    /// Share of records whose score on each dimension reaches `zeta`.
    pub dimension_pass_rate: PerDim<f64>,
    pub task_types: BTreeMap<String, usize>,
    pub difficulties: BTreeMap<String, usize>,
    pub verdicts: BTreeMap<String, usize>,
}

fn label<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn corpus_stats(records: &[VerificationRecord], zeta: f64) -> CorpusStats {
    let mut passes = PerDim::splat(0usize);
    let mut task_types = BTreeMap::new();
    let mut difficulties = BTreeMap::new();
    let mut verdicts: BTreeMap<String, usize> = BTreeMap::new();
    for r in records {
        if let Some(s) = &r.scores {
            for (d, v) in s.iter() {
                if *v >= zeta - 1e-12 {
                    *passes.get_mut(d) += 1;
                }
            }
        }
        *task_types.entry(r.task_type.to_string()).or_default() += 1;
        *difficulties.entry(label(&r.difficulty)).or_default() += 1;
        *verdicts.entry(label(&r.verdict)).or_default() += 1;
    }
    let n = records.len();
    CorpusStats {
        total: n,
        dimension_pass_rate: passes.map(|_, p| if n == 0 { 0.0 } else { *p as f64 / n as f64 }),
        task_types,
        difficulties,
        verdicts,
    }
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Unparsable => "unparsable",
        }
    }
}
