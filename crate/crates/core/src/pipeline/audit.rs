use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{SampleRecord, TaskType, VerificationRecord};
use crate::ses::{CheckId, Indicator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditConfig {
    /// Reject the batch when the sampled error rate exceeds this.
    pub tau: f64,
    pub sample_fraction: f64,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            tau: 0.05,
            sample_fraction: 0.05,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditVerdict {
    Ok,
    Error,
}

/// One line of the annotations file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: String,
    pub verdict: AuditVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditDecision {
    pub decision: Decision,
    pub error_rate: f64,
    pub errors: usize,
    pub sample_size: usize,
    pub sampled_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("no verdict for sampled ids: {}", .0.join(", "))]
    MissingVerdict(Vec<String>),
    #[error("invalid audit config: {0}")]
    Config(String),
}

impl AuditConfig {
    pub fn validate(&self) -> Result<(), AuditError> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(AuditError::Config(format!("tau must lie in (0,1), got {}", self.tau)));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(AuditError::Config(format!(
                "sample_fraction must lie in (0,1], got {}",
                self.sample_fraction
            )));
        }
        Ok(())
    }

    /// `⌈fraction · n⌉`, robust to the fraction not being exactly representable.
    pub fn sample_size(&self, n: usize) -> usize {
        let raw = self.sample_fraction * n as f64;
        ((raw - 1e-9).ceil().max(0.0) as usize).min(n)
    }
}

/// Draws the audit sample, stratified by task type with proportional
/// (largest-remainder) allocation. Ids come back in input order.
pub fn draw_audit_sample(records: &[SampleRecord], cfg: &AuditConfig) -> Vec<String> {
    let total = cfg.sample_size(records.len());
    let mut strata: BTreeMap<TaskType, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        strata.entry(r.task_type).or_default().push(i);
    }
    let n = records.len() as f64;
    let mut alloc: Vec<(TaskType, usize, f64)> = strata
        .iter()
        .map(|(t, idx)| {
            let exact = total as f64 * idx.len() as f64 / n;
            (*t, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let mut remaining = total - alloc.iter().map(|a| a.1).sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..alloc.len()).collect();
    // largest remainder first; ties go to the larger stratum, then task-type order
    by_remainder.sort_by(|&a, &b| {
        alloc[b]
            .2
            .total_cmp(&alloc[a].2)
            .then_with(|| strata[&alloc[b].0].len().cmp(&strata[&alloc[a].0].len()))
            .then_with(|| alloc[a].0.cmp(&alloc[b].0))
    });
    for k in by_remainder {
        if remaining == 0 {
            break;
        }
        if alloc[k].1 < strata[&alloc[k].0].len() {
            alloc[k].1 += 1;
            remaining -= 1;
        }
    }
    let mut chosen = Vec::with_capacity(total);
    for (t, count, _) in alloc {
        let mut idx = strata[&t].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (t.index() as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        idx.shuffle(&mut rng);
        chosen.extend(idx.into_iter().take(count));
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| records[i].id.clone()).collect()
}

/// Layer-2 decision: reject iff the sampled error rate is strictly above `tau`.
pub fn audit_batch(
    records: &[SampleRecord],
    annotations: &[Annotation],
    cfg: &AuditConfig,
) -> Result<AuditDecision, AuditError> {
    cfg.validate()?;
    let sampled = draw_audit_sample(records, cfg);
    let verdicts: HashMap<&str, AuditVerdict> = annotations.iter().map(|a| (a.id.as_str(), a.verdict)).collect();
    let missing: Vec<String> = sampled.iter().filter(|id| !verdicts.contains_key(id.as_str())).cloned().collect();
    if !missing.is_empty() {
        return Err(AuditError::MissingVerdict(missing));
    }
    let errors = sampled
        .iter()
        .filter(|id| verdicts[id.as_str()] == AuditVerdict::Error)
        .count();
    let error_rate = if sampled.is_empty() {
        0.0
    } else {
        errors as f64 / sampled.len() as f64
    };
    Ok(AuditDecision {
        decision: if error_rate > cfg.tau { Decision::Reject } else { Decision::Accept },
        error_rate,
        errors,
        sample_size: sampled.len(),
        sampled_ids: sampled,
    })
}

/// What reviewers flagged, grouped for feeding back into generation templates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorPatternSummary {
    pub errors: usize,
    pub by_task_type: BTreeMap<String, usize>,
    /// Failing checks among flagged records.
    pub by_failed_check: BTreeMap<CheckId, usize>,
    pub notes: Vec<String>,
}

pub fn error_pattern_summary(records: &[VerificationRecord], annotations: &[Annotation]) -> ErrorPatternSummary {
    let by_id: HashMap<&str, &VerificationRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut out = ErrorPatternSummary::default();
    for a in annotations.iter().filter(|a| a.verdict == AuditVerdict::Error) {
        out.errors += 1;
        if let Some(note) = &a.note {
            out.notes.push(format!("{}: {note}", a.id));
        }
        let Some(r) = by_id.get(a.id.as_str()) else { continue };
        *out.by_task_type.entry(r.task_type.to_string()).or_default() += 1;
        for rep in r.reports.iter().filter(|rep| rep.status == Indicator::Fail) {
            *out.by_failed_check.entry(rep.check).or_default() += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(n: usize) -> Vec<SampleRecord> {
        (0..n)
            .map(|i| SampleRecord {
                id: format!("r{i:04}"),
                task_type: TaskType::ALL[i % 5],
                ..SampleRecord::adhoc(format!("q{i}"), "a")
            })
            .collect()
    }

    fn annotate(ids: &[String], errors: usize) -> Vec<Annotation> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| Annotation {
                id: id.clone(),
                verdict: if i < errors { AuditVerdict::Error } else { AuditVerdict::Ok },
                note: None,
            })
            .collect()
    }

    #[test]
    fn test_sample_size_is_ceiling() {
        let cfg = AuditConfig::default();
        assert_eq!(cfg.sample_size(100), 5);
        assert_eq!(cfg.sample_size(101), 6);
        assert_eq!(cfg.sample_size(2000), 100);
        assert_eq!(cfg.sample_size(0), 0);
    }

    #[test]
    fn test_stratified_proportions() {
        let records = batch(2000);
        let ids = draw_audit_sample(&records, &AuditConfig::default());
        assert_eq!(ids.len(), 100);
        let mut per_type = BTreeMap::new();
        for id in &ids {
            let r = records.iter().find(|r| &r.id == id).unwrap();
            *per_type.entry(r.task_type).or_insert(0) += 1;
        }
        assert!(per_type.values().all(|c| *c == 20));
    }

    #[test]
    fn test_boundary_is_accept() {
        let records = batch(2000);
        let cfg = AuditConfig::default();
        let ids = draw_audit_sample(&records, &cfg);
        let d = audit_batch(&records, &annotate(&ids, 5), &cfg).unwrap();
        assert_eq!(d.error_rate, 0.05);
        assert_eq!(d.decision, Decision::Accept);
        let d = audit_batch(&records, &annotate(&ids, 0), &cfg).unwrap();
        assert_eq!(d.decision, Decision::Accept);
    }

    #[test]
    fn test_missing_verdicts_listed() {
        let records = batch(100);
        let cfg = AuditConfig::default();
        let ids = draw_audit_sample(&records, &cfg);
        let partial = annotate(&ids[1..], 0);
        assert_eq!(
            audit_batch(&records, &partial, &cfg),
            Err(AuditError::MissingVerdict(vec![ids[0].clone()]))
        );
    }
}
