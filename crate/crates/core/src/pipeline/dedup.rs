use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::SampleRecord;

/// Default near-duplicate threshold.
pub const DEFAULT_UPSILON: f64 = 0.85;

/// Text similarity in `[0,1]` over precomputed embeddings.
pub trait Similarity: Sync {
    type Embedding: Send + Sync;
    fn embed(&self, text: &str) -> Self::Embedding;
    fn similarity(&self, a: &Self::Embedding, b: &Self::Embedding) -> f64;
}

/// Cosine similarity of character-trigram count vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrigramCosine;

/// Sparse trigram counts, sorted by trigram, with a cached norm.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigramVector {
    counts: Vec<(String, f64)>,
    norm: f64,
}

/// Counts overlapping character trigrams. Texts shorter than three characters
/// count as a single gram so that equal short texts still match.
pub fn trigram_counts(text: &str) -> HashMap<String, usize> {
    let chars: Vec<char> = text.chars().collect();
    let mut counts = HashMap::new();
    if chars.is_empty() {
        return counts;
    }
    if chars.len() < 3 {
        counts.insert(text.to_string(), 1);
        return counts;
    }
    for w in chars.windows(3) {
        *counts.entry(w.iter().collect::<String>()).or_insert(0) += 1;
    }
    counts
}

impl Similarity for TrigramCosine {
    type Embedding = TrigramVector;

    fn embed(&self, text: &str) -> TrigramVector {
        let mut counts: Vec<(String, f64)> = trigram_counts(text).into_iter().map(|(k, c)| (k, c as f64)).collect();
        counts.sort_by(|a, b| a.0.cmp(&b.0));
        let norm = counts.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
        TrigramVector { counts, norm }
    }

    fn similarity(&self, a: &TrigramVector, b: &TrigramVector) -> f64 {
        if a.norm == 0.0 || b.norm == 0.0 {
            return 0.0;
        }
        let (mut i, mut j, mut dot) = (0, 0, 0.0);
        while i < a.counts.len() && j < b.counts.len() {
            match a.counts[i].0.cmp(&b.counts[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += a.counts[i].1 * b.counts[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        (dot / (a.norm * b.norm)).min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedPair {
    pub dropped: String,
    /// The earlier kept record it collided with.
    pub kept: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupResult {
    pub kept: Vec<SampleRecord>,
    pub dropped: Vec<DroppedPair>,
}

/// Greedy scan in input order: a record is dropped iff its question is at least
/// `upsilon`-similar to some already kept record.
pub fn dedup<S: Similarity>(records: Vec<SampleRecord>, upsilon: f64, sim: &S) -> DedupResult {
    let mut kept: Vec<(SampleRecord, S::Embedding)> = Vec::new();
    let mut dropped = Vec::new();
    for record in records {
        let e = sim.embed(&record.question);
        let hit = kept
            .iter()
            .map(|(k, ke)| (k, sim.similarity(&e, ke)))
            .find(|(_, s)| *s >= upsilon);
        match hit {
            Some((k, s)) => dropped.push(DroppedPair {
                dropped: record.id.clone(),
                kept: k.id.clone(),
                similarity: s,
            }),
            None => kept.push((record, e)),
        }
    }
    DedupResult {
        kept: kept.into_iter().map(|(r, _)| r).collect(),
        dropped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, q: &str) -> SampleRecord {
        SampleRecord {
            id: id.into(),
            ..SampleRecord::adhoc(q, "")
        }
    }

    #[test]
    fn test_identical_second_dropped() {
        let out = dedup(vec![rec("a", "same question"), rec("b", "same question")], 0.85, &TrigramCosine);
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.dropped[0].dropped, "b");
        assert_eq!(out.dropped[0].kept, "a");
        assert!((out.dropped[0].similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn test_disjoint_alphabets_both_kept() {
        let s = TrigramCosine;
        assert_eq!(s.similarity(&s.embed("abcabc"), &s.embed("xyzxyz")), 0.0);
        let out = dedup(vec![rec("a", "abcabc"), rec("b", "xyzxyz")], 0.85, &s);
        assert_eq!(out.kept.len(), 2);
    }

    #[test]
    fn test_cosine_hand_example() {
        // "abcd" -> {abc, bcd}; "abce" -> {abc, bce}: one shared trigram of two each
        let s = TrigramCosine;
        assert!((s.similarity(&s.embed("abcd"), &s.embed("abce")) - 0.5).abs() < 1e-15);
    }
}
