use serde::{Deserialize, Serialize};

use crate::pipeline::TaskType;
use crate::ses::{extract_claims, CheckReport, EvalDimension, Indicator};
use crate::util::fnv1a;

/// Bumped whenever feature semantics change; saved models record it.
pub const EXTRACTOR_VERSION: u32 = 1;

pub const STRUCTURED_FEATURES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub trigram_buckets: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { trigram_buckets: 240 }
    }
}

impl FeatureConfig {
    pub fn dim(&self) -> usize {
        self.trigram_buckets + STRUCTURED_FEATURES
    }
}

/// Text-level inputs of the feature extractor. The verification vector is
/// deliberately absent: it reaches only the weight head.
#[derive(Debug, Clone, Copy)]
pub struct FeatureInput<'a> {
    pub question: &'a str,
    pub answer: &'a str,
    pub reports: &'a [CheckReport],
    pub task_type: Option<TaskType>,
}

const MATH_CHARS: &str = "^*/=+-()[]{}_";

/// Hashed trigram block (L2-normalized) followed by 16 structured features:
///
/// | idx   | feature                                           |
/// |-------|---------------------------------------------------|
/// | 0–2   | answer length band one-hot (<80, <400, ≥400 chars)|
/// | 3     | extracted claim count                             |
/// | 4, 5  | math checks passed / failed, as a share of 4      |
/// | 6, 7  | physics checks passed / failed, as a share of 8   |
/// | 8     | unparsable claim block present                    |
/// | 9     | `<think>` tag present                             |
/// | 10    | share of math-ish characters in the answer        |
/// | 11–15 | task type one-hot                                 |
pub fn extract_features(cfg: &FeatureConfig, input: &FeatureInput<'_>) -> Vec<f64> {
    let mut out = vec![0.0; cfg.dim()];
    let text: Vec<char> = input.question.chars().chain(['\u{1f}']).chain(input.answer.chars()).collect();
    if cfg.trigram_buckets > 0 && text.len() > 1 {
        let mut buf = [0u8; 12];
        for w in text.windows(3) {
            let mut len = 0;
            for c in w {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            out[(fnv1a(&buf[..len]) % cfg.trigram_buckets as u64) as usize] += 1.0;
        }
        let norm = out[..cfg.trigram_buckets].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out[..cfg.trigram_buckets].iter_mut().for_each(|x| *x /= norm);
        }
    }

    let s = &mut out[cfg.trigram_buckets..];
    let answer_len = input.answer.chars().count();
    if answer_len > 0 {
        s[match answer_len {
            0..80 => 0,
            80..400 => 1,
            _ => 2,
        }] = 1.0;
    }
    let bundle = extract_claims(input.answer);
    s[3] = bundle.len() as f64;
    let count = |dim: EvalDimension, status: Indicator| {
        input
            .reports
            .iter()
            .filter(|r| r.check.dimension() == dim && r.status == status)
            .count() as f64
    };
    s[4] = count(EvalDimension::Corr, Indicator::Pass) / 4.0;
    s[5] = count(EvalDimension::Corr, Indicator::Fail) / 4.0;
    s[6] = count(EvalDimension::Phys, Indicator::Pass) / 8.0;
    s[7] = count(EvalDimension::Phys, Indicator::Fail) / 8.0;
    s[8] = if bundle.is_unparsable() { 1.0 } else { 0.0 };
    s[9] = if input.answer.contains("<think>") { 1.0 } else { 0.0 };
    if answer_len > 0 {
        let mathy = input
            .answer
            .chars()
            .filter(|c| c.is_ascii_digit() || MATH_CHARS.contains(*c))
            .count();
        s[10] = mathy as f64 / answer_len as f64;
    }
    if let Some(t) = input.task_type {
        s[11 + t.index()] = 1.0;
    }
    out
}
