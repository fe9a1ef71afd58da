use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureConfig, EXTRACTOR_VERSION};
use super::VrmError;
use crate::judge::{OracleWeights, SemanticScores};
use crate::ses::{PerDim, VerificationVector};

pub const OUTPUTS: usize = 3;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x * FRAC_1_SQRT_2))
}

fn gelu_prime(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * FRAC_1_SQRT_2)) + x * (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// A 3-layer MLP `input → hidden → hidden → 3` with GeLU between layers and a
/// sigmoid on the output, stored at `offset` in the flat parameter vector as
/// `W1, b1, W2, b2, W3, b3` (row-major, rows = outputs).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Head {
    pub input: usize,
    pub hidden: usize,
    pub offset: usize,
}

struct Cache {
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    y: [f64; OUTPUTS],
}

impl Head {
    pub fn param_count(input: usize, hidden: usize) -> usize {
        hidden * input + hidden + hidden * hidden + hidden + OUTPUTS * hidden + OUTPUTS
    }

    pub fn len(&self) -> usize {
        Self::param_count(self.input, self.hidden)
    }

    /// `(offset, fan_in)` of each weight/bias block, in storage order.
    fn blocks(&self) -> [(usize, usize, usize); 6] {
        let (n, h) = (self.input, self.hidden);
        let w1 = self.offset;
        let b1 = w1 + h * n;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        let w3 = b2 + h;
        let b3 = w3 + OUTPUTS * h;
        [(w1, h * n, n), (b1, h, n), (w2, h * h, h), (b2, h, h), (w3, OUTPUTS * h, h), (b3, OUTPUTS, h)]
    }

    fn affine(p: &[f64], w: usize, b: usize, rows: usize, x: &[f64]) -> Vec<f64> {
        let cols = x.len();
        (0..rows)
            .map(|r| {
                let row = &p[w + r * cols..w + (r + 1) * cols];
                p[b + r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    fn forward_cached(&self, p: &[f64], x: &[f64]) -> Cache {
        let [(w1, ..), (b1, ..), (w2, ..), (b2, ..), (w3, ..), (b3, ..)] = self.blocks();
        let z1 = Self::affine(p, w1, b1, self.hidden, x);
        let a1: Vec<f64> = z1.iter().map(|z| gelu(*z)).collect();
        let z2 = Self::affine(p, w2, b2, self.hidden, &a1);
        let a2: Vec<f64> = z2.iter().map(|z| gelu(*z)).collect();
        let z3 = Self::affine(p, w3, b3, OUTPUTS, &a2);
        let y = [sigmoid(z3[0]), sigmoid(z3[1]), sigmoid(z3[2])];
        Cache { z1, a1, z2, a2, y }
    }

    pub fn forward(&self, p: &[f64], x: &[f64]) -> [f64; OUTPUTS] {
        self.forward_cached(p, x).y
    }

    /// Accumulates `∂L/∂θ` into `g` given `∂L/∂y`.
    fn backward(&self, p: &[f64], x: &[f64], cache: &Cache, dy: [f64; OUTPUTS], g: &mut [f64]) {
        let [(w1, ..), (b1, ..), (w2, ..), (b2, ..), (w3, ..), (b3, ..)] = self.blocks();
        let h = self.hidden;
        let dz3: Vec<f64> = (0..OUTPUTS).map(|k| dy[k] * cache.y[k] * (1.0 - cache.y[k])).collect();
        let mut da2 = vec![0.0; h];
        for k in 0..OUTPUTS {
            g[b3 + k] += dz3[k];
            for j in 0..h {
                g[w3 + k * h + j] += dz3[k] * cache.a2[j];
                da2[j] += p[w3 + k * h + j] * dz3[k];
            }
        }
        let dz2: Vec<f64> = (0..h).map(|j| da2[j] * gelu_prime(cache.z2[j])).collect();
        let mut da1 = vec![0.0; h];
        for r in 0..h {
            g[b2 + r] += dz2[r];
            for j in 0..h {
                g[w2 + r * h + j] += dz2[r] * cache.a1[j];
                da1[j] += p[w2 + r * h + j] * dz2[r];
            }
        }
        let n = self.input;
        for r in 0..h {
            let dz1 = da1[r] * gelu_prime(cache.z1[r]);
            g[b1 + r] += dz1;
            let row = &mut g[w1 + r * n..w1 + (r + 1) * n];
            for (gi, xi) in row.iter_mut().zip(x) {
                *gi += dz1 * xi;
            }
        }
    }
}

/// The scoring head (features → s) and the weight head ([features; v] → w).
#[derive(Debug, Clone, PartialEq)]
pub struct VrmModel {
    pub features: FeatureConfig,
    pub hidden: usize,
    pub seed: u64,
    pub params: Vec<f64>,
}

/// One training example with its features already extracted.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub h: Vec<f64>,
    pub v: [f64; 3],
    pub s_star: [f64; 3],
    pub w_star: [f64; 3],
}

impl VrmModel {
    pub fn scoring_head(&self) -> Head {
        Head {
            input: self.features.dim(),
            hidden: self.hidden,
            offset: 0,
        }
    }

    pub fn dwa_head(&self) -> Head {
        Head {
            input: self.features.dim() + 3,
            hidden: self.hidden,
            offset: self.scoring_head().len(),
        }
    }

    pub fn param_count_for(features: &FeatureConfig, hidden: usize) -> usize {
        Head::param_count(features.dim(), hidden) + Head::param_count(features.dim() + 3, hidden)
    }

    pub fn zeros(features: FeatureConfig, hidden: usize) -> Self {
        Self {
            features,
            hidden,
            seed: 0,
            params: vec![0.0; Self::param_count_for(&features, hidden)],
        }
    }

    /// Every weight and bias uniform in `±1/√fan_in`.
    pub fn init(features: FeatureConfig, hidden: usize, seed: u64) -> Self {
        let mut model = Self::zeros(features, hidden);
        model.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for head in [model.scoring_head(), model.dwa_head()] {
            for (offset, len, fan_in) in head.blocks() {
                let bound = 1.0 / (fan_in as f64).sqrt();
                for p in &mut model.params[offset..offset + len] {
                    *p = rng.random_range(-bound..bound);
                }
            }
        }
        model
    }

    fn check_dim(&self, h: &[f64]) -> Result<(), VrmError> {
        if h.len() != self.features.dim() {
            return Err(VrmError::ShapeMismatch {
                expected: self.features.dim(),
                got: h.len(),
            });
        }
        Ok(())
    }

    pub fn scores(&self, h: &[f64]) -> Result<SemanticScores, VrmError> {
        self.check_dim(h)?;
        let [a, b, c] = self.scoring_head().forward(&self.params, h);
        Ok(PerDim::new(a, b, c))
    }

    pub fn weights(&self, h: &[f64], v: &VerificationVector) -> Result<OracleWeights, VrmError> {
        self.check_dim(h)?;
        let x = with_v(h, &v.as_reals());
        let [a, b, c] = self.dwa_head().forward(&self.params, &x);
        Ok(PerDim::new(a, b, c))
    }

    /// `(s, w)`; `s` ignores `v` by construction.
    pub fn forward(&self, h: &[f64], v: &VerificationVector) -> Result<(SemanticScores, OracleWeights), VrmError> {
        Ok((self.scores(h)?, self.weights(h, v)?))
    }

    /// Mean over the batch of `‖w − w*‖² + β‖s − s*‖²`.
    pub fn loss(&self, batch: &[Prepared], beta: f64) -> f64 {
        let (s_head, w_head) = (self.scoring_head(), self.dwa_head());
        let total: f64 = batch
            .iter()
            .map(|ex| {
                let s = s_head.forward(&self.params, &ex.h);
                let w = w_head.forward(&self.params, &with_v(&ex.h, &ex.v));
                sq_dist(&w, &ex.w_star) + beta * sq_dist(&s, &ex.s_star)
            })
            .sum();
        total / batch.len().max(1) as f64
    }

    /// Loss and its exact gradient with respect to every parameter.
    pub fn loss_and_grad(&self, batch: &[Prepared], beta: f64) -> (f64, Vec<f64>) {
        let (s_head, w_head) = (self.scoring_head(), self.dwa_head());
        let mut g = vec![0.0; self.params.len()];
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut total = 0.0;
        for ex in batch {
            let s_cache = s_head.forward_cached(&self.params, &ex.h);
            let xw = with_v(&ex.h, &ex.v);
            let w_cache = w_head.forward_cached(&self.params, &xw);
            total += sq_dist(&w_cache.y, &ex.w_star) + beta * sq_dist(&s_cache.y, &ex.s_star);
            let ds = std::array::from_fn(|k| 2.0 * beta * (s_cache.y[k] - ex.s_star[k]) * scale);
            let dw = std::array::from_fn(|k| 2.0 * (w_cache.y[k] - ex.w_star[k]) * scale);
            s_head.backward(&self.params, &ex.h, &s_cache, ds, &mut g);
            w_head.backward(&self.params, &xw, &w_cache, dw, &mut g);
        }
        (total * scale, g)
    }
}

fn with_v(h: &[f64], v: &[f64; 3]) -> Vec<f64> {
    let mut x = Vec::with_capacity(h.len() + 3);
    x.extend_from_slice(h);
    x.extend_from_slice(v);
    x
}

fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// On-disk model: a JSON parameter dump with a shape header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub extractor_version: u32,
    pub features: FeatureConfig,
    pub hidden: usize,
    pub seed: u64,
    /// Layer widths of each head, input first.
    pub shapes: PerHead,
    pub param_count: usize,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerHead {
    pub scoring: [usize; 4],
    pub dwa: [usize; 4],
}

pub const MODEL_FORMAT: &str = "qreward-vrm";
pub const MODEL_VERSION: u32 = 1;

impl VrmModel {
    pub fn to_file(&self) -> ModelFile {
        let d = self.features.dim();
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            extractor_version: EXTRACTOR_VERSION,
            features: self.features,
            hidden: self.hidden,
            seed: self.seed,
            shapes: PerHead {
                scoring: [d, self.hidden, self.hidden, OUTPUTS],
                dwa: [d + 3, self.hidden, self.hidden, OUTPUTS],
            },
            param_count: self.params.len(),
            params: self.params.clone(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self, VrmError> {
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(VrmError::Format(format!(
                "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
                file.format, file.version
            )));
        }
        if file.extractor_version != EXTRACTOR_VERSION {
            return Err(VrmError::ExtractorMismatch {
                model: file.extractor_version,
                runtime: EXTRACTOR_VERSION,
            });
        }
        let expected = Self::param_count_for(&file.features, file.hidden);
        let d = file.features.dim();
        let shapes_ok = file.shapes.scoring == [d, file.hidden, file.hidden, OUTPUTS]
            && file.shapes.dwa == [d + 3, file.hidden, file.hidden, OUTPUTS];
        if !shapes_ok || file.param_count != expected || file.params.len() != expected {
            return Err(VrmError::Format(format!(
                "parameter count {} (declared {}) does not match shapes needing {expected}",
                file.params.len(),
                file.param_count
            )));
        }
        if file.params.iter().any(|p| !p.is_finite()) {
            return Err(VrmError::Format("non-finite parameter".into()));
        }
        Ok(Self {
            features: file.features,
            hidden: file.hidden,
            seed: file.seed,
            params: file.params,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, VrmError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| VrmError::Format(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), VrmError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, VrmError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
