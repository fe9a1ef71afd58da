use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureConfig;
use super::model::{Prepared, VrmModel};
use super::oracle::TrainingExample;
use super::VrmError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Weight of the score-regression term.
    pub beta: f64,
    pub hidden: usize,
    pub features: FeatureConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 4,
            batch_size: 64,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            beta: 1.0,
            hidden: 64,
            features: FeatureConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Learning rate used when fine-tuning a full language-model backbone; far
    /// too small for the desk-scale heads, kept for reference runs.
    pub fn backbone_preset() -> Self {
        Self {
            learning_rate: 5e-6,
            hidden: 1024,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub model: VrmModel,
    /// Full-dataset loss before the first update.
    pub initial_loss: f64,
    /// Full-dataset loss after each epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], g: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
        }
    }
}

/// Extracts features for every example.
pub fn prepare(features: &FeatureConfig, dataset: &[TrainingExample]) -> Vec<Prepared> {
    dataset.iter().map(|ex| ex.prepare(features)).collect()
}

/// Mini-batch Adam on the joint loss. Deterministic for a given seed and data.
pub fn train(dataset: &[TrainingExample], cfg: &TrainConfig) -> Result<TrainReport, VrmError> {
    let prepared = prepare(&cfg.features, dataset);
    train_prepared(&prepared, cfg)
}

pub fn train_prepared(data: &[Prepared], cfg: &TrainConfig) -> Result<TrainReport, VrmError> {
    if data.is_empty() {
        return Err(VrmError::EmptyDataset);
    }
    let mut model = VrmModel::init(cfg.features, cfg.hidden, cfg.seed);
    let initial_loss = model.loss(data, cfg.beta);
    let mut adam = Adam::new(model.params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut steps = 0;
    let batch_size = cfg.batch_size.max(1);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            let batch: Vec<Prepared> = chunk.iter().map(|&i| data[i].clone()).collect();
            let (loss, g) = model.loss_and_grad(&batch, cfg.beta);
            if !loss.is_finite() || g.iter().any(|x| !x.is_finite()) {
                return Err(VrmError::NonFiniteLoss { step: steps });
            }
            adam.step(&mut model.params, &g, cfg);
            steps += 1;
        }
        epoch_losses.push(model.loss(data, cfg.beta));
    }
    Ok(TrainReport {
        model,
        initial_loss,
        epoch_losses,
        steps,
    })
}

/// Runs a fixed number of full-batch steps; used for overfitting checks.
pub fn train_steps(data: &[Prepared], cfg: &TrainConfig, steps: usize) -> Result<TrainReport, VrmError> {
    if data.is_empty() {
        return Err(VrmError::EmptyDataset);
    }
    let mut model = VrmModel::init(cfg.features, cfg.hidden, cfg.seed);
    let initial_loss = model.loss(data, cfg.beta);
    let mut adam = Adam::new(model.params.len());
    for step in 0..steps {
        let (loss, g) = model.loss_and_grad(data, cfg.beta);
        if !loss.is_finite() {
            return Err(VrmError::NonFiniteLoss { step });
        }
        adam.step(&mut model.params, &g, cfg);
    }
    let last = model.loss(data, cfg.beta);
    Ok(TrainReport {
        model,
        initial_loss,
        epoch_losses: vec![last],
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            features: FeatureConfig { trigram_buckets: 8 },
            hidden: 8,
            seed: 5,
            ..TrainConfig::default()
        }
    }

    fn example(seed: f64) -> Prepared {
        Prepared {
            h: (0..24).map(|i| ((i as f64 + seed) * 0.61).sin()).collect(),
            v: [1.0, -1.0, 0.0],
            s_star: [0.9, 0.2, 0.6],
            w_star: [0.9, 0.7, 0.35],
        }
    }

    #[test]
    fn test_single_example_overfits() {
        let cfg = TrainConfig {
            learning_rate: 1e-2,
            ..tiny_cfg()
        };
        let report = train_steps(&[example(0.0)], &cfg, 200).unwrap();
        assert!(report.epoch_losses[0] < 1e-3, "{}", report.epoch_losses[0]);
    }

    #[test]
    fn test_deterministic() {
        let data: Vec<Prepared> = (0..50).map(|i| example(i as f64)).collect();
        let a = train_prepared(&data, &tiny_cfg()).unwrap();
        let b = train_prepared(&data, &tiny_cfg()).unwrap();
        assert_eq!(a.model.to_json(), b.model.to_json());
    }

    #[test]
    fn test_beta_zero_leaves_scoring_head() {
        let data: Vec<Prepared> = (0..20).map(|i| example(i as f64)).collect();
        let cfg = TrainConfig { beta: 0.0, ..tiny_cfg() };
        let init = VrmModel::init(cfg.features, cfg.hidden, cfg.seed);
        let (_, g) = init.loss_and_grad(&data, 0.0);
        let n = init.scoring_head().len();
        assert!(g[..n].iter().all(|x| *x == 0.0));
        assert!(g[n..].iter().any(|x| *x != 0.0));
        let trained = train_prepared(&data, &cfg).unwrap().model;
        assert_eq!(trained.params[..n], init.params[..n]);
    }

    #[test]
    fn test_empty_dataset() {
        assert!(matches!(train_prepared(&[], &tiny_cfg()), Err(VrmError::EmptyDataset)));
    }

    #[test]
    fn test_non_finite_loss_reports_step() {
        let mut bad = example(0.0);
        bad.h[0] = f64::NAN;
        let err = train_prepared(&[example(1.0), bad], &TrainConfig { batch_size: 1, ..tiny_cfg() }).unwrap_err();
        assert!(matches!(err, VrmError::NonFiniteLoss { .. }));
    }
}
