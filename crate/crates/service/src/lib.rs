//! HTTP reward service and the `qreward` command-line tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod server;

use std::path::Path;
use std::sync::Arc;

use qreward_core::fusion::{RewardEngine, ScoreMode};
use qreward_core::ses::Ses;
use qreward_core::vrm::{VrmError, VrmModel};
use sha2::{Digest, Sha256};

use crate::config::ServiceConfig;
use crate::error::CliError;

/// A model together with the hash of the exact bytes it was read from.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: Arc<VrmModel>,
    pub hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Reads a model file; every failure, including an extractor-version
/// mismatch, maps to [`CliError::ModelLoad`].
pub fn load_model(path: &Path) -> Result<LoadedModel, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::ModelLoad(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::ModelLoad(e.to_string()))?;
    let model = VrmModel::from_json(text).map_err(|e: VrmError| CliError::ModelLoad(e.to_string()))?;
    Ok(LoadedModel {
        model: Arc::new(model),
        hash: sha256_hex(&bytes),
    })
}

pub fn build_engine(cfg: &ServiceConfig, model: Arc<VrmModel>) -> Result<RewardEngine, CliError> {
    let mut engine = RewardEngine::new(model).with_lambda(cfg.lambda()?);
    engine.ses = Ses::new(cfg.ses.clone());
    if cfg.mode == ScoreMode::JudgePassthrough {
        engine = engine.with_judge(cfg.judge.build());
    }
    Ok(engine)
}
