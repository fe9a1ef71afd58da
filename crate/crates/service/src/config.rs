//! Service and CLI configuration, read from TOML and patched by command-line flags.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use qreward_core::fusion::{LambdaMap, ScoreMode, DEFAULT_LAMBDA_FAIL};
use qreward_core::judge::{JudgeBackend, RemoteJudge, RemoteJudgeConfig, StubJudge, StubJudgeConfig, DEFAULT_ZETA};
use qreward_core::pipeline::{AuditConfig, DEFAULT_UPSILON};
use qreward_core::ses::SesConfig;
use qreward_core::vrm::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_BODY_LIMIT: usize = 256 * 1024;
pub const MAX_CANDIDATES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeKind {
    Stub,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeSection {
    pub backend: JudgeKind,
    pub stub: StubJudgeConfig,
    /// The bearer token is read from the variable named in `remote.token_env`.
    pub remote: RemoteJudgeConfig,
}

impl Default for JudgeSection {
    fn default() -> Self {
        Self {
            backend: JudgeKind::Stub,
            stub: StubJudgeConfig::default(),
            remote: RemoteJudgeConfig::default(),
        }
    }
}

impl JudgeSection {
    pub fn build(&self) -> Arc<dyn JudgeBackend> {
        match self.backend {
            JudgeKind::Stub => Arc::new(StubJudge::new(self.stub.clone())),
            JudgeKind::Remote => Arc::new(RemoteJudge::new(self.remote.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub model: Option<PathBuf>,
    /// Master seed: request default for probing, audit sampling, training and synthesis.
    pub seed: u64,
    pub mode: ScoreMode,
    pub lambda_fail: f64,
    pub zeta: f64,
    pub upsilon: f64,
    pub max_concurrency: usize,
    pub body_limit: usize,
    pub max_candidates: usize,
    pub judge: JudgeSection,
    pub ses: SesConfig,
    pub audit: AuditConfig,
    pub train: TrainConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8787)),
            model: None,
            seed: 7,
            mode: ScoreMode::Vrm,
            lambda_fail: DEFAULT_LAMBDA_FAIL,
            zeta: DEFAULT_ZETA,
            upsilon: DEFAULT_UPSILON,
            max_concurrency: 16,
            body_limit: DEFAULT_BODY_LIMIT,
            max_candidates: MAX_CANDIDATES,
            judge: JudgeSection::default(),
            ses: SesConfig::default(),
            audit: AuditConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub lambda_fail: Option<f64>,
    pub zeta: Option<f64>,
    pub tau: Option<f64>,
    pub upsilon: Option<f64>,
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path` if given, applies overrides, propagates the master seed and validates.
    pub fn load(path: Option<&Path>, overrides: Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(x) = o.lambda_fail {
            self.lambda_fail = x;
        }
        if let Some(x) = o.zeta {
            self.zeta = x;
        }
        if let Some(x) = o.tau {
            self.audit.tau = x;
        }
        if let Some(x) = o.upsilon {
            self.upsilon = x;
        }
        self.ses.seed = self.seed;
        self.audit.seed = self.seed;
        self.train.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.lambda()?;
        if !(0.0..=1.0).contains(&self.zeta) {
            return Err(CliError::Config(format!("zeta must lie in [0, 1], got {}", self.zeta)));
        }
        if !(self.upsilon > 0.0 && self.upsilon <= 1.0) {
            return Err(CliError::Config(format!("upsilon must lie in (0, 1], got {}", self.upsilon)));
        }
        self.audit.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.max_concurrency == 0 || self.body_limit == 0 {
            return Err(CliError::Config("max_concurrency and body_limit must be positive".into()));
        }
        if !(1..=MAX_CANDIDATES).contains(&self.max_candidates) {
            return Err(CliError::Config(format!("max_candidates must lie in [1, {MAX_CANDIDATES}]")));
        }
        Ok(())
    }

    pub fn lambda(&self) -> Result<LambdaMap, CliError> {
        LambdaMap::new(self.lambda_fail).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_toml_sections_and_overrides() {
        let mut cfg = ServiceConfig::from_toml(
            r#"
            bind = "0.0.0.0:9000"
            seed = 3
            mode = "judge_passthrough"
            [judge]
            backend = "remote"
            [judge.remote]
            endpoint = "http://judge:1/v1/judge"
            [audit]
            tau = 0.1
            "#,
        )
        .unwrap();
        assert_eq!(cfg.mode, ScoreMode::JudgePassthrough);
        assert_eq!(cfg.judge.backend, JudgeKind::Remote);
        assert_eq!(cfg.judge.remote.timeout_secs, 30);
        cfg.apply(Overrides {
            seed: Some(11),
            tau: Some(0.02),
            ..Overrides::default()
        });
        assert_eq!((cfg.ses.seed, cfg.audit.seed, cfg.audit.tau), (11, 11, 0.02));
        cfg.validate().unwrap();
    }

    #[test]
    fn test_rejects_bad_values() {
        assert!(ServiceConfig::from_toml("nonsense = 1").is_err());
        let mut cfg = ServiceConfig::default();
        cfg.apply(Overrides {
            lambda_fail: Some(0.5),
            ..Overrides::default()
        });
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        let cfg = ServiceConfig {
            upsilon: 0.0,
            ..ServiceConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
