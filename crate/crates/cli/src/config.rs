use std::fs;
use std::path::{Path, PathBuf};

use flowrec_core::corpus::{PwConfig, Strategy};
use flowrec_core::embed::TrainConfig;
use flowrec_core::eval::EvalConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_ENV: &str = "FLOWREC_CONFIG";

/// File-level settings. Command-line flags override these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct AppConfig {
    pub repo_path: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub graph_path: Option<PathBuf>,
    pub corpus_path: Option<PathBuf>,
    pub strategy: Strategy,
    pub dedupe: bool,
    pub pw: PwConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub listen_address: String,
    pub default_k: usize,
    pub session_ttl_secs: u64,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            repo_path: None,
            model_path: None,
            graph_path: None,
            corpus_path: None,
            strategy: Strategy::Pw,
            dedupe: false,
            pw: PwConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            listen_address: "127.0.0.1:8080".into(),
            default_k: 5,
            session_ttl_secs: 3600,
        }
    }
}

impl AppConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.default_k == 0 {
            return Err(CliError::Validation("defaultK must be at least 1".into()));
        }
        let empty = |p: &Option<PathBuf>| p.as_ref().is_some_and(|p| p.as_os_str().is_empty());
        if [
            &self.repo_path,
            &self.model_path,
            &self.graph_path,
            &self.corpus_path,
        ]
        .into_iter()
        .any(empty)
        {
            return Err(CliError::Validation(
                "configured paths must be non-empty".into(),
            ));
        }
        self.pw
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        self.eval
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: AppConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `--config` wins over the environment variable; neither means defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        match explicit {
            Some(p) => Self::from_file(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
                _ => Ok(AppConfig::default()),
            },
        }
    }
}
