use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, ValueEnum};

use crate::backend::{
    HeuristicQuality, HeuristicStance, QualityBackend, RemoteConfig, RemoteScorer, StanceBackend,
};
use crate::domain::{validate_threshold, ModuleKind, WeightVector, DEFAULT_TOP_K};
use crate::error::{Error, Result};
use crate::quality::{parse_weights, IndicatorRuleSet};
use crate::stance::StanceRuleSet;
use crate::store::DebateDefaults;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
pub const DEFAULT_SEED: u32 = 1;
pub const DEFAULT_THRESHOLD: f64 = 3.0;
pub const DEFAULT_WORKERS: usize = 2;
pub const DEFAULT_REMOTE_TIMEOUT_MS: u64 = 5000;
const MIN_SECRET_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Heuristic,
    Remote,
}

/// Process configuration. Every flag can also be set through the
/// environment variable shown in `--help`.
#[derive(Debug, Clone, Parser)]
#[command(name = "deliberate-server", version, about = "Deliberation platform HTTP service")]
pub struct ServiceConfig {
    #[arg(long, env = "DELIBERATE_LISTEN", default_value = DEFAULT_LISTEN)]
    pub listen: SocketAddr,

    #[arg(long, env = "DELIBERATE_DATA_DIR", default_value = "./data")]
    pub data_dir: PathBuf,

    #[arg(long, env = "DELIBERATE_STANCE_BACKEND", value_enum, default_value_t = BackendKind::Heuristic)]
    pub stance_backend: BackendKind,

    #[arg(long, env = "DELIBERATE_STANCE_URL")]
    pub stance_url: Option<String>,

    #[arg(long, env = "DELIBERATE_QUALITY_BACKEND", value_enum, default_value_t = BackendKind::Heuristic)]
    pub quality_backend: BackendKind,

    #[arg(long, env = "DELIBERATE_QUALITY_URL")]
    pub quality_url: Option<String>,

    /// Indicator weight file. Required when the quality module is enabled.
    #[arg(long, env = "DELIBERATE_WEIGHTS_FILE")]
    pub weights_file: Option<PathBuf>,

    /// Indicator marker rules for the heuristic quality backend.
    #[arg(long, env = "DELIBERATE_INDICATOR_RULES")]
    pub indicator_rules: Option<PathBuf>,

    /// Stance marker rules for the heuristic stance backend.
    #[arg(long, env = "DELIBERATE_STANCE_RULES")]
    pub stance_rules: Option<PathBuf>,

    #[arg(long, env = "DELIBERATE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u32,

    #[arg(long, env = "DELIBERATE_DEFAULT_THRESHOLD", default_value_t = DEFAULT_THRESHOLD)]
    pub default_threshold: f64,

    #[arg(long, env = "DELIBERATE_DEFAULT_TOP_K", default_value_t = DEFAULT_TOP_K)]
    pub default_top_k: u32,

    /// Secret mixed into issued tokens; also the admin bearer token.
    #[arg(long, env = "DELIBERATE_AUTH_SECRET", hide_env_values = true)]
    pub auth_secret: String,

    /// Background scoring threads. 0 leaves jobs to explicit drains.
    #[arg(long, env = "DELIBERATE_WORKERS", default_value_t = DEFAULT_WORKERS)]
    pub workers: usize,

    #[arg(long, env = "DELIBERATE_REMOTE_TIMEOUT_MS", default_value_t = DEFAULT_REMOTE_TIMEOUT_MS)]
    pub remote_timeout_ms: u64,

    /// Debate modules this instance serves.
    #[arg(
        long,
        env = "DELIBERATE_MODULES",
        value_delimiter = ',',
        default_value = "recommendation,quality"
    )]
    pub modules: Vec<ModuleKind>,
}

impl ServiceConfig {
    /// Defaults for everything except the data directory and secret.
    pub fn new(data_dir: impl Into<PathBuf>, auth_secret: impl Into<String>) -> Self {
        ServiceConfig {
            listen: DEFAULT_LISTEN.parse().expect("default listen address"),
            data_dir: data_dir.into(),
            stance_backend: BackendKind::Heuristic,
            stance_url: None,
            quality_backend: BackendKind::Heuristic,
            quality_url: None,
            weights_file: None,
            indicator_rules: None,
            stance_rules: None,
            seed: DEFAULT_SEED,
            default_threshold: DEFAULT_THRESHOLD,
            default_top_k: DEFAULT_TOP_K,
            auth_secret: auth_secret.into(),
            workers: DEFAULT_WORKERS,
            remote_timeout_ms: DEFAULT_REMOTE_TIMEOUT_MS,
            modules: vec![ModuleKind::Recommendation, ModuleKind::Quality],
        }
    }

    pub fn module_enabled(&self, kind: ModuleKind) -> bool {
        self.modules.contains(&kind)
    }

    pub fn debate_defaults(&self) -> DebateDefaults {
        DebateDefaults {
            top_k: self.default_top_k,
            threshold: self.default_threshold,
        }
    }

    /// Checks everything that does not need the filesystem.
    pub fn validate(&self) -> Result<()> {
        check_remote("stance_url", self.stance_backend, self.stance_url.as_deref())?;
        check_remote("quality_url", self.quality_backend, self.quality_url.as_deref())?;
        validate_threshold(self.default_threshold)
            .map_err(|e| Error::config("default_threshold", e.to_string()))?;
        if self.default_top_k == 0 {
            return Err(Error::config("default_top_k", "must be at least 1"));
        }
        if self.auth_secret.len() < MIN_SECRET_LEN {
            return Err(Error::config(
                "auth_secret",
                format!("must be at least {MIN_SECRET_LEN} characters"),
            ));
        }
        if self.remote_timeout_ms == 0 {
            return Err(Error::config("remote_timeout_ms", "must be positive"));
        }
        if self.modules.is_empty() {
            return Err(Error::config("modules", "at least one module must be enabled"));
        }
        if self.module_enabled(ModuleKind::Quality) && self.weights_file.is_none() {
            return Err(Error::config(
                "weights_file",
                "required when the quality module is enabled",
            ));
        }
        Ok(())
    }

    /// Loads the weight vector. Without the quality module the placeholder
    /// is used, since nothing is ever scored with it.
    pub fn load_weights(&self) -> Result<WeightVector> {
        if !self.module_enabled(ModuleKind::Quality) {
            return Ok(WeightVector::placeholder());
        }
        let path = self
            .weights_file
            .as_deref()
            .ok_or_else(|| Error::config("weights_file", "required when the quality module is enabled"))?;
        let text = read_config_file("weights_file", path)?;
        parse_weights(&text).map_err(|e| Error::config("weights_file", e.to_string()))
    }

    pub fn stance_backend(&self) -> Result<Arc<dyn StanceBackend>> {
        Ok(match self.stance_backend {
            BackendKind::Heuristic => {
                let rules = match &self.stance_rules {
                    Some(path) => StanceRuleSet::parse(&read_config_file("stance_rules", path)?)
                        .map_err(|e| Error::config("stance_rules", e.to_string()))?,
                    None => StanceRuleSet::default(),
                };
                Arc::new(HeuristicStance::new(rules))
            }
            BackendKind::Remote => Arc::new(self.remote("stance_url", self.stance_url.as_deref())?),
        })
    }

    pub fn quality_backend(&self) -> Result<Arc<dyn QualityBackend>> {
        Ok(match self.quality_backend {
            BackendKind::Heuristic => {
                let rules = match &self.indicator_rules {
                    Some(path) => IndicatorRuleSet::parse(&read_config_file("indicator_rules", path)?)
                        .map_err(|e| Error::config("indicator_rules", e.to_string()))?,
                    None => IndicatorRuleSet::default(),
                };
                Arc::new(HeuristicQuality::new(rules))
            }
            BackendKind::Remote => Arc::new(self.remote("quality_url", self.quality_url.as_deref())?),
        })
    }

    fn remote(&self, field: &str, url: Option<&str>) -> Result<RemoteScorer> {
        let url = url.ok_or_else(|| Error::config(field, "required for the remote backend"))?;
        Ok(RemoteScorer::new(
            RemoteConfig::new(url).with_timeout(Duration::from_millis(self.remote_timeout_ms)),
        ))
    }
}

fn check_remote(field: &str, kind: BackendKind, url: Option<&str>) -> Result<()> {
    match (kind, url) {
        (BackendKind::Remote, None) => Err(Error::config(field, "required when the backend is remote")),
        (BackendKind::Remote, Some(u)) if !(u.starts_with("http://") || u.starts_with("https://")) => {
            Err(Error::config(field, format!("`{u}` is not an http(s) URL")))
        }
        _ => Ok(()),
    }
}

fn read_config_file(field: &str, path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::config(field, format!("{}: {e}", path.display())))
}
