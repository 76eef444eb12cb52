use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::ReportConfig;
use crate::pipeline::PipelineConfig;

pub const ENV_PREFIX: &str = "REVERTRISK_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("environment variable {name}: cannot parse `{value}`")]
    Env { name: String, value: String },
    #[error("{what} not found: {path}")]
    MissingFile { what: &'static str, path: PathBuf },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpstreamConfig {
    /// MediaWiki action API endpoint, e.g. `https://www.wikidata.org/w/api.php`.
    pub base_url: String,
    pub user_agent: String,
    pub requests_per_second: f64,
    pub timeout_ms: u64,
    /// Revisions kept in the fetch cache.
    pub cache_capacity: usize,
}

impl Default for UpstreamConfig {
    fn default() -> Self {
        Self {
            base_url: "https://www.wikidata.org/w/api.php".to_owned(),
            user_agent: format!(
                "revertrisk/{} (https://github.com/revertrisk/revertrisk; revertrisk@users.noreply.github.com)",
                env!("CARGO_PKG_VERSION")
            ),
            requests_per_second: 5.0,
            timeout_ms: 10_000,
            cache_capacity: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub content_model: PathBuf,
    pub final_model: PathBuf,
    /// Tab-separated `id<TAB>label` file.
    pub labels: PathBuf,
    pub max_body_bytes: usize,
    /// Concurrent scoring jobs, and runtime worker threads.
    pub workers: usize,
    pub request_timeout_ms: u64,
    /// Serve `{revision_id}` requests by fetching from the upstream API.
    pub enable_fetch: bool,
    pub upstream: UpstreamConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            content_model: PathBuf::from("models/content.json"),
            final_model: PathBuf::from("models/final.json"),
            labels: PathBuf::from("models/labels.tsv"),
            max_body_bytes: 2 * 1024 * 1024,
            workers: 1,
            request_timeout_ms: 5_000,
            enable_fetch: true,
            upstream: UpstreamConfig::default(),
        }
    }
}

/// Command-line values; each `Some` wins over environment and file.
#[derive(Debug, Clone, Default)]
pub struct ServiceOverrides {
    pub listen: Option<SocketAddr>,
    pub content_model: Option<PathBuf>,
    pub final_model: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub workers: Option<usize>,
    pub upstream_url: Option<String>,
    pub rate_limit: Option<f64>,
}

fn env_parse<T: std::str::FromStr>(
    env: &impl Fn(&str) -> Option<String>,
    key: &str,
    slot: &mut T,
) -> Result<(), ConfigError> {
    let name = format!("{ENV_PREFIX}{key}");
    if let Some(value) = env(&name) {
        *slot = value.parse().map_err(|_| ConfigError::Env { name, value })?;
    }
    Ok(())
}

impl ServiceConfig {
    /// Environment variables: `REVERTRISK_LISTEN`, `_CONTENT_MODEL`,
    /// `_FINAL_MODEL`, `_LABELS`, `_WORKERS`, `_UPSTREAM_URL`, `_RATE_LIMIT`.
    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        env_parse(&env, "LISTEN", &mut self.listen)?;
        env_parse(&env, "CONTENT_MODEL", &mut self.content_model)?;
        env_parse(&env, "FINAL_MODEL", &mut self.final_model)?;
        env_parse(&env, "LABELS", &mut self.labels)?;
        env_parse(&env, "WORKERS", &mut self.workers)?;
        env_parse(&env, "UPSTREAM_URL", &mut self.upstream.base_url)?;
        env_parse(&env, "RATE_LIMIT", &mut self.upstream.requests_per_second)?;
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &ServiceOverrides) {
        macro_rules! set {
            ($src:expr, $dst:expr) => {
                if let Some(v) = &$src {
                    $dst = v.clone();
                }
            };
        }
        set!(o.listen, self.listen);
        set!(o.content_model, self.content_model);
        set!(o.final_model, self.final_model);
        set!(o.labels, self.labels);
        set!(o.workers, self.workers);
        set!(o.upstream_url, self.upstream.base_url);
        set!(o.rate_limit, self.upstream.requests_per_second);
    }

    /// Checks the startup invariants: model and label files exist, at least
    /// one worker, a positive rate limit.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (what, path) in [
            ("content model", &self.content_model),
            ("final model", &self.final_model),
            ("label map", &self.labels),
        ] {
            if !path.is_file() {
                return Err(ConfigError::MissingFile {
                    what,
                    path: path.clone(),
                });
            }
        }
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if !(self.upstream.requests_per_second > 0.0) {
            return Err(ConfigError::Invalid("rate limit must be positive".into()));
        }
        if self.max_body_bytes == 0 || self.request_timeout_ms == 0 {
            return Err(ConfigError::Invalid("body limit and timeout must be positive".into()));
        }
        Ok(())
    }
}

/// The whole TOML configuration file. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub pipeline: PipelineConfig,
    pub report: ReportConfig,
    pub service: ServiceConfig,
}

impl AppConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    /// File (if any), then environment, then flags.
    pub fn resolve(
        file: Option<&Path>,
        env: impl Fn(&str) -> Option<String>,
        overrides: &ServiceOverrides,
    ) -> Result<Self, ConfigError> {
        let mut config = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        config.service.apply_env(env)?;
        config.service.apply_overrides(overrides);
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn precedence_is_flags_env_file() {
        let file = r#"
            [service]
            workers = 2
            listen = "127.0.0.1:9000"
            labels = "file.tsv"
        "#;
        let mut config = AppConfig::from_toml(file, Path::new("x.toml")).unwrap();
        let env: HashMap<&str, &str> = [("REVERTRISK_WORKERS", "3"), ("REVERTRISK_LABELS", "env.tsv")].into();
        config.service.apply_env(|k| env.get(k).map(|v| v.to_string())).unwrap();
        config.service.apply_overrides(&ServiceOverrides {
            workers: Some(4),
            ..Default::default()
        });
        assert_eq!(config.service.workers, 4);
        assert_eq!(config.service.labels, PathBuf::from("env.tsv"));
        assert_eq!(config.service.listen.port(), 9000);
    }

    #[test]
    fn bad_env_and_unknown_keys_fail() {
        let mut s = ServiceConfig::default();
        assert!(matches!(
            s.apply_env(|k| (k == "REVERTRISK_WORKERS").then(|| "many".to_owned())),
            Err(ConfigError::Env { .. })
        ));
        assert!(AppConfig::from_toml("[service]\nport = 1\n", Path::new("x")).is_err());
    }

    #[test]
    fn validation_rejects_missing_files_and_zero_workers() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ServiceConfig::default();
        assert!(matches!(s.validate(), Err(ConfigError::MissingFile { .. })));
        for (name, slot) in [("c", &mut s.content_model), ("f", &mut s.final_model), ("l", &mut s.labels)] {
            let p = dir.path().join(name);
            std::fs::write(&p, "").unwrap();
            *slot = p;
        }
        s.validate().unwrap();
        s.workers = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn pipeline_section_parses() {
        let c = AppConfig::from_toml("[pipeline]\nseed = 9\nnegative_ratio = 3\n[pipeline.content]\nepochs = 2\n", Path::new("x"))
            .unwrap();
        assert_eq!(c.pipeline.seed, 9);
        assert_eq!(c.pipeline.negative_ratio, Some(3));
        assert_eq!(c.pipeline.content.epochs, 2);
    }
}
