//! Service configuration: one TOML file, then environment overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const ENV_PORT: &str = "INFMAX_PORT";
pub const ENV_DATA_DIR: &str = "INFMAX_DATA_DIR";
pub const ENV_WORKERS: &str = "INFMAX_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid value {value:?} for {var}")]
    Env { var: &'static str, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub data_dir: PathBuf,
    /// Simulation worker threads.
    pub workers: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            data_dir: PathBuf::from("infmax-data"),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl ServiceConfig {
    /// Reads `path` when given, then applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let base = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        base.with_overrides(|var| std::env::var(var).ok())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn with_overrides(
        mut self,
        lookup: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, ConfigError> {
        if let Some(v) = lookup(ENV_PORT) {
            self.port = v.parse().map_err(|_| ConfigError::Env {
                var: ENV_PORT,
                value: v,
            })?;
        }
        if let Some(v) = lookup(ENV_DATA_DIR) {
            self.data_dir = PathBuf::from(v);
        }
        if let Some(v) = lookup(ENV_WORKERS) {
            self.workers = match v.parse() {
                Ok(n) if n > 0 => n,
                _ => {
                    return Err(ConfigError::Env {
                        var: ENV_WORKERS,
                        value: v,
                    })
                }
            };
        }
        Ok(self)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("infmax.toml");
        std::fs::write(&path, "port = 9000\ndata_dir = \"/srv/runs\"\n").unwrap();
        let cfg = ServiceConfig::from_file(&path).unwrap();
        assert_eq!(cfg.port, 9000);
        assert_eq!(cfg.host, "127.0.0.1");
        let cfg = cfg
            .with_overrides(|v| match v {
                ENV_PORT => Some("9100".into()),
                ENV_WORKERS => Some("3".into()),
                _ => None,
            })
            .unwrap();
        assert_eq!((cfg.port, cfg.workers), (9100, 3));
        assert_eq!(cfg.data_dir, PathBuf::from("/srv/runs"));
    }

    #[test]
    fn rejects_bad_values() {
        let zero =
            ServiceConfig::default().with_overrides(|v| (v == ENV_WORKERS).then(|| "0".into()));
        assert!(zero.is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "prot = 1\n").unwrap();
        assert!(matches!(
            ServiceConfig::from_file(&path),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ServiceConfig::default();
        assert_eq!(
            toml::from_str::<ServiceConfig>(&cfg.to_toml()).unwrap(),
            cfg
        );
    }
}
