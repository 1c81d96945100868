use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;

use semstego_core::agents::{EndpointConfig, FaultPlan, FeedbackConfig};
use semstego_core::attacks_metrics::AttackKind;
use semstego_core::crypto::{parse_nonce, StegoKey, NONCE_BYTES};
use semstego_core::pipeline::DEFAULT_RESAMPLE_BUDGET;

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Mock,
    Live,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackDefaults {
    pub kind: AttackKind,
    pub count: u32,
    pub preserve_entities: bool,
}

impl Default for AttackDefaults {
    fn default() -> Self {
        AttackDefaults {
            kind: AttackKind::Swap,
            count: 1,
            preserve_entities: false,
        }
    }
}

/// Run configuration, read from one JSON file. Deliberately not `Debug`:
/// it may hold the key.
#[derive(Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Defaults to the bundled tree.
    pub tree_path: Option<PathBuf>,
    /// Defaults to the bundled corpus frequencies.
    pub distribution_path: Option<PathBuf>,
    pub mode: Mode,
    pub seed: u64,
    pub endpoint: Option<EndpointConfig>,
    pub key_hex: Option<String>,
    pub key_env: String,
    pub nonce_hex: Option<String>,
    pub nonce_env: String,
    pub feedback: FeedbackConfig,
    pub faults: FaultPlan,
    pub resample_budget: usize,
    pub verify_extraction: bool,
    pub attack: AttackDefaults,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tree_path: None,
            distribution_path: None,
            mode: Mode::Mock,
            seed: 0,
            endpoint: None,
            key_hex: None,
            key_env: "SEMSTEGO_KEY".into(),
            nonce_hex: None,
            nonce_env: "SEMSTEGO_NONCE".into(),
            feedback: FeedbackConfig::default(),
            faults: FaultPlan::None,
            resample_budget: DEFAULT_RESAMPLE_BUDGET,
            verify_extraction: true,
            attack: AttackDefaults::default(),
        }
    }
}

impl Config {
    /// Relative paths in the file are taken relative to the file.
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let mut cfg: Config =
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.tree_path, &mut cfg.distribution_path].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.mode == Mode::Live {
            let endpoint = self
                .endpoint
                .as_ref()
                .ok_or_else(|| CliError::agent("live mode needs an `endpoint` section in the config"))?;
            if endpoint.endpoint_url.trim().is_empty() {
                return Err(CliError::agent("live mode needs endpoint.endpoint_url"));
            }
            if endpoint.api_key_env.trim().is_empty() {
                return Err(CliError::agent("live mode needs endpoint.api_key_env"));
            }
        }
        Ok(())
    }

    fn key_hex(&self) -> Result<String, CliError> {
        if let Some(k) = &self.key_hex {
            return Ok(k.clone());
        }
        std::env::var(&self.key_env).map_err(|_| {
            CliError::input(format!(
                "no key: set `key_hex` in the config or the {} environment variable",
                self.key_env
            ))
        })
    }

    /// Nonce from the config or its environment variable, if either is set.
    pub fn nonce(&self) -> Result<Option<[u8; NONCE_BYTES]>, CliError> {
        let hex = match &self.nonce_hex {
            Some(n) => Some(n.clone()),
            None => std::env::var(&self.nonce_env).ok(),
        };
        hex.map(|n| parse_nonce(&n).map_err(|e| CliError::input(e.to_string())))
            .transpose()
    }

    pub fn key(&self, nonce: [u8; NONCE_BYTES]) -> Result<StegoKey, CliError> {
        let bytes = hex::decode(self.key_hex()?.trim()).map_err(|_| CliError::input("key is not valid hex"))?;
        StegoKey::new(bytes, nonce).map_err(|e| CliError::input(e.to_string()))
    }
}
