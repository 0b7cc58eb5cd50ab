//! Service configuration: a TOML file plus `CLUECART_*` environment
//! overrides.
//!
//! ```toml
//! data_dir = "cluecart-data"
//! listen_addr = "127.0.0.1:8080"
//! classifier_mode = "llm"
//! llm_endpoint = "https://api.openai.com/v1/chat/completions"
//! llm_model = "gpt-4o"
//! max_inflight_llm = 4
//! ```
//!
//! The API key is best supplied as `CLUECART_LLM_API_KEY` rather than in the
//! file.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::classify::{
    Classifier, HttpChatBackend, LlmClassifier, MockClassifier, DEFAULT_MAX_INFLIGHT,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid value for {key}: `{value}`")]
    BadValue { key: &'static str, value: String },
    #[error("llm mode requires llm_endpoint and llm_api_key")]
    MissingLlmSettings,
    #[error("max_inflight_llm must be positive")]
    ZeroInflight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierMode {
    #[default]
    Mock,
    Llm,
}

impl FromStr for ClassifierMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "mock" => Ok(ClassifierMode::Mock),
            "llm" => Ok(ClassifierMode::Llm),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub listen_addr: String,
    pub classifier_mode: ClassifierMode,
    pub llm_endpoint: Option<String>,
    pub llm_api_key: Option<String>,
    pub llm_model: Option<String>,
    pub max_inflight_llm: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: PathBuf::from("cluecart-data"),
            listen_addr: "127.0.0.1:8080".into(),
            classifier_mode: ClassifierMode::Mock,
            llm_endpoint: None,
            llm_api_key: None,
            llm_model: None,
            max_inflight_llm: DEFAULT_MAX_INFLIGHT,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Applies `CLUECART_*` overrides read through `var`.
    pub fn with_env(mut self, var: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        if let Some(v) = var("CLUECART_DATA_DIR") {
            self.data_dir = v.into();
        }
        if let Some(v) = var("CLUECART_LISTEN_ADDR") {
            self.listen_addr = v;
        }
        if let Some(v) = var("CLUECART_CLASSIFIER_MODE") {
            self.classifier_mode = v.parse().map_err(|_| ConfigError::BadValue {
                key: "CLUECART_CLASSIFIER_MODE",
                value: v.clone(),
            })?;
        }
        if let Some(v) = var("CLUECART_LLM_ENDPOINT") {
            self.llm_endpoint = Some(v);
        }
        if let Some(v) = var("CLUECART_LLM_API_KEY") {
            self.llm_api_key = Some(v);
        }
        if let Some(v) = var("CLUECART_LLM_MODEL") {
            self.llm_model = Some(v);
        }
        if let Some(v) = var("CLUECART_MAX_INFLIGHT_LLM") {
            self.max_inflight_llm = v.parse().map_err(|_| ConfigError::BadValue {
                key: "CLUECART_MAX_INFLIGHT_LLM",
                value: v.clone(),
            })?;
        }
        Ok(self)
    }

    /// Optional file, then the process environment. Not validated, so a
    /// caller can still switch modes; [`classifier`](Self::classifier)
    /// validates.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let base = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        base.with_env(|k| std::env::var(k).ok().filter(|v| !v.is_empty()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_inflight_llm == 0 {
            return Err(ConfigError::ZeroInflight);
        }
        if self.classifier_mode == ClassifierMode::Llm
            && (self.llm_endpoint.is_none() || self.llm_api_key.is_none())
        {
            return Err(ConfigError::MissingLlmSettings);
        }
        Ok(())
    }

    pub fn classifier(&self) -> Result<Arc<dyn Classifier>, ConfigError> {
        self.validate()?;
        Ok(match self.classifier_mode {
            ClassifierMode::Mock => Arc::new(MockClassifier),
            ClassifierMode::Llm => {
                let mut backend = HttpChatBackend::new(
                    self.llm_endpoint.clone().unwrap_or_default(),
                    self.llm_api_key.clone().unwrap_or_default(),
                );
                if let Some(m) = &self.llm_model {
                    backend = backend.with_model(m.clone());
                }
                Arc::new(LlmClassifier::new(
                    Arc::new(backend),
                    self.data_dir.clone(),
                    self.max_inflight_llm,
                ))
            }
        })
    }
}
