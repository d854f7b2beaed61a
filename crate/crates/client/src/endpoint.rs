//! Endpoint configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ClientError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    OpenaiChat,
    OllamaGenerate,
    /// Answers with the ground truth in declarative form.
    MockOracle,
    /// Always answers `constant`.
    MockConstant,
    /// Answers from a key -> response map.
    MockScripted,
}

impl Flavor {
    pub fn is_mock(self) -> bool {
        matches!(self, Flavor::MockOracle | Flavor::MockConstant | Flavor::MockScripted)
    }
}

fn default_timeout() -> f64 {
    60.0
}
fn default_retries() -> u32 {
    4
}
fn default_concurrency() -> usize {
    4
}
fn default_backoff() -> u64 {
    500
}
fn default_backoff_max() -> u64 {
    30_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub base_url: String,
    pub flavor: Flavor,
    #[serde(default)]
    pub model: String,
    /// Environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    /// Price per million input tokens.
    #[serde(default)]
    pub price_in: f64,
    #[serde(default)]
    pub price_out: f64,
    #[serde(default = "default_backoff")]
    pub backoff_base_ms: u64,
    #[serde(default = "default_backoff_max")]
    pub backoff_max_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<String>,
    /// For `mock_scripted`: JSON object of question key -> response; `*` is
    /// the fallback.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub responses: BTreeMap<String, String>,
}

impl EndpointSpec {
    pub fn mock(flavor: Flavor) -> Self {
        Self {
            name: format!("{flavor:?}").to_ascii_lowercase(),
            base_url: String::new(),
            flavor,
            model: String::new(),
            token_env: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            max_concurrency: default_concurrency(),
            price_in: 0.0,
            price_out: 0.0,
            backoff_base_ms: default_backoff(),
            backoff_max_ms: default_backoff_max(),
            constant: None,
            script: None,
            responses: BTreeMap::new(),
        }
    }

    pub fn constant(answer: &str) -> Self {
        Self { constant: Some(answer.to_string()), ..Self::mock(Flavor::MockConstant) }
    }

    pub fn http(flavor: Flavor, base_url: &str, model: &str) -> Self {
        Self { base_url: base_url.to_string(), model: model.to_string(), name: model.to_string(), ..Self::mock(flavor) }
    }

    /// YAML or JSON. A relative `script` path is resolved against the file.
    pub fn load(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path)?;
        let mut spec: EndpointSpec =
            serde_yaml::from_str(&text).map_err(|e| ClientError::Config(format!("{}: {e}", path.display())))?;
        if let Some(s) = &spec.script {
            let resolved = if s.is_relative() { path.parent().unwrap_or(Path::new(".")).join(s) } else { s.clone() };
            let body = std::fs::read_to_string(&resolved)?;
            let map: BTreeMap<String, String> = serde_json::from_str(&body)
                .map_err(|e| ClientError::Config(format!("{}: {e}", resolved.display())))?;
            spec.responses.extend(map);
            spec.script = Some(resolved);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        let bad = |m: &str| Err(ClientError::Config(m.to_string()));
        if !(self.timeout_secs > 0.0) {
            return bad("timeout_secs must be positive");
        }
        if self.max_concurrency == 0 {
            return bad("max_concurrency must be at least 1");
        }
        if self.price_in < 0.0 || self.price_out < 0.0 {
            return bad("prices cannot be negative");
        }
        match self.flavor {
            Flavor::OpenaiChat | Flavor::OllamaGenerate if self.base_url.is_empty() || self.model.is_empty() => {
                bad("http endpoints need base_url and model")
            }
            Flavor::MockConstant if self.constant.is_none() => bad("mock_constant needs `constant`"),
            Flavor::MockScripted if self.responses.is_empty() => bad("mock_scripted needs `script` or `responses`"),
            _ => Ok(()),
        }
    }

    /// Bearer token, if the endpoint names a variable.
    pub fn token(&self) -> Result<Option<String>, ClientError> {
        match &self.token_env {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(t) if !t.is_empty() => Ok(Some(t)),
                _ => Err(ClientError::MissingAuth { endpoint: self.name.clone(), var: var.clone() }),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yaml_defaults() {
        let s: EndpointSpec = serde_yaml::from_str("flavor: mock_constant\nconstant: \"3\"\n").unwrap();
        s.validate().unwrap();
        assert_eq!(s.max_concurrency, 4);
    }

    #[test]
    fn rejects_zero_concurrency_and_timeout() {
        let mut s = EndpointSpec::constant("3");
        s.max_concurrency = 0;
        assert!(s.validate().is_err());
        let mut s = EndpointSpec::constant("3");
        s.timeout_secs = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn missing_token_is_a_config_error() {
        let mut s = EndpointSpec::http(Flavor::OpenaiChat, "http://x", "m");
        s.token_env = Some("VISDIAG_TEST_TOKEN_THAT_IS_NOT_SET".into());
        assert!(matches!(s.token(), Err(ClientError::MissingAuth { .. })));
    }
}
