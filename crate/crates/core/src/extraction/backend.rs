use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::prompts::prompt_digest;
use crate::literature::{Clock, RetryPolicy, SystemClock};

#[derive(Debug, Clone, thiserror::Error)]
#[error("backend unavailable: {0}")]
pub struct BackendError(pub String);

/// Name and model tag recorded with every extraction output.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BackendIdentity {
    pub name: String,
    pub model: String,
}

impl std::fmt::Display for BackendIdentity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.name, self.model)
    }
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, prompt: &str, max_output: usize) -> Result<String, BackendError>;
    fn identity(&self) -> BackendIdentity;
}

impl<T: LlmBackend + ?Sized> LlmBackend for Arc<T> {
    fn complete(&self, prompt: &str, max_output: usize) -> Result<String, BackendError> {
        (**self).complete(prompt, max_output)
    }

    fn identity(&self) -> BackendIdentity {
        (**self).identity()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StubRule {
    /// Matched against the full prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regex: Option<String>,
    /// Full SHA-256 hex digest of the prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    pub respond: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StubScript {
    #[serde(default = "default_stub_name")]
    pub backend: String,
    pub model: String,
    #[serde(default)]
    pub rules: Vec<StubRule>,
    #[serde(default)]
    pub default: Option<String>,
}

fn default_stub_name() -> String {
    "stub".into()
}

/// Scripted backend: the first rule matching the prompt answers it.
/// Unmatched prompts get `default`, or the empty string.
pub struct StubBackend {
    script: StubScript,
    compiled: Vec<(Option<Regex>, StubRule)>,
    unavailable: bool,
}

impl StubBackend {
    pub fn new(script: StubScript) -> Result<Self, String> {
        let mut compiled = Vec::new();
        for (i, rule) in script.rules.iter().enumerate() {
            match (&rule.regex, &rule.digest) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(format!("rule {i}: give exactly one of regex or digest"))
                }
                _ => {}
            }
            let re = rule
                .regex
                .as_deref()
                .map(Regex::new)
                .transpose()
                .map_err(|e| format!("rule {i}: {e}"))?;
            compiled.push((re, rule.clone()));
        }
        Ok(Self {
            script,
            compiled,
            unavailable: false,
        })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let raw = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let script: StubScript =
            serde_json::from_str(&raw).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::new(script).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Convenience for tests: `(regex, response)` rules.
    pub fn from_rules(model: &str, rules: &[(&str, &str)]) -> Self {
        Self::new(StubScript {
            backend: default_stub_name(),
            model: model.to_string(),
            rules: rules
                .iter()
                .map(|(re, resp)| StubRule {
                    regex: Some(re.to_string()),
                    digest: None,
                    respond: resp.to_string(),
                })
                .collect(),
            default: None,
        })
        .expect("valid stub rules")
    }

    /// A backend whose every call fails.
    pub fn unavailable(model: &str) -> Self {
        let mut stub = Self::from_rules(model, &[]);
        stub.unavailable = true;
        stub
    }

    pub fn script(&self) -> &StubScript {
        &self.script
    }
}

impl LlmBackend for StubBackend {
    fn complete(&self, prompt: &str, _max_output: usize) -> Result<String, BackendError> {
        if self.unavailable {
            return Err(BackendError("stub configured as unavailable".into()));
        }
        let digest = prompt_digest(prompt);
        for (re, rule) in &self.compiled {
            let hit = match re {
                Some(re) => re.is_match(prompt),
                None => rule.digest.as_deref() == Some(digest.as_str()),
            };
            if hit {
                return Ok(rule.respond.clone());
            }
        }
        Ok(self.script.default.clone().unwrap_or_default())
    }

    fn identity(&self) -> BackendIdentity {
        BackendIdentity {
            name: self.script.backend.clone(),
            model: self.script.model.clone(),
        }
    }
}

/// OpenAI-compatible chat-completions client.
pub struct HttpBackend {
    endpoint: String,
    model: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
    clock: Arc<dyn Clock>,
}

impl HttpBackend {
    pub fn new(
        endpoint: &str,
        model: &str,
        token: Option<String>,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model: model.to_string(),
            token,
            client,
            retry: RetryPolicy::default(),
            clock: Arc::new(SystemClock::default()),
        })
    }

    fn attempt(&self, prompt: &str, max_output: usize) -> Result<String, (bool, String)> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": max_output,
            "temperature": 0,
        });
        let mut req = self
            .client
            .post(format!("{}/chat/completions", self.endpoint))
            .json(&body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| (true, e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let retryable = status.as_u16() == 429 || status.is_server_error();
            return Err((retryable, format!("status {status}")));
        }
        let value: serde_json::Value = resp.json().map_err(|e| (false, e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (false, "response has no choices[0].message.content".into()))
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, prompt: &str, max_output: usize) -> Result<String, BackendError> {
        let mut backoff = self.retry.initial_backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(prompt, max_output) {
                Ok(text) => return Ok(text),
                Err((true, msg)) if attempt < self.retry.retries => {
                    warn!(attempt, error = %msg, "backend call failed, retrying");
                    self.clock.sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
                Err((_, msg)) => return Err(BackendError(msg)),
            }
        }
    }

    fn identity(&self) -> BackendIdentity {
        BackendIdentity {
            name: "http".into(),
            model: self.model.clone(),
        }
    }
}

/// A named backend entry in configuration files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendConfig {
    Stub {
        script: PathBuf,
    },
    Http {
        endpoint: String,
        model: String,
        /// Environment variable holding the bearer token.
        #[serde(default)]
        token_env: Option<String>,
        #[serde(default = "default_timeout_secs")]
        timeout_secs: u64,
    },
}

fn default_timeout_secs() -> u64 {
    120
}

impl BackendConfig {
    /// Relative script paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<Arc<dyn LlmBackend>, BackendError> {
        match self {
            BackendConfig::Stub { script } => {
                let path = if script.is_absolute() {
                    script.clone()
                } else {
                    base.join(script)
                };
                Ok(Arc::new(StubBackend::load(&path).map_err(BackendError)?))
            }
            BackendConfig::Http {
                endpoint,
                model,
                token_env,
                timeout_secs,
            } => {
                let token = match token_env {
                    Some(var) => Some(std::env::var(var).map_err(|_| {
                        BackendError(format!("environment variable {var} is not set"))
                    })?),
                    None => None,
                };
                Ok(Arc::new(HttpBackend::new(
                    endpoint,
                    model,
                    token,
                    Duration::from_secs(*timeout_secs),
                )?))
            }
        }
    }
}

/// One line of the extraction call log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub prompt_digest: String,
    pub template: String,
    pub backend: BackendIdentity,
    pub duration_ms: u64,
    pub status: String,
}

/// Append-only JSONL log of backend calls.
pub struct CallLog {
    file: Mutex<fs::File>,
}

impl CallLog {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        Ok(Self {
            file: Mutex::new(file),
        })
    }

    pub fn append(&self, record: &CallRecord) {
        let line = match serde_json::to_string(record) {
            Ok(l) => l,
            Err(e) => {
                warn!(error = %e, "could not serialize call record");
                return;
            }
        };
        let mut file = self.file.lock().unwrap();
        if let Err(e) = writeln!(file, "{line}") {
            warn!(error = %e, "could not append to call log");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stub_matches_regex_then_digest_then_default() {
        let digest = prompt_digest("exact prompt");
        let stub = StubBackend::new(StubScript {
            backend: "stub".into(),
            model: "m".into(),
            rules: vec![
                StubRule {
                    regex: Some("(?i)cephalosporin".into()),
                    digest: None,
                    respond: "A".into(),
                },
                StubRule {
                    regex: None,
                    digest: Some(digest),
                    respond: "B".into(),
                },
            ],
            default: Some("C".into()),
        })
        .unwrap();
        assert_eq!(stub.complete("about CEPHALOSPORIN", 10).unwrap(), "A");
        assert_eq!(stub.complete("exact prompt", 10).unwrap(), "B");
        assert_eq!(stub.complete("other", 10).unwrap(), "C");
        assert_eq!(stub.identity().to_string(), "stub:m");
    }

    #[test]
    fn stub_rule_needs_exactly_one_matcher() {
        let script = StubScript {
            backend: "stub".into(),
            model: "m".into(),
            rules: vec![StubRule {
                regex: None,
                digest: None,
                respond: "x".into(),
            }],
            default: None,
        };
        assert!(StubBackend::new(script).is_err());
    }

    #[test]
    fn backend_config_parses_from_toml() {
        let cfg: BackendConfig = toml::from_str("kind = \"stub\"\nscript = \"s.json\"").unwrap();
        assert_eq!(
            cfg,
            BackendConfig::Stub {
                script: "s.json".into()
            }
        );
        let cfg: BackendConfig =
            toml::from_str("kind = \"http\"\nendpoint = \"http://h/v1\"\nmodel = \"m\"").unwrap();
        assert!(matches!(cfg, BackendConfig::Http { timeout_secs: 120, .. }));
    }

    #[test]
    fn call_log_appends_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("calls.jsonl");
        let log = CallLog::open(&path).unwrap();
        let rec = CallRecord {
            prompt_digest: "d".into(),
            template: "t.v1".into(),
            backend: BackendIdentity {
                name: "stub".into(),
                model: "m".into(),
            },
            duration_ms: 0,
            status: "ok".into(),
        };
        log.append(&rec);
        log.append(&rec);
        let text = fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().count(), 2);
    }
}
