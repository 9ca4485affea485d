use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::digest::sha256_hex;
use crate::extraction::BackendConfig;
use crate::literature::EUtilsConfig;
use crate::lotus::LotusSourceConfig;

/// Which relation sources feed the chemical stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationMode {
    #[default]
    Full,
    /// LOTUS pairs only; no relation extraction.
    LotusOnly,
    /// Extracted pairs only; LOTUS is not consulted.
    ReOnly,
}

impl std::str::FromStr for AblationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "full" => Ok(Self::Full),
            "lotus-only" | "lotusonly" => Ok(Self::LotusOnly),
            "re-only" | "reonly" => Ok(Self::ReOnly),
            other => Err(format!("unknown mode {other:?} (full, lotus-only, re-only)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomyConfig {
    pub backbone: PathBuf,
    #[serde(default)]
    pub genus_cap: Option<usize>,
    /// Abbreviated genus → full genus, e.g. `"S." = "Sarocladium"`.
    #[serde(default)]
    pub abbreviations: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LiteratureSourceConfig {
    /// Offline replay from a canned directory.
    Canned { dir: PathBuf },
    /// NCBI EUtils over HTTP.
    Live {
        #[serde(default)]
        api_key_env: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiteratureConfig {
    pub source: LiteratureSourceConfig,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Also fetch and mine full text for chemical literature.
    #[serde(default)]
    pub chemical_full_text: bool,
    #[serde(default = "default_rate")]
    pub rate_per_second: u32,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default)]
    pub eutils: EUtilsConfig,
}

fn default_rate() -> u32 {
    3
}

fn default_retries() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltersConfig {
    #[serde(default)]
    pub activity_model: Option<PathBuf>,
    #[serde(default = "default_gate_threshold")]
    pub activity_threshold: f64,
    #[serde(default)]
    pub npr_model: Option<PathBuf>,
    #[serde(default = "default_gate_threshold")]
    pub npr_threshold: f64,
}

impl Default for FiltersConfig {
    fn default() -> Self {
        Self {
            activity_model: None,
            activity_threshold: default_gate_threshold(),
            npr_model: None,
            npr_threshold: default_gate_threshold(),
        }
    }
}

fn default_gate_threshold() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendsConfig {
    /// Relation extraction suite.
    pub relation: BackendConfig,
    /// Evidence extraction and level classification suite.
    pub evidence: BackendConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: AblationMode,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
    #[serde(default)]
    pub chunk_overlap: usize,
    #[serde(default)]
    pub chemical_stoplist: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: AblationMode::Full,
            parallelism: default_parallelism(),
            chunk_size: default_chunk_size(),
            chunk_overlap: 0,
            chemical_stoplist: Vec::new(),
        }
    }
}

fn default_parallelism() -> usize {
    1
}

fn default_chunk_size() -> usize {
    1500
}

/// Everything a run needs. Paths in a loaded config are absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub taxonomy: TaxonomyConfig,
    pub literature: LiteratureConfig,
    #[serde(default)]
    pub filters: FiltersConfig,
    pub backends: BackendsConfig,
    #[serde(default = "default_lotus")]
    pub lotus: LotusSourceConfig,
    #[serde(default)]
    pub run: RunConfig,
}

fn default_lotus() -> LotusSourceConfig {
    LotusSourceConfig::None
}

fn resolve(base: &Path, path: &mut PathBuf) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

impl PipelineConfig {
    /// Parses TOML; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut config: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config {
            key: e
                .span()
                .map(|s| text[s].lines().next().unwrap_or_default().to_string())
                .unwrap_or_default(),
            reason: e.message().to_string(),
        })?;
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config {
            key: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let base = if base.as_os_str().is_empty() {
            Path::new(".")
        } else {
            base
        };
        let base = base.canonicalize().unwrap_or_else(|_| base.to_path_buf());
        Self::from_toml(&text, &base)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.taxonomy.backbone);
        if let LiteratureSourceConfig::Canned { dir } = &mut self.literature.source {
            resolve(base, dir);
        }
        if let Some(p) = &mut self.literature.cache_dir {
            resolve(base, p);
        }
        for p in [&mut self.filters.activity_model, &mut self.filters.npr_model]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
        for b in [&mut self.backends.relation, &mut self.backends.evidence] {
            if let BackendConfig::Stub { script } = b {
                resolve(base, script);
            }
        }
        if let LotusSourceConfig::Dump { path } = &mut self.lotus {
            resolve(base, path);
        }
    }

    /// Checks referenced paths and numeric bounds.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let must_exist = |key: &str, p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(PipelineError::Config {
                    key: key.to_string(),
                    reason: format!("{} does not exist", p.display()),
                })
            }
        };
        must_exist("taxonomy.backbone", &self.taxonomy.backbone)?;
        if let LiteratureSourceConfig::Canned { dir } = &self.literature.source {
            must_exist("literature.source.dir", dir)?;
        }
        if let Some(p) = &self.filters.activity_model {
            must_exist("filters.activity_model", p)?;
        }
        if let Some(p) = &self.filters.npr_model {
            must_exist("filters.npr_model", p)?;
        }
        for (key, b) in [
            ("backends.relation.script", &self.backends.relation),
            ("backends.evidence.script", &self.backends.evidence),
        ] {
            if let BackendConfig::Stub { script } = b {
                must_exist(key, script)?;
            }
        }
        if let LotusSourceConfig::Dump { path } = &self.lotus {
            must_exist("lotus.path", path)?;
        }
        let bad = |key: &str, reason: &str| {
            Err(PipelineError::Config {
                key: key.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.run.parallelism == 0 {
            return bad("run.parallelism", "must be at least 1");
        }
        if self.run.chunk_size == 0 {
            return bad("run.chunk_size", "must be at least 1");
        }
        if self.literature.rate_per_second == 0 {
            return bad("literature.rate_per_second", "must be at least 1");
        }
        for (key, t) in [
            ("filters.activity_threshold", self.filters.activity_threshold),
            ("filters.npr_threshold", self.filters.npr_threshold),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return bad(key, "must lie in [0, 1]");
            }
        }
        Ok(())
    }

    /// Digest of the canonical JSON form; resume refuses a different one.
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[taxonomy]
backbone = "backbone.tsv"

[literature.source]
kind = "canned"
dir = "eutils"

[backends.relation]
kind = "stub"
script = "stub.json"

[backends.evidence]
kind = "stub"
script = "stub.json"
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let c = PipelineConfig::from_toml(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(c.taxonomy.backbone, PathBuf::from("/base/backbone.tsv"));
        assert_eq!(c.run.mode, AblationMode::Full);
        assert_eq!(c.run.parallelism, 1);
        assert_eq!(c.filters.activity_threshold, 0.3);
        assert_eq!(c.lotus, LotusSourceConfig::None);
        assert!(matches!(c.validate(), Err(PipelineError::Config { key, .. }) if key == "taxonomy.backbone"));
    }

    #[test]
    fn digest_tracks_content() {
        let a = PipelineConfig::from_toml(MINIMAL, Path::new("/base")).unwrap();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.run.mode = AblationMode::LotusOnly;
        assert_ne!(a.digest(), b.digest());
        let round = PipelineConfig::from_toml(&a.to_toml(), Path::new("/elsewhere")).unwrap();
        assert_eq!(round.digest(), a.digest());
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = format!("{MINIMAL}\n[run]\nparalelism = 2\n");
        match PipelineConfig::from_toml(&text, Path::new("/")) {
            Err(PipelineError::Config { reason, .. }) => assert!(reason.contains("paralelism")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn mode_names() {
        assert_eq!("lotus-only".parse::<AblationMode>().unwrap(), AblationMode::LotusOnly);
        assert_eq!("ReOnly".parse::<AblationMode>().unwrap(), AblationMode::ReOnly);
        assert!("partial".parse::<AblationMode>().is_err());
    }
}
