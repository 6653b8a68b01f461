//! Run configuration: scenario and corpus references, backend selection,
//! seeds, and experiment mode.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::assets;
use crate::grid::{GridFile, Phase, Scenario};
use crate::prompt::{Corpus, ProgramLibrary};

use super::RunnerError;

/// Which instruction set is evaluated on which partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentMode {
    /// Instructions run on the partitions they belong to: every
    /// partition-agnostic instruction of the environment, plus those
    /// scoped to exactly this partition.
    #[default]
    Associated,
    /// Instructions scoped to the coarsest partition (fewest regions)
    /// run on every partition of their environment.
    SimplestOnAll,
    /// Instructions scoped to the finest partition (most regions) run on
    /// every partition of their environment.
    ComplexOnAll,
}

/// Backend selection plus its knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendSpec {
    /// Echo the first reference of each pair (known-perfect control).
    Echo,
    /// Instruction-blind shortest-path control.
    Planner,
    /// Seeded random walk (noise-floor control).
    RandomWalk {
        #[serde(default = "default_max_steps")]
        max_steps: usize,
    },
    /// Serve cached responses only; any miss fails the run.
    Replay,
    /// Live chat-completion endpoint.
    Http {
        endpoint: String,
        model: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        auth_env: Option<String>,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default = "default_max_retries")]
        max_retries: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_interval_ms: Option<u64>,
        #[serde(default)]
        send_seed: bool,
    },
}

fn default_max_steps() -> usize {
    16
}

fn default_timeout_ms() -> u64 {
    60_000
}

fn default_max_retries() -> u32 {
    3
}

impl BackendSpec {
    /// Offline backends may fan out; live ones default to serial.
    pub fn is_offline(&self) -> bool {
        !matches!(self, BackendSpec::Http { .. })
    }

    /// The model label recorded with each query.
    pub fn default_model(&self) -> String {
        match self {
            BackendSpec::Http { model, .. } => model.clone(),
            _ => "offline".to_string(),
        }
    }

    pub fn http_config(&self) -> Option<crate::llm::HttpConfig> {
        match self {
            BackendSpec::Http {
                endpoint,
                model,
                auth_env,
                timeout_ms,
                max_retries,
                min_interval_ms,
                send_seed,
            } => Some(crate::llm::HttpConfig {
                endpoint: endpoint.clone(),
                model: model.clone(),
                auth_env: auth_env.clone(),
                timeout: Duration::from_millis(*timeout_ms),
                max_retries: *max_retries,
                min_interval: min_interval_ms.map(Duration::from_millis),
                send_seed: *send_seed,
            }),
            _ => None,
        }
    }
}

/// One evaluation run, as loaded from `evaluate --config <run.json>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Grid files to evaluate: `builtin:<name>` or a file path.
    pub scenarios: Vec<String>,
    /// Instruction corpus: `builtin` or a file path.
    #[serde(default = "default_corpus")]
    pub corpus: String,
    /// Extra named directive programs (name -> program JSON path),
    /// overlaid on the builtin library.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub programs: BTreeMap<String, PathBuf>,
    /// K: completions per (scenario, instruction) pair.
    pub queries_per_pair: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub temperature: f64,
    /// Model label stamped on requests; defaults per backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub backend: BackendSpec,
    pub output_dir: PathBuf,
    /// Keep only scenarios in these phases; absent = all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<Phase>>,
    #[serde(default)]
    pub mode: ExperimentMode,
    /// Worker threads; absent = parallel for offline backends, serial
    /// for live ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    /// Evaluate only these instruction ids; absent = all applicable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_instructions: Option<Vec<String>>,
}

fn default_corpus() -> String {
    "builtin".to_string()
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, RunnerError> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|err| RunnerError::Config(format!("invalid run config: {err}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, RunnerError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        if self.scenarios.is_empty() {
            return Err(RunnerError::Config("scenarios must be nonempty".into()));
        }
        if self.queries_per_pair == 0 {
            return Err(RunnerError::Config("queries_per_pair must be at least 1".into()));
        }
        if self.temperature < 0.0 {
            return Err(RunnerError::Config("temperature must be >= 0".into()));
        }
        Ok(())
    }

    /// Resolve a scenario reference to grid-file text.
    pub fn load_scenario_text(reference: &str) -> Result<String, RunnerError> {
        if let Some(name) = reference.strip_prefix("builtin:") {
            return assets::builtin_scenario(name)
                .map(str::to_string)
                .ok_or_else(|| RunnerError::UnknownBuiltin(name.to_string()));
        }
        Ok(std::fs::read_to_string(reference)?)
    }

    /// Parse and filter the configured scenarios.
    pub fn load_scenarios(&self) -> Result<Vec<Scenario>, RunnerError> {
        let mut scenarios = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for reference in &self.scenarios {
            let text = Self::load_scenario_text(reference)?;
            let file = GridFile::parse(&text)?;
            let scenario = Scenario::from_grid_file(file)?;
            if let Some(phases) = &self.phases {
                if !phases.contains(&scenario.phase) {
                    continue;
                }
            }
            let key =
                (scenario.environment.clone(), scenario.partition_id.clone(), scenario.phase);
            if !seen.insert(key.clone()) {
                return Err(RunnerError::Config(format!(
                    "duplicate scenario for environment {}, partition {}, phase {}",
                    key.0, key.1, key.2
                )));
            }
            scenarios.push(scenario);
        }
        if scenarios.is_empty() {
            return Err(RunnerError::Config(
                "no scenarios remain after phase filtering".into(),
            ));
        }
        Ok(scenarios)
    }

    pub fn load_corpus(&self) -> Result<Corpus, RunnerError> {
        let text = if self.corpus == "builtin" {
            assets::INSTRUCTION_CORPUS.to_string()
        } else {
            std::fs::read_to_string(&self.corpus)?
        };
        Ok(Corpus::from_json(&text)?)
    }

    /// The builtin program library overlaid with configured extras.
    pub fn load_program_library(&self) -> Result<ProgramLibrary, RunnerError> {
        let mut library = assets::builtin_program_library()
            .map_err(|err| RunnerError::Config(format!("builtin programs: {err}")))?;
        for (name, path) in &self.programs {
            let text = std::fs::read_to_string(path)?;
            let program = assets::parse_program(&text).map_err(|err| {
                RunnerError::Config(format!("program '{name}' ({}): {err}", path.display()))
            })?;
            library.insert(name.clone(), program);
        }
        Ok(library)
    }

    /// Canonical digest of the config, recorded in run provenance.
    pub fn sha256(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
