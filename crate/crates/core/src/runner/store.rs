//! On-disk run layout: `scores.csv`, `summary.json`, `config.lock.json`,
//! and the `run_meta.json` sidecar.
//!
//! Everything except the sidecar is byte-deterministic for a given config
//! and response set: records are sorted on a fixed key, floats are written
//! with Rust's shortest round-trip formatting, and no timestamps appear.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::grid::Phase;
use crate::region::RegionTrace;

use super::{RunConfig, RunnerError};

/// Pinned `scores.csv` column order. Changing this breaks downstream
/// notebooks; add columns only at the end.
pub const SCORE_COLUMNS: [&str; 11] = [
    "environment",
    "partition",
    "phase",
    "instruction_id",
    "author",
    "k",
    "backend",
    "model",
    "parsed_sequence",
    "best_reference_index",
    "score",
];

/// One completion, parsed and scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub environment: String,
    pub partition: String,
    pub phase: Phase,
    pub instruction_id: String,
    pub author: String,
    pub k: u32,
    pub backend: String,
    pub model: String,
    /// Empty when the response had no parseable final line.
    pub parsed_sequence: Option<RegionTrace>,
    /// Index into the pair's reference list that produced `score`.
    pub best_reference_index: Option<usize>,
    pub score: f64,
}

impl ScoreRecord {
    /// The stable sort key: environment, partition, phase, instruction, k.
    pub fn sort_key(&self) -> (&str, &str, u8, &str, u32) {
        (
            &self.environment,
            &self.partition,
            phase_rank(self.phase),
            &self.instruction_id,
            self.k,
        )
    }

    /// Grouping key for per-pair aggregation.
    pub fn pair_key(&self) -> (&str, &str, u8, &str) {
        (
            &self.environment,
            &self.partition,
            phase_rank(self.phase),
            &self.instruction_id,
        )
    }
}

fn phase_rank(phase: Phase) -> u8 {
    match phase {
        Phase::Whole => 0,
        Phase::BeforeBlock => 1,
        Phase::AfterBlock => 2,
    }
}

pub fn sort_records(records: &mut [ScoreRecord]) {
    records.sort_by(|a, b| {
        a.sort_key()
            .cmp(&b.sort_key())
            .then_with(|| a.backend.cmp(&b.backend))
            .then_with(|| a.model.cmp(&b.model))
    });
}

/// Per-(scenario, instruction) aggregate: M = mean over the K runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub environment: String,
    pub partition: String,
    pub phase: Phase,
    pub instruction_id: String,
    pub author: String,
    pub queries: u32,
    pub mean: f64,
    pub std: f64,
}

/// Distribution of per-instruction means within one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRow {
    pub environment: String,
    pub partition: String,
    pub phase: Phase,
    pub instructions: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub iqr: f64,
}

/// Deterministic identification of what produced a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub backend: String,
    pub model: String,
    pub queries_per_pair: u32,
    pub base_seed: u64,
    pub record_count: usize,
}

/// `summary.json`: aggregates plus provenance, no raw records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub provenance: Provenance,
    pub pairs: Vec<PairRow>,
    pub partitions: Vec<PartitionRow>,
}

/// Full in-memory result of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<ScoreRecord>,
    pub summary: RunSummary,
}

/// Wall-clock sidecar; the only file that differs between identical runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub created_at: String,
    pub finished_at: String,
}

/// `config.lock.json`: the exact config a run directory was produced from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigLock {
    pub config: RunConfig,
    pub config_sha256: String,
}

pub const SCORES_FILE: &str = "scores.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_LOCK_FILE: &str = "config.lock.json";
pub const META_FILE: &str = "run_meta.json";
pub const RESPONSES_DIR: &str = "responses";

pub fn responses_dir(run_dir: &Path) -> PathBuf {
    run_dir.join(RESPONSES_DIR)
}

fn field(record: &ScoreRecord, column: &str) -> String {
    match column {
        "environment" => record.environment.clone(),
        "partition" => record.partition.clone(),
        "phase" => record.phase.to_string(),
        "instruction_id" => record.instruction_id.clone(),
        "author" => record.author.clone(),
        "k" => record.k.to_string(),
        "backend" => record.backend.clone(),
        "model" => record.model.clone(),
        "parsed_sequence" => record
            .parsed_sequence
            .as_ref()
            .map(RegionTrace::to_string)
            .unwrap_or_default(),
        "best_reference_index" => record
            .best_reference_index
            .map(|index| index.to_string())
            .unwrap_or_default(),
        "score" => format_float(record.score),
        other => unreachable!("unknown score column {other}"),
    }
}

/// Shortest string that parses back to exactly this value.
pub fn format_float(value: f64) -> String {
    format!("{value}")
}

/// Render records (already sorted) as the `scores.csv` byte stream.
pub fn render_scores_csv(records: &[ScoreRecord]) -> Result<Vec<u8>, RunnerError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(SCORE_COLUMNS)?;
    for record in records {
        writer.write_record(SCORE_COLUMNS.iter().map(|column| field(record, column)))?;
    }
    writer
        .into_inner()
        .map_err(|err| RunnerError::Config(format!("flushing scores.csv: {err}")))
}

pub fn write_scores_csv(run_dir: &Path, records: &[ScoreRecord]) -> Result<(), RunnerError> {
    let bytes = render_scores_csv(records)?;
    write_atomic(&run_dir.join(SCORES_FILE), &bytes)
}

pub fn read_scores_csv(path: &Path) -> Result<Vec<ScoreRecord>, RunnerError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let expected: Vec<&str> = SCORE_COLUMNS.to_vec();
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(RunnerError::Config(format!(
            "unexpected scores.csv columns: {found:?}"
        )));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let get = |column: &str| -> &str {
            let index = SCORE_COLUMNS.iter().position(|c| *c == column).unwrap();
            row.get(index).unwrap_or("")
        };
        let parsed_sequence = if get("parsed_sequence").is_empty() {
            None
        } else {
            Some(parse_trace_field(get("parsed_sequence"))?)
        };
        let best_reference_index = if get("best_reference_index").is_empty() {
            None
        } else {
            Some(get("best_reference_index").parse::<usize>().map_err(|err| {
                RunnerError::Config(format!("bad best_reference_index: {err}"))
            })?)
        };
        records.push(ScoreRecord {
            environment: get("environment").to_string(),
            partition: get("partition").to_string(),
            phase: get("phase").parse().map_err(|err| {
                RunnerError::Config(format!("bad phase in scores.csv: {err}"))
            })?,
            instruction_id: get("instruction_id").to_string(),
            author: get("author").to_string(),
            k: get("k")
                .parse()
                .map_err(|err| RunnerError::Config(format!("bad k: {err}")))?,
            backend: get("backend").to_string(),
            model: get("model").to_string(),
            parsed_sequence,
            best_reference_index,
            score: get("score")
                .parse()
                .map_err(|err| RunnerError::Config(format!("bad score: {err}")))?,
        });
    }
    Ok(records)
}

fn parse_trace_field(text: &str) -> Result<RegionTrace, RunnerError> {
    let ids: Result<Vec<u32>, _> = text.split("->").map(|part| part.trim().parse()).collect();
    let ids = ids.map_err(|err| RunnerError::Config(format!("bad parsed_sequence: {err}")))?;
    RegionTrace::from_ids(ids)
        .map_err(|err| RunnerError::Config(format!("bad parsed_sequence: {err}")))
}

pub fn write_summary(run_dir: &Path, summary: &RunSummary) -> Result<(), RunnerError> {
    let mut bytes = serde_json::to_vec_pretty(summary)?;
    bytes.push(b'\n');
    write_atomic(&run_dir.join(SUMMARY_FILE), &bytes)
}

pub fn read_summary(run_dir: &Path) -> Result<RunSummary, RunnerError> {
    let text = std::fs::read_to_string(run_dir.join(SUMMARY_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_config_lock(run_dir: &Path, config: &RunConfig) -> Result<(), RunnerError> {
    let lock = ConfigLock {
        config: config.clone(),
        config_sha256: config.sha256(),
    };
    let mut bytes = serde_json::to_vec_pretty(&lock)?;
    bytes.push(b'\n');
    write_atomic(&run_dir.join(CONFIG_LOCK_FILE), &bytes)
}

pub fn read_config_lock(run_dir: &Path) -> Result<ConfigLock, RunnerError> {
    let text = std::fs::read_to_string(run_dir.join(CONFIG_LOCK_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_meta(run_dir: &Path, meta: &RunMeta) -> Result<(), RunnerError> {
    let mut bytes = serde_json::to_vec_pretty(meta)?;
    bytes.push(b'\n');
    write_atomic(&run_dir.join(META_FILE), &bytes)
}

/// Write via a dot-temp file and rename so readers never see a torn file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunnerError> {
    let directory = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(directory)?;
    let file_name = path
        .file_name()
        .and_then(|name| name.to_str())
        .unwrap_or("out");
    let temp = directory.join(format!(".{file_name}.tmp"));
    {
        let mut file = std::fs::File::create(&temp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    std::fs::rename(&temp, path)?;
    Ok(())
}
