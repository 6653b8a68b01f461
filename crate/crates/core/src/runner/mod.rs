//! End-to-end evaluation runs: pair selection, per-query seeding, backend
//! dispatch, scoring, aggregation, and the on-disk run layout.
//!
//! A run is a pure function of its config and the backend's responses.
//! Responses are cached under `<output_dir>/responses/` before scoring, so
//! an interrupted run resumes from the cache and a finished run can be
//! replayed without touching the network.

mod config;
mod report;
mod store;

pub use config::{BackendSpec, ExperimentMode, RunConfig};
pub use report::{render_report, write_report, ReportFormat};
pub use store::{
    read_config_lock, read_scores_csv, read_summary, render_scores_csv, responses_dir,
    ConfigLock, PairRow, PartitionRow, Provenance, RunMeta, RunResult, RunSummary,
    ScoreRecord, CONFIG_LOCK_FILE, META_FILE, RESPONSES_DIR, SCORES_FILE, SCORE_COLUMNS,
    SUMMARY_FILE,
};

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::grid::{GridError, Phase, Scenario, ScenarioError};
use crate::llm::{
    Backend, BackendError, CachingBackend, EchoBackend, HttpBackend, PlannerBackend,
    QueryRequest, RandomWalkBackend, ReplayBackend, ResponseCache,
};
use crate::metrics::{aggregate_runs, score_pair, summarize_distribution, MetricError};
use crate::prompt::{
    build_prompt, parse_response, Corpus, CorpusError, InstructionRecord, ProgramLibrary,
    PromptBundle, PromptError, PARTITION_AGNOSTIC,
};
use crate::region::RegionTrace;
use crate::topology::extract_graph;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown builtin scenario '{0}'")]
    UnknownBuiltin(String),

    #[error(transparent)]
    Grid(#[from] GridError),

    #[error(transparent)]
    Scenario(#[from] ScenarioError),

    #[error(transparent)]
    Corpus(#[from] CorpusError),

    #[error(transparent)]
    Prompt(#[from] PromptError),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error(transparent)]
    Metric(#[from] MetricError),

    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV failure: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON failure: {0}")]
    Json(#[from] serde_json::Error),

    #[error("environment '{environment}' has no instructions scoped to partition '{partition}'")]
    NoScopedInstructions { environment: String, partition: String },

    #[error("run selects no (scenario, instruction) pairs")]
    EmptyRun,
}

/// Deterministic per-query seed r_k, independent of evaluation order.
///
/// Every field is length-prefixed before hashing so that no two distinct
/// inputs can collide by concatenation.
pub fn seed_for(
    base_seed: u64,
    environment: &str,
    partition: &str,
    phase: Phase,
    instruction_id: &str,
    k: u32,
) -> u64 {
    let mut hasher = Sha256::new();
    let feed = |hasher: &mut Sha256, bytes: &[u8]| {
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    };
    feed(&mut hasher, b"symtrace-seed-v1");
    feed(&mut hasher, &base_seed.to_le_bytes());
    feed(&mut hasher, environment.as_bytes());
    feed(&mut hasher, partition.as_bytes());
    feed(&mut hasher, phase.to_string().as_bytes());
    feed(&mut hasher, instruction_id.as_bytes());
    feed(&mut hasher, &k.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 yields 32 bytes"))
}

/// One (scenario, instruction) pair ready for querying.
struct Pair {
    prompt: PromptBundle,
    references: Vec<RegionTrace>,
    author: String,
}

struct QueryTask {
    pair: Arc<Pair>,
    k: u32,
    seed: u64,
}

enum Workers {
    Serial,
    Shared,
    Fixed(usize),
}

/// Run the configured evaluation, writing the results layout under
/// `config.output_dir`.
pub fn evaluate(config: &RunConfig) -> Result<RunResult, RunnerError> {
    let started = chrono::Utc::now().to_rfc3339();
    let run_dir = config.output_dir.clone();
    std::fs::create_dir_all(&run_dir)?;
    store::write_config_lock(&run_dir, config)?;
    let result = evaluate_against(config, &run_dir, config.sha256())?;
    store::write_scores_csv(&run_dir, &result.records)?;
    store::write_summary(&run_dir, &result.summary)?;
    store::write_meta(
        &run_dir,
        &store::RunMeta { created_at: started, finished_at: chrono::Utc::now().to_rfc3339() },
    )?;
    Ok(result)
}

/// Cross-partition transfer runs: the same guarded entry point as
/// [`evaluate`], refusing the associated mode.
pub fn run_cross_partition(config: &RunConfig) -> Result<RunResult, RunnerError> {
    if config.mode == ExperimentMode::Associated {
        return Err(RunnerError::Config(
            "cross-partition runs need mode simplest-on-all or complex-on-all".into(),
        ));
    }
    evaluate(config)
}

/// Outcome of replaying a stored run from its response cache.
#[derive(Debug)]
pub struct ReplayReport {
    pub result: RunResult,
    /// Whether the recomputed `scores.csv` is byte-identical to the
    /// stored one.
    pub scores_match: bool,
}

/// Recompute a finished run purely from `<run_dir>/responses/`, never
/// invoking the original backend.
pub fn replay(run_dir: &Path) -> Result<ReplayReport, RunnerError> {
    let lock = store::read_config_lock(run_dir)?;
    let mut config = lock.config;
    // Cache keys embed the model label, so pin the original backend's
    // label before swapping the backend out for cache-only replay.
    let model = config.model.clone().unwrap_or_else(|| config.backend.default_model());
    config.model = Some(model);
    config.backend = BackendSpec::Replay;
    config.output_dir = run_dir.to_path_buf();
    let result = evaluate_against(&config, run_dir, lock.config_sha256)?;
    let fresh = store::render_scores_csv(&result.records)?;
    let stored = std::fs::read(run_dir.join(store::SCORES_FILE))?;
    Ok(ReplayReport { scores_match: fresh == stored, result })
}

/// The shared compute path: selection, querying, scoring, aggregation.
/// Writes nothing except response-cache entries under `run_dir`.
/// `config_sha256` identifies the run in provenance; replay passes the
/// original run's digest rather than its own modified config's.
fn evaluate_against(
    config: &RunConfig,
    run_dir: &Path,
    config_sha256: String,
) -> Result<RunResult, RunnerError> {
    let scenarios = config.load_scenarios()?;
    let corpus = config.load_corpus()?;
    let library = config.load_program_library()?;
    let pairs = build_pairs(config, &scenarios, &corpus, &library)?;
    if pairs.is_empty() {
        return Err(RunnerError::EmptyRun);
    }

    let model = config.model.clone().unwrap_or_else(|| config.backend.default_model());
    let cache = ResponseCache::open(store::responses_dir(run_dir))?;
    let backend = build_backend(&config.backend, &pairs, &cache)?;
    let backend = CachingBackend::new(backend, cache);

    let mut tasks = Vec::with_capacity(pairs.len() * config.queries_per_pair as usize);
    for pair in pairs {
        let pair = Arc::new(pair);
        for k in 0..config.queries_per_pair {
            let seed = seed_for(
                config.base_seed,
                &pair.prompt.environment,
                &pair.prompt.partition_id,
                pair.prompt.phase,
                &pair.prompt.instruction_id,
                k,
            );
            tasks.push(QueryTask { pair: Arc::clone(&pair), k, seed });
        }
    }

    log::info!(
        "running {} queries ({} per pair) with backend '{}' (model '{model}')",
        tasks.len(),
        config.queries_per_pair,
        backend.name(),
    );

    let run_task = |task: &QueryTask| -> Result<ScoreRecord, RunnerError> {
        let request = QueryRequest {
            prompt: task.pair.prompt.clone(),
            seed: task.seed,
            temperature: config.temperature,
            model: model.clone(),
        };
        let response = backend.complete(&request)?;
        let parsed = parse_response(&response.raw_text).ok();
        let (score, best_reference_index) = match &parsed {
            Some(trace) => {
                let (score, index) = score_pair(trace, &task.pair.references)?;
                (score, Some(index))
            }
            // An unparseable completion counts as a zero, not an error.
            None => (0.0, None),
        };
        Ok(ScoreRecord {
            environment: task.pair.prompt.environment.clone(),
            partition: task.pair.prompt.partition_id.clone(),
            phase: task.pair.prompt.phase,
            instruction_id: task.pair.prompt.instruction_id.clone(),
            author: task.pair.author.clone(),
            k: task.k,
            // Cached completions replay the backend that produced them,
            // so a replayed run reproduces the original labels.
            backend: response.backend.clone(),
            model: response.model.clone(),
            parsed_sequence: parsed,
            best_reference_index,
            score,
        })
    };

    let workers = match config.parallelism {
        Some(0) | Some(1) => Workers::Serial,
        Some(n) => Workers::Fixed(n),
        None if config.backend.is_offline() => Workers::Shared,
        None => Workers::Serial,
    };
    let mut records = match workers {
        Workers::Serial => tasks.iter().map(run_task).collect::<Result<Vec<_>, _>>()?,
        Workers::Shared => tasks.par_iter().map(run_task).collect::<Result<Vec<_>, _>>()?,
        Workers::Fixed(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|err| RunnerError::Config(format!("thread pool: {err}")))?
            .install(|| tasks.par_iter().map(run_task).collect::<Result<Vec<_>, _>>())?,
    };

    store::sort_records(&mut records);
    let summary = summarize(config, config_sha256, &records)?;
    Ok(RunResult { records, summary })
}

/// Select instructions for every scenario and render their prompts.
fn build_pairs(
    config: &RunConfig,
    scenarios: &[Scenario],
    corpus: &Corpus,
    library: &ProgramLibrary,
) -> Result<Vec<Pair>, RunnerError> {
    if let Some(include) = &config.include_instructions {
        for id in include {
            corpus.get(id)?;
        }
    }

    // Source partition per environment for the cross-partition modes:
    // coarsest (fewest regions) or finest (most), label as tie-break.
    let mut source_partition: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    if config.mode != ExperimentMode::Associated {
        for scenario in scenarios {
            let regions = extract_graph(&scenario.grid).node_count();
            let candidate = (regions, scenario.partition_id.as_str());
            source_partition
                .entry(scenario.environment.as_str())
                .and_modify(|best| {
                    let keep = match config.mode {
                        ExperimentMode::SimplestOnAll => candidate < *best,
                        ExperimentMode::ComplexOnAll => candidate > *best,
                        ExperimentMode::Associated => unreachable!(),
                    };
                    if keep {
                        *best = candidate;
                    }
                })
                .or_insert(candidate);
        }
    }

    let mut pairs = Vec::new();
    for scenario in scenarios {
        let graph = extract_graph(&scenario.grid);
        let selected: Vec<&InstructionRecord> = match config.mode {
            ExperimentMode::Associated => corpus
                .for_environment(&scenario.environment)
                .filter(|record| {
                    record.scope == PARTITION_AGNOSTIC || record.scope == scenario.partition_id
                })
                .collect(),
            _ => {
                let (_, source) = source_partition[scenario.environment.as_str()];
                let scoped: Vec<&InstructionRecord> = corpus
                    .for_environment(&scenario.environment)
                    .filter(|record| record.scope == source)
                    .collect();
                if scoped.is_empty() {
                    return Err(RunnerError::NoScopedInstructions {
                        environment: scenario.environment.clone(),
                        partition: source.to_string(),
                    });
                }
                scoped
            }
        };
        for record in selected {
            if let Some(include) = &config.include_instructions {
                if !include.contains(&record.id) {
                    continue;
                }
            }
            let references: Vec<RegionTrace> = record
                .resolve_references(scenario, library)?
                .into_iter()
                .map(|reference| reference.trace)
                .collect();
            let prompt = build_prompt(scenario, &graph, record)?;
            pairs.push(Pair { prompt, references, author: record.author.clone() });
        }
    }
    Ok(pairs)
}

fn build_backend(
    spec: &BackendSpec,
    pairs: &[Pair],
    cache: &ResponseCache,
) -> Result<Box<dyn Backend>, RunnerError> {
    Ok(match spec {
        BackendSpec::Echo => {
            let mut echo = EchoBackend::new();
            for pair in pairs {
                let p = &pair.prompt;
                let first = pair
                    .references
                    .first()
                    .expect("pairs are built with at least one reference");
                echo.insert(
                    &p.environment,
                    &p.partition_id,
                    p.phase,
                    &p.instruction_id,
                    first.clone(),
                );
            }
            Box::new(echo)
        }
        BackendSpec::Planner => Box::new(PlannerBackend::new()),
        BackendSpec::RandomWalk { max_steps } => Box::new(RandomWalkBackend::new(*max_steps)),
        BackendSpec::Replay => {
            Box::new(ReplayBackend::new(ResponseCache::open(cache.dir())?))
        }
        BackendSpec::Http { .. } => {
            let http = spec.http_config().expect("http spec carries http config");
            Box::new(HttpBackend::new(http)?)
        }
    })
}

/// Fold sorted records into pair means and per-partition distributions.
fn summarize(
    config: &RunConfig,
    config_sha256: String,
    records: &[ScoreRecord],
) -> Result<RunSummary, RunnerError> {
    let mut pairs: Vec<PairRow> = Vec::new();
    let mut index = 0;
    while index < records.len() {
        let start = index;
        while index < records.len()
            && records[index].pair_key() == records[start].pair_key()
        {
            index += 1;
        }
        let group = &records[start..index];
        let scores: Vec<f64> = group.iter().map(|record| record.score).collect();
        let aggregate = aggregate_runs(&scores)?;
        let head = &group[0];
        pairs.push(PairRow {
            environment: head.environment.clone(),
            partition: head.partition.clone(),
            phase: head.phase,
            instruction_id: head.instruction_id.clone(),
            author: head.author.clone(),
            queries: group.len() as u32,
            mean: aggregate.mean,
            std: aggregate.std,
        });
    }

    let mut partitions: Vec<PartitionRow> = Vec::new();
    let mut index = 0;
    let scenario_key =
        |row: &PairRow| (row.environment.clone(), row.partition.clone(), row.phase);
    while index < pairs.len() {
        let start = index;
        while index < pairs.len() && scenario_key(&pairs[index]) == scenario_key(&pairs[start]) {
            index += 1;
        }
        let group = &pairs[start..index];
        let means: Vec<f64> = group.iter().map(|row| row.mean).collect();
        let distribution = summarize_distribution(&means)?;
        let head = &group[0];
        partitions.push(PartitionRow {
            environment: head.environment.clone(),
            partition: head.partition.clone(),
            phase: head.phase,
            instructions: group.len(),
            mean: distribution.mean,
            std: distribution.std,
            median: distribution.median,
            q25: distribution.q25,
            q75: distribution.q75,
            iqr: distribution.iqr,
        });
    }

    Ok(RunSummary {
        provenance: Provenance {
            config_sha256,
            backend: records[0].backend.clone(),
            model: records[0].model.clone(),
            queries_per_pair: config.queries_per_pair,
            base_seed: config.base_seed,
            record_count: records.len(),
        },
        pairs,
        partitions,
    })
}
