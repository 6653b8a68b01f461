//! `symtrace` — inspect scenarios, simulate directive programs, and run
//! instruction-to-trace evaluations from the command line.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use symtrace::grid::{GridFile, Scenario};
use symtrace::oracle;
use symtrace::prompt::build_prompt;
use symtrace::region::RegionId;
use symtrace::runner::{self, ReportFormat, RunConfig};
use symtrace::topology::extract_graph;

#[derive(Parser)]
#[command(
    name = "symtrace",
    version,
    about = "Evaluate how well language models translate navigation \
             instructions into region traversal sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a grid and print its region adjacency list as JSON.
    ExtractGraph {
        /// Grid file path, or builtin:<name>.
        grid: String,
    },
    /// Compare a grid's extracted adjacency against a declared list.
    Verify {
        /// Grid file path, or builtin:<name>.
        grid: String,
        /// JSON file mapping region id to neighbor list.
        declared: PathBuf,
    },
    /// Render the prompt for a (scenario, instruction) pair.
    Prompt {
        /// Scenario grid file path, or builtin:<name>.
        scenario: String,
        /// Instruction id from the corpus.
        instruction_id: String,
        /// Instruction corpus: "builtin" or a JSON file path.
        #[arg(long, default_value = "builtin")]
        corpus: String,
    },
    /// Run a directive program on a scenario and print the region trace.
    Simulate {
        /// Scenario grid file path, or builtin:<name>.
        scenario: String,
        /// Program JSON file path, or builtin:<name>.
        program: String,
    },
    /// Execute an evaluation run described by a config file.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute a finished run from its cached responses and check that
    /// the stored scores reproduce byte for byte.
    Replay {
        #[arg(long)]
        run: PathBuf,
    },
    /// Render a report from a finished run directory.
    Report {
        run: PathBuf,
        #[arg(long)]
        format: ReportFormat,
    },
}

/// Print to stdout, treating a closed pipe (e.g. `symtrace ... | head`)
/// as a clean early exit instead of a panic.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(err) if err.kind() == std::io::ErrorKind::BrokenPipe => {
            std::process::exit(0);
        }
        Err(err) => Err(err.into()),
    }
}

fn load_scenario(reference: &str) -> Result<Scenario> {
    let text = RunConfig::load_scenario_text(reference)
        .with_context(|| format!("loading scenario '{reference}'"))?;
    let file = GridFile::parse(&text).with_context(|| format!("parsing '{reference}'"))?;
    Ok(Scenario::from_grid_file(file)?)
}

fn load_corpus(reference: &str) -> Result<symtrace::prompt::Corpus> {
    let text = if reference == "builtin" {
        symtrace::assets::INSTRUCTION_CORPUS.to_string()
    } else {
        std::fs::read_to_string(reference)
            .with_context(|| format!("reading corpus '{reference}'"))?
    };
    Ok(symtrace::prompt::Corpus::from_json(&text)?)
}

fn load_program(reference: &str) -> Result<Vec<symtrace::oracle::Directive>> {
    if let Some(name) = reference.strip_prefix("builtin:") {
        let library = symtrace::assets::builtin_program_library()?;
        return library
            .get(name)
            .cloned()
            .with_context(|| format!("no builtin program named '{name}'"));
    }
    let text = std::fs::read_to_string(reference)
        .with_context(|| format!("reading program '{reference}'"))?;
    Ok(symtrace::assets::parse_program(&text)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::ExtractGraph { grid } => {
            let scenario = load_scenario(&grid)?;
            let graph = extract_graph(&scenario.grid);
            let adjacency: BTreeMap<RegionId, Vec<RegionId>> = graph.to_adjacency();
            emit(&format!("{}\n", serde_json::to_string_pretty(&adjacency)?))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { grid, declared } => {
            let scenario = load_scenario(&grid)?;
            let text = std::fs::read_to_string(&declared)
                .with_context(|| format!("reading '{}'", declared.display()))?;
            let declared: BTreeMap<RegionId, Vec<RegionId>> = serde_json::from_str(&text)
                .context("declared adjacency must map region id to neighbor list")?;
            let diff = extract_graph(&scenario.grid).verify_against(&declared);
            if diff.is_empty() {
                println!("adjacency verified: {} regions match", declared.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("{diff}");
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Prompt { scenario, instruction_id, corpus } => {
            let scenario = load_scenario(&scenario)?;
            let corpus = load_corpus(&corpus)?;
            let instruction = corpus.get(&instruction_id)?;
            let graph = extract_graph(&scenario.grid);
            let bundle = build_prompt(&scenario, &graph, instruction)?;
            emit(&bundle.text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { scenario, program } => {
            let scenario = load_scenario(&scenario)?;
            let program = load_program(&program)?;
            let trace = oracle::simulate(&scenario, &program)?;
            println!("{trace}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate { config } => {
            let config = RunConfig::from_file(&config)
                .with_context(|| format!("loading config '{}'", config.display()))?;
            let result = runner::evaluate(&config)?;
            let summary = &result.summary;
            println!(
                "evaluated {} completions over {} pairs with backend {} ({})",
                result.records.len(),
                summary.pairs.len(),
                summary.provenance.backend,
                summary.provenance.model,
            );
            for row in &summary.partitions {
                println!(
                    "  {}/{}/{}: mean {:.4} median {:.4} iqr {:.4} over {} instructions",
                    row.environment,
                    row.partition,
                    row.phase,
                    row.mean,
                    row.median,
                    row.iqr,
                    row.instructions,
                );
            }
            println!("results written to {}", config.output_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { run } => {
            let report = runner::replay(&run)?;
            if report.scores_match {
                println!(
                    "replayed {} records from cache; scores.csv reproduces byte for byte",
                    report.result.records.len(),
                );
                Ok(ExitCode::SUCCESS)
            } else {
                println!("replay diverged from stored scores.csv");
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Report { run, format } => {
            let path = runner::write_report(&run, format)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
