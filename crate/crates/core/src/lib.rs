//! Evaluation harness for translating natural-language navigation
//! instructions into the symbolic region traces of grid-world agents.
//!
//! The pipeline, end to end:
//!
//! 1. [`grid`] parses annotated ASCII grids into validated scenarios.
//! 2. [`topology`] derives region adjacency graphs and the block-push /
//!    pit-bridging dynamics that rewire them.
//! 3. [`oracle`] compiles directive programs into ground-truth region
//!    traces by simulating them on a scenario.
//! 4. [`prompt`] renders the four-part prompt for a (scenario,
//!    instruction) pair and parses model responses back into traces.
//! 5. [`llm`] supplies completion backends: offline controls, a cached
//!    HTTP client, and replay from stored responses.
//! 6. [`metrics`] scores hypothesis traces against references with
//!    G-BLEU and aggregates per-pair and per-partition statistics.
//! 7. [`runner`] orchestrates whole runs and writes the deterministic
//!    results layout (`scores.csv`, `summary.json`, `config.lock.json`).
//!
//! Bundled scenario grids, adjacency lists, directive programs, and the
//! instruction corpus live in [`assets`].

pub mod assets;
pub mod grid;
pub mod llm;
pub mod metrics;
pub mod oracle;
pub mod prompt;
pub mod region;
pub mod runner;
pub mod topology;

pub use grid::{Cell, Direction, GridError, GridFile, GridMap, Phase, Pos, Scenario};
pub use metrics::{gleu, score_pair, DEFAULT_MAX_N};
pub use oracle::{simulate, Condition, Directive, SimError};
pub use prompt::{build_prompt, parse_response, Corpus, InstructionRecord, PromptBundle};
pub use region::{RegionId, RegionTrace, TraceError};
pub use runner::{evaluate, replay, BackendSpec, RunConfig, RunResult, RunnerError, ScoreRecord};
pub use topology::{extract_graph, RegionGraph};
