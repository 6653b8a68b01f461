//! Data shipped with the crate: the Partition IV grids for both
//! environments, their published adjacency lists, the instruction corpus,
//! and the canonical directive programs.
//!
//! Everything here is embedded so the binaries work without a data
//! directory; the same files live under `data/` for external tooling.

use crate::grid::{GridFile, Scenario, ScenarioError};
use crate::oracle::Directive;
use crate::prompt::{Corpus, CorpusError, ProgramLibrary};

/// Ant Maze, Partition IV (12 x 13), transcribed from the published map.
pub const ANT_MAZE_P4_GRID: &str = include_str!("../data/grids/ant_maze_p4.grid");

/// Ant Fall, Partition IV (14 x 15), block at the rightmost column.
pub const ANT_FALL_P4_GRID: &str = include_str!("../data/grids/ant_fall_p4.grid");

/// Ant Fall Partition IV, before-block phase (identical geometry; the
/// phase label selects the pre-push reference set).
pub const ANT_FALL_P4_BEFORE_GRID: &str = include_str!("../data/grids/ant_fall_p4_before.grid");

/// Ant Fall Partition IV, after-block phase: the agent has reached the
/// column below the block and the push is still ahead.
pub const ANT_FALL_P4_AFTER_GRID: &str = include_str!("../data/grids/ant_fall_p4_after.grid");

/// Published adjacency list for Ant Maze Partition IV (23 regions).
pub const ANT_MAZE_P4_ADJACENCY: &str = include_str!("../data/adjacency/ant_maze_p4.json");

/// Published adjacency list for Ant Fall Partition IV (25 regions).
pub const ANT_FALL_P4_ADJACENCY: &str = include_str!("../data/adjacency/ant_fall_p4.json");

/// The shipped instruction corpus: 22 paraphrase instructions (11 per
/// environment) plus the two canonical instructions.
pub const INSTRUCTION_CORPUS: &str = include_str!("../data/corpus/instructions.json");

/// Canonical Ant Maze program: east past the left-side wall, north past
/// the upper wall, west to the goal.
pub const ANT_MAZE_CANONICAL_PROGRAM: &str =
    include_str!("../data/programs/ant_maze_canonical.json");

/// Canonical Ant Fall program: east to the boundary, north to the block,
/// push it into the pit, cross, west to the goal.
pub const ANT_FALL_CANONICAL_PROGRAM: &str =
    include_str!("../data/programs/ant_fall_canonical.json");

/// Before-block half of the Ant Fall program.
pub const ANT_FALL_BEFORE_PROGRAM: &str = include_str!("../data/programs/ant_fall_before.json");

/// After-block half of the Ant Fall program.
pub const ANT_FALL_AFTER_PROGRAM: &str = include_str!("../data/programs/ant_fall_after.json");

/// JSON schema documenting the directive program format.
pub const DIRECTIVE_PROGRAM_SCHEMA: &str =
    include_str!("../data/schemas/directive_program.schema.json");

/// Parse a directive program from JSON.
pub fn parse_program(json: &str) -> Result<Vec<Directive>, serde_json::Error> {
    serde_json::from_str(json)
}

/// The named programs referenced by the shipped corpus.
pub fn builtin_program_library() -> Result<ProgramLibrary, serde_json::Error> {
    let mut library = ProgramLibrary::new();
    for (name, json) in [
        ("ant-maze-canonical", ANT_MAZE_CANONICAL_PROGRAM),
        ("ant-fall-canonical", ANT_FALL_CANONICAL_PROGRAM),
        ("ant-fall-before", ANT_FALL_BEFORE_PROGRAM),
        ("ant-fall-after", ANT_FALL_AFTER_PROGRAM),
    ] {
        library.insert(name.to_string(), parse_program(json)?);
    }
    Ok(library)
}

/// Load the shipped corpus.
pub fn builtin_corpus() -> Result<Corpus, CorpusError> {
    Corpus::from_json(INSTRUCTION_CORPUS)
}

/// The four shipped scenarios: Ant Maze IV (whole) and Ant Fall IV
/// (whole, before-block, after-block).
pub fn builtin_scenarios() -> Result<Vec<Scenario>, BuiltinError> {
    [
        ANT_MAZE_P4_GRID,
        ANT_FALL_P4_GRID,
        ANT_FALL_P4_BEFORE_GRID,
        ANT_FALL_P4_AFTER_GRID,
    ]
    .into_iter()
    .map(|text| {
        let file = GridFile::parse(text)?;
        Ok(Scenario::from_grid_file(file)?)
    })
    .collect()
}

/// Resolve a builtin scenario by its grid-file name (used by run configs
/// so they can refer to shipped data without a filesystem copy).
pub fn builtin_scenario(name: &str) -> Option<&'static str> {
    match name {
        "ant_maze_p4" => Some(ANT_MAZE_P4_GRID),
        "ant_fall_p4" => Some(ANT_FALL_P4_GRID),
        "ant_fall_p4_before" => Some(ANT_FALL_P4_BEFORE_GRID),
        "ant_fall_p4_after" => Some(ANT_FALL_P4_AFTER_GRID),
        _ => None,
    }
}

/// Errors from loading builtin data.
#[derive(Debug, thiserror::Error)]
pub enum BuiltinError {
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),

    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}
