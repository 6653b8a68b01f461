//! Prompt rendering, LLM-output parsing, and the instruction corpus.
//!
//! A prompt has four parts: explicit state/goal (plus block) regions, the
//! adjacency list and top-down map, the natural-language instruction, and
//! a fixed reasoning scaffold ending in the regularized output form. The
//! rendered text follows the published template for both environments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Phase, Scenario};
use crate::oracle::{self, Directive, SimError};
use crate::region::{RegionId, RegionTrace};
use crate::topology::RegionGraph;

/// Fixed wording of the final-output directive appended to every prompt.
pub const FINAL_OUTPUT_FORM: &str = "- Final output form: reply with one line \
'FINAL: r1 -> r2 -> ... -> rn' listing the traversed regions in order, \
starting from the current region.";

const THINKING_STEP_1: &str = "1. Identify the agent's current region and the goal region.";
const THINKING_STEP_2: &str = "2. Interpret the Instruction: Understand the directional \
commands provided in the instruction and translate them into movements between regions.";
const THINKING_STEP_3_PLAIN: &str = "3. Plan the Route: Based on the adjacency list and \
the maze layout, determine the sequence of regions the agent should traverse to follow \
the given instructions and reach the goal.";
const THINKING_STEP_3_BLOCK: &str = "3. Plan the Route: Based on the adjacency list, the \
maze layout and the explanation, if the agent follows the instructions to reach the goal, \
describe the sequence of regions traversed by the agent.";
const THINKING_STEP_4: &str = "4. Check for each region of the sequence if the agent can \
move directly to the next. If not, correct the sequence according to the instructions.";

const VIEW_INTRO_PLAIN: &str = "- The top-down view of the maze is shown below, 'W' \
represents walls, 'A' represents the ant's current position, 'G' represents the goal. \
The number represents the region number:";
const VIEW_INTRO_BLOCK: &str = "- The top-down view of the maze is shown below:";

const EXPLANATION: &str = "P represents pit, A represents the agent's current position, \
B represents the movable block which can be pushed by agent in four directions, G \
represents the goal, the number represents the region number. The block and the pit \
have the same width, the only way that the agent can pass the pit is to push the block \
to fill the pit and bridge the regions or it will not go through the pit: The action \
push means that the block moves one step in front of the agent in the direction that \
agent moves.";

/// A rendered prompt plus the metadata identifying its (scenario,
/// instruction) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub text: String,
    pub environment: String,
    pub partition_id: String,
    pub phase: Phase,
    pub instruction_id: String,
    pub state_region: RegionId,
    pub goal_region: RegionId,
    pub block_region: Option<RegionId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("instruction '{0}' has empty text")]
    EmptyInstruction(String),

    #[error("graph does not cover scenario marker region {0}")]
    GraphMismatch(RegionId),
}

/// Render the prompt for one (scenario, instruction) pair.
///
/// `graph` is the adjacency presented to the model — normally the graph
/// extracted from the scenario grid. It must cover the marker regions.
pub fn build_prompt(
    scenario: &Scenario,
    graph: &RegionGraph,
    instruction: &InstructionRecord,
) -> Result<PromptBundle, PromptError> {
    if instruction.text.trim().is_empty() {
        return Err(PromptError::EmptyInstruction(instruction.id.clone()));
    }
    let (state_region, goal_region) = scenario.grid.marker_regions();
    let block_region = scenario.grid.block_region();
    for region in [Some(state_region), Some(goal_region), block_region].into_iter().flatten() {
        if !graph.nodes().any(|r| r == region) {
            return Err(PromptError::GraphMismatch(region));
        }
    }

    let mut text = String::new();
    text.push_str("Data:\n");
    text.push_str(&format!("- State: Region {state_region}\n"));
    text.push_str(&format!("- Goal: Region {goal_region}\n"));
    if let Some(block) = block_region {
        text.push_str(&format!("- Block: Region {block}\n"));
    }
    text.push_str("\n- Adjacency list:\n");
    for (region, neighbors) in graph.to_adjacency() {
        let list =
            neighbors.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        text.push_str(&format!("    Region {region}: [{list}]\n"));
    }
    text.push('\n');
    text.push_str(if block_region.is_some() { VIEW_INTRO_BLOCK } else { VIEW_INTRO_PLAIN });
    text.push_str("\n\n");
    text.push_str(&scenario.grid.render_tokens());
    if block_region.is_some() {
        text.push_str("\n- Explanation:\n");
        text.push_str(&format!("    {EXPLANATION}\n"));
    }
    text.push_str("\n- Instruction:\n");
    text.push_str(&format!("    {}\n", instruction.text.trim()));
    text.push_str("\n- Thinking Process:\n");
    let step3 = if block_region.is_some() { THINKING_STEP_3_BLOCK } else { THINKING_STEP_3_PLAIN };
    for step in [THINKING_STEP_1, THINKING_STEP_2, step3, THINKING_STEP_4] {
        text.push_str(&format!("    {step}\n"));
    }
    text.push('\n');
    text.push_str(FINAL_OUTPUT_FORM);
    text.push('\n');

    Ok(PromptBundle {
        text,
        environment: scenario.environment.clone(),
        partition_id: scenario.partition_id.clone(),
        phase: scenario.phase,
        instruction_id: instruction.id.clone(),
        state_region,
        goal_region,
        block_region,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no line of the response matches the final-output grammar")]
pub struct ResponseParseError;

/// Extract the region sequence from raw model output.
///
/// The last line matching the final-output grammar wins: an optional
/// label up to the first ':', then positive integers separated by `->`,
/// `→`, or commas, with at most one trailing period. Consecutive
/// duplicate regions are collapsed.
pub fn parse_response(text: &str) -> Result<RegionTrace, ResponseParseError> {
    text.lines()
        .rev()
        .find_map(parse_final_line)
        .ok_or(ResponseParseError)
}

fn parse_final_line(line: &str) -> Option<RegionTrace> {
    let line = line.trim();
    let body = match line.split_once(':') {
        Some((_label, rest)) => rest,
        None => line,
    };
    let body = body.trim();
    let body = body.strip_suffix('.').unwrap_or(body).trim();
    if body.is_empty() {
        return None;
    }
    let regions: Vec<RegionId> = body
        .replace('→', "->")
        .replace("->", ",")
        .split(',')
        .map(|token| {
            token
                .trim()
                .parse::<u32>()
                .ok()
                .and_then(|n| RegionId::new(n).ok())
        })
        .collect::<Option<_>>()?;
    RegionTrace::collapse(regions).ok()
}

/// How a reference trace was obtained.
pub mod provenance {
    /// Reference supplied directly in the corpus file.
    pub const HUMAN: &str = "human";
    /// Reference generated by simulating a directive program.
    pub const ORACLE: &str = "oracle";
}

/// A directive program given inline or by library name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProgramSpec {
    Named(String),
    Inline(Vec<Directive>),
}

/// Named directive programs available to corpus records.
pub type ProgramLibrary = BTreeMap<String, Vec<Directive>>;

impl ProgramSpec {
    pub fn resolve<'a>(&'a self, library: &'a ProgramLibrary) -> Result<&'a [Directive], CorpusError> {
        match self {
            ProgramSpec::Inline(program) => Ok(program),
            ProgramSpec::Named(name) => library
                .get(name)
                .map(Vec::as_slice)
                .ok_or_else(|| CorpusError::UnknownProgram(name.clone())),
        }
    }
}

/// Where one reference trace comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSource {
    /// An explicit trace, e.g. human-annotated.
    Trace {
        regions: RegionTrace,
        #[serde(default = "default_provenance")]
        provenance: String,
    },
    /// A directive program simulated on the target scenario.
    Program { program: ProgramSpec },
}

fn default_provenance() -> String {
    provenance::HUMAN.to_string()
}

/// One reference entry, scoped to a partition (or any) and a phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEntry {
    /// Partition this reference applies to; absent = any partition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<String>,
    #[serde(default)]
    pub phase: Phase,
    pub source: ReferenceSource,
}

/// A reference trace resolved for a concrete scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedReference {
    pub trace: RegionTrace,
    pub provenance: String,
}

/// One natural-language instruction with its ground-truth sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub id: String,
    pub environment: String,
    pub author: String,
    /// Partition label the text refers to, or "partition-agnostic".
    pub scope: String,
    pub text: String,
    /// Canonical structured form of the instruction, when one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<ProgramSpec>,
    #[serde(default)]
    pub references: Vec<ReferenceEntry>,
}

pub const PARTITION_AGNOSTIC: &str = "partition-agnostic";

impl InstructionRecord {
    /// Resolve the reference traces that apply to `scenario`, simulating
    /// program-sourced references on its grid.
    pub fn resolve_references(
        &self,
        scenario: &Scenario,
        library: &ProgramLibrary,
    ) -> Result<Vec<ResolvedReference>, CorpusError> {
        let mut resolved = Vec::new();
        for entry in &self.references {
            let partition_ok = entry
                .partition
                .as_ref()
                .is_none_or(|p| p == &scenario.partition_id);
            if !partition_ok || entry.phase != scenario.phase {
                continue;
            }
            let reference = match &entry.source {
                ReferenceSource::Trace { regions, provenance } => ResolvedReference {
                    trace: regions.clone(),
                    provenance: provenance.clone(),
                },
                ReferenceSource::Program { program } => {
                    let program = program.resolve(library)?;
                    let trace = oracle::simulate(scenario, program).map_err(|source| {
                        CorpusError::SimulationFailed { id: self.id.clone(), source }
                    })?;
                    ResolvedReference { trace, provenance: provenance::ORACLE.to_string() }
                }
            };
            resolved.push(reference);
        }
        if resolved.is_empty() {
            return Err(CorpusError::NoReferences {
                id: self.id.clone(),
                partition: scenario.partition_id.clone(),
                phase: scenario.phase,
            });
        }
        Ok(resolved)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("duplicate instruction id '{0}'")]
    DuplicateId(String),

    #[error("instruction '{0}' has empty text")]
    EmptyText(String),

    #[error("unknown instruction id '{0}'")]
    UnknownInstruction(String),

    #[error("unknown program name '{0}'")]
    UnknownProgram(String),

    #[error("instruction '{id}' has no reference for partition {partition}, phase {phase}")]
    NoReferences { id: String, partition: String, phase: Phase },

    #[error("simulating the reference program of '{id}' failed: {source}")]
    SimulationFailed {
        id: String,
        #[source]
        source: SimError,
    },
}

/// The instruction corpus of one harness run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub instructions: Vec<InstructionRecord>,
}

impl Corpus {
    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let corpus: Corpus = serde_json::from_str(text)?;
        corpus.validate()?;
        Ok(corpus)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = std::collections::BTreeSet::new();
        for record in &self.instructions {
            if !seen.insert(&record.id) {
                return Err(CorpusError::DuplicateId(record.id.clone()));
            }
            if record.text.trim().is_empty() {
                return Err(CorpusError::EmptyText(record.id.clone()));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&InstructionRecord, CorpusError> {
        self.instructions
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| CorpusError::UnknownInstruction(id.to_string()))
    }

    pub fn for_environment<'a>(
        &'a self,
        environment: &'a str,
    ) -> impl Iterator<Item = &'a InstructionRecord> {
        self.instructions.iter().filter(move |r| r.environment == environment)
    }
}
