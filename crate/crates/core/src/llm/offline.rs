//! Deterministic offline backends.
//!
//! All of them answer from the prompt alone (plus the request seed), so
//! identical requests always produce identical text. The planner and the
//! random walk re-read the region facts out of the rendered prompt rather
//! than taking the scenario as input — they see exactly what a model
//! would see.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{Backend, BackendError, QueryRequest, QueryResponse, ResponseCache};
use crate::grid::Phase;
use crate::region::{RegionId, RegionTrace};
use crate::topology::RegionGraph;

/// State/goal/block regions and the adjacency list, as printed in a
/// prompt. What the offline control backends work from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptFacts {
    pub state: RegionId,
    pub goal: RegionId,
    pub block: Option<RegionId>,
    pub adjacency: BTreeMap<RegionId, Vec<RegionId>>,
}

impl PromptFacts {
    pub fn parse(text: &str) -> Result<Self, BackendError> {
        let mut state = None;
        let mut goal = None;
        let mut block = None;
        let mut adjacency = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("- State: Region ") {
                state = parse_region(rest);
            } else if let Some(rest) = line.strip_prefix("- Goal: Region ") {
                goal = parse_region(rest);
            } else if let Some(rest) = line.strip_prefix("- Block: Region ") {
                block = parse_region(rest);
            } else if let Some(rest) = line.strip_prefix("Region ") {
                if let Some((id, list)) = parse_adjacency_line(rest) {
                    adjacency.insert(id, list);
                }
            }
        }
        let state = state.ok_or(BackendError::UnreadablePrompt("State"))?;
        let goal = goal.ok_or(BackendError::UnreadablePrompt("Goal"))?;
        if adjacency.is_empty() {
            return Err(BackendError::UnreadablePrompt("Adjacency list"));
        }
        Ok(Self { state, goal, block, adjacency })
    }

    pub fn graph(&self) -> RegionGraph {
        RegionGraph::from_adjacency(
            self.adjacency.iter().map(|(&r, ns)| (r, ns.iter().copied())),
        )
    }
}

fn parse_region(text: &str) -> Option<RegionId> {
    text.trim().parse::<u32>().ok().and_then(|n| RegionId::new(n).ok())
}

fn parse_adjacency_line(rest: &str) -> Option<(RegionId, Vec<RegionId>)> {
    let (id, list) = rest.split_once(':')?;
    let id = parse_region(id)?;
    let list = list.trim().strip_prefix('[')?.strip_suffix(']')?;
    let neighbors = if list.trim().is_empty() {
        Vec::new()
    } else {
        list.split(',').map(|t| parse_region(t.trim())).collect::<Option<_>>()?
    };
    Some((id, neighbors))
}

fn final_line(path: &[RegionId]) -> String {
    let body =
        path.iter().map(ToString::to_string).collect::<Vec<_>>().join(" -> ");
    format!("FINAL: {body}")
}

fn offline_response(request: &QueryRequest, backend: &str, raw_text: String) -> QueryResponse {
    QueryResponse {
        raw_text,
        backend: backend.to_string(),
        model: request.model.clone(),
        latency: std::time::Duration::ZERO,
        cached: false,
    }
}

/// Echoes a designated reference trace for each (environment, partition,
/// phase, instruction) pair — the harness's known-perfect backend.
#[derive(Debug, Default, Clone)]
pub struct EchoBackend {
    references: BTreeMap<String, RegionTrace>,
}

impl EchoBackend {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(environment: &str, partition_id: &str, phase: Phase, instruction_id: &str) -> String {
        format!("{environment}|{partition_id}|{phase}|{instruction_id}")
    }

    pub fn insert(
        &mut self,
        environment: &str,
        partition_id: &str,
        phase: Phase,
        instruction_id: &str,
        trace: RegionTrace,
    ) {
        self.references
            .insert(Self::key(environment, partition_id, phase, instruction_id), trace);
    }
}

impl Backend for EchoBackend {
    fn name(&self) -> &str {
        "echo"
    }

    fn complete(&self, request: &QueryRequest) -> Result<QueryResponse, BackendError> {
        let p = &request.prompt;
        let key = Self::key(&p.environment, &p.partition_id, p.phase, &p.instruction_id);
        let trace = self
            .references
            .get(&key)
            .ok_or_else(|| BackendError::UnknownPair(key.clone()))?;
        Ok(offline_response(request, "echo", format!("FINAL: {trace}")))
    }
}

/// Instruction-blind control: answers with a breadth-first shortest
/// region path from state to goal, reading only the prompt's data
/// section. When the goal is unreachable (Ant Fall before any push) it
/// routes to the block's region instead, and failing that it stays put.
#[derive(Debug, Default, Clone, Copy)]
pub struct PlannerBackend;

impl PlannerBackend {
    pub fn new() -> Self {
        Self
    }
}

impl Backend for PlannerBackend {
    fn name(&self) -> &str {
        "planner"
    }

    fn complete(&self, request: &QueryRequest) -> Result<QueryResponse, BackendError> {
        let facts = PromptFacts::parse(&request.prompt.text)?;
        let graph = facts.graph();
        let path = graph
            .shortest_path(facts.state, facts.goal)
            .or_else(|| facts.block.and_then(|b| graph.shortest_path(facts.state, b)))
            .unwrap_or_else(|| vec![facts.state]);
        Ok(offline_response(request, "planner", final_line(&path)))
    }
}

/// Seeded random walk over the prompt's adjacency list: a noise-floor
/// control. Walks from the state region, stepping to a uniformly random
/// neighbor until the goal is reached or `max_steps` steps were taken.
#[derive(Debug, Clone, Copy)]
pub struct RandomWalkBackend {
    max_steps: usize,
}

impl RandomWalkBackend {
    pub fn new(max_steps: usize) -> Self {
        Self { max_steps }
    }
}

impl Default for RandomWalkBackend {
    fn default() -> Self {
        Self::new(16)
    }
}

impl Backend for RandomWalkBackend {
    fn name(&self) -> &str {
        "random-walk"
    }

    fn complete(&self, request: &QueryRequest) -> Result<QueryResponse, BackendError> {
        let facts = PromptFacts::parse(&request.prompt.text)?;
        // Derive the walk's randomness from (prompt, seed) so identical
        // requests repeat exactly.
        let mut hasher = Sha256::new();
        hasher.update(request.prompt.text.as_bytes());
        hasher.update(request.seed.to_le_bytes());
        let digest = hasher.finalize();
        let mut rng = ChaCha8Rng::seed_from_u64(u64::from_le_bytes(
            digest[..8].try_into().expect("digest is 32 bytes"),
        ));

        let mut path = vec![facts.state];
        let mut current = facts.state;
        for _ in 0..self.max_steps {
            if current == facts.goal {
                break;
            }
            let Some(neighbors) = facts.adjacency.get(&current).filter(|ns| !ns.is_empty())
            else {
                break;
            };
            current = neighbors[rng.gen_range(0..neighbors.len())];
            path.push(current);
        }
        Ok(offline_response(request, "random-walk", final_line(&path)))
    }
}

/// Serves previously cached responses only; any miss is an error. Used
/// to re-score a completed run with zero live queries.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    cache: ResponseCache,
}

impl ReplayBackend {
    pub fn new(cache: ResponseCache) -> Self {
        Self { cache }
    }
}

impl Backend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &QueryRequest) -> Result<QueryResponse, BackendError> {
        self.cache
            .load(request)?
            .ok_or_else(|| BackendError::CacheMiss { key: ResponseCache::key(request) })
    }
}
