//! ASCII top-down grid maps with wall, pit, and region cells plus
//! agent / goal / movable-block overlays.
//!
//! Grid files are UTF-8 text: optional `#key: value` header lines
//! (recognized keys: `environment`, `partition`, `phase`, `block_region`)
//! followed by rows of whitespace-separated tokens. A token is `W` (wall),
//! `P` (pit), `A` (agent), `G` (goal), `B` (block), or a positive integer
//! region id.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::region::RegionId;

/// One terrain cell of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Wall,
    Pit,
    Region(RegionId),
}

impl Cell {
    pub fn region(self) -> Option<RegionId> {
        match self {
            Cell::Region(r) => Some(r),
            _ => None,
        }
    }
}

/// A (row, column) grid coordinate. Row 0 is the top row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// The neighboring position one step in `dir`, if it stays in a
    /// `rows` x `cols` grid.
    pub fn step(self, dir: Direction, rows: usize, cols: usize) -> Option<Pos> {
        let (dr, dc) = dir.delta();
        let row = self.row.checked_add_signed(dr)?;
        let col = self.col.checked_add_signed(dc)?;
        (row < rows && col < cols).then_some(Pos { row, col })
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Compass direction on the grid. North is toward row 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    N,
    S,
    E,
    W,
}

impl Direction {
    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::N => (-1, 0),
            Direction::S => (1, 0),
            Direction::E => (0, 1),
            Direction::W => (0, -1),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::N => Direction::S,
            Direction::S => Direction::N,
            Direction::E => Direction::W,
            Direction::W => Direction::E,
        }
    }

    /// Absolute direction of the agent's left hand while moving `self`.
    pub fn left(self) -> Direction {
        match self {
            Direction::N => Direction::W,
            Direction::W => Direction::S,
            Direction::S => Direction::E,
            Direction::E => Direction::N,
        }
    }

    /// Absolute direction of the agent's right hand while moving `self`.
    pub fn right(self) -> Direction {
        self.left().opposite()
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::N => "N",
            Direction::S => "S",
            Direction::E => "E",
            Direction::W => "W",
        };
        f.write_str(s)
    }
}

/// Errors from parsing or constructing grids.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("grid has no cells")]
    EmptyGrid,

    #[error("row {row} has {got} cells, expected {expected}")]
    RaggedRows { row: usize, expected: usize, got: usize },

    #[error("unknown token '{token}' at row {row}, col {col}")]
    UnknownToken { token: String, row: usize, col: usize },

    #[error("expected exactly one '{marker}' cell, found {count}")]
    MarkerCount { marker: char, count: usize },

    #[error("cannot infer region for '{marker}' at {pos}: {reason}")]
    AmbiguousMarkerRegion { marker: char, pos: Pos, reason: MarkerAmbiguity },

    #[error("grid contains 'B' cells but no block_region was declared")]
    MissingBlockRegion,

    #[error("block_region declared but the grid has no 'B' cells")]
    BlockRegionWithoutBlock,

    #[error("block cells do not form a contiguous straight segment")]
    NonContiguousBlock,

    #[error("agent, goal, and block cells must be pairwise disjoint")]
    OverlappingMarkers,

    #[error("marker position {0} is outside the grid or not on a region cell")]
    InvalidMarkerPosition(Pos),

    #[error("unknown header key '{0}'")]
    UnknownHeaderKey(String),

    #[error("duplicate header key '{0}'")]
    DuplicateHeader(String),

    #[error("invalid value '{value}' for header '{key}'")]
    InvalidHeaderValue { key: String, value: String },
}

/// Why a marker cell's region could not be inferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerAmbiguity {
    /// No 4-neighbor carries a region id.
    NoRegionNeighbors,
    /// Two or more region ids tie for the most frequent neighbor.
    Tie,
}

impl fmt::Display for MarkerAmbiguity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkerAmbiguity::NoRegionNeighbors => f.write_str("no region neighbors"),
            MarkerAmbiguity::Tie => f.write_str("neighbor majority tie"),
        }
    }
}

/// A rectangular grid of terrain cells with agent, goal, and optional
/// movable-block overlays.
///
/// Terrain under the agent and goal markers is the region each marker
/// inherited at parse time; terrain under block cells is the declared
/// block region for cells that held `B` in the source file, and whatever
/// the block currently covers after pushes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    agent_pos: Pos,
    goal_pos: Pos,
    block_cells: Vec<Pos>,
    block_region: Option<RegionId>,
}

impl GridMap {
    /// Construct a grid from terrain plus overlay positions, validating the
    /// structural invariants. `cells` is row-major with `width * height`
    /// entries; the agent and goal positions must sit on region terrain.
    pub fn new(
        width: usize,
        height: usize,
        cells: Vec<Cell>,
        agent_pos: Pos,
        goal_pos: Pos,
        block_cells: Vec<Pos>,
        block_region: Option<RegionId>,
    ) -> Result<Self, GridError> {
        if width == 0 || height == 0 || cells.is_empty() {
            return Err(GridError::EmptyGrid);
        }
        if cells.len() != width * height {
            return Err(GridError::RaggedRows {
                row: cells.len() / width,
                expected: width,
                got: cells.len() % width,
            });
        }
        let mut block_cells = block_cells;
        block_cells.sort();
        block_cells.dedup();
        match (&block_cells.is_empty(), block_region) {
            (false, None) => return Err(GridError::MissingBlockRegion),
            (true, Some(_)) => return Err(GridError::BlockRegionWithoutBlock),
            _ => {}
        }
        if !is_straight_segment(&block_cells) {
            return Err(GridError::NonContiguousBlock);
        }
        let grid = Self { width, height, cells, agent_pos, goal_pos, block_cells, block_region };
        for &pos in [grid.agent_pos, grid.goal_pos].iter() {
            match grid.terrain(pos) {
                Some(Cell::Region(_)) => {}
                _ => return Err(GridError::InvalidMarkerPosition(pos)),
            }
        }
        for &pos in &grid.block_cells {
            if grid.terrain(pos).is_none() {
                return Err(GridError::InvalidMarkerPosition(pos));
            }
        }
        if grid.agent_pos == grid.goal_pos
            || grid.block_cells.contains(&grid.agent_pos)
            || grid.block_cells.contains(&grid.goal_pos)
        {
            return Err(GridError::OverlappingMarkers);
        }
        Ok(grid)
    }

    /// Parse the token grid of a grid file (headers already stripped).
    /// `block_region` comes from the `#block_region` sidecar header.
    pub fn parse_tokens(text: &str, block_region: Option<RegionId>) -> Result<Self, GridError> {
        let rows: Vec<Vec<&str>> = text
            .lines()
            .map(|l| l.split_whitespace().collect::<Vec<_>>())
            .filter(|tokens| !tokens.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(GridError::EmptyGrid);
        }
        let width = rows[0].len();
        let height = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(GridError::RaggedRows { row: i, expected: width, got: row.len() });
            }
        }

        #[derive(Clone, Copy, PartialEq)]
        enum Raw {
            Wall,
            Pit,
            Agent,
            Goal,
            Block,
            Region(RegionId),
        }

        let mut raw = Vec::with_capacity(width * height);
        for (r, row) in rows.iter().enumerate() {
            for (c, token) in row.iter().enumerate() {
                let cell = match *token {
                    "W" => Raw::Wall,
                    "P" => Raw::Pit,
                    "A" => Raw::Agent,
                    "G" => Raw::Goal,
                    "B" => Raw::Block,
                    t => match t.parse::<u32>().ok().and_then(|n| RegionId::new(n).ok()) {
                        Some(id) => Raw::Region(id),
                        None => {
                            return Err(GridError::UnknownToken {
                                token: t.to_string(),
                                row: r,
                                col: c,
                            })
                        }
                    },
                };
                raw.push(cell);
            }
        }

        let positions_of = |kind: Raw| -> Vec<Pos> {
            raw.iter()
                .enumerate()
                .filter(|(_, &c)| c == kind)
                .map(|(i, _)| Pos::new(i / width, i % width))
                .collect()
        };
        let agents = positions_of(Raw::Agent);
        if agents.len() != 1 {
            return Err(GridError::MarkerCount { marker: 'A', count: agents.len() });
        }
        let goals = positions_of(Raw::Goal);
        if goals.len() != 1 {
            return Err(GridError::MarkerCount { marker: 'G', count: goals.len() });
        }
        let block_cells = positions_of(Raw::Block);
        if !block_cells.is_empty() && block_region.is_none() {
            return Err(GridError::MissingBlockRegion);
        }

        // Resolve each marker's underlying region as the strictly most
        // frequent region id among its 4-neighbors. Block neighbors count
        // as the declared block region; the other marker does not count.
        let neighbor_region = |pos: Pos| -> Option<RegionId> {
            match raw[pos.row * width + pos.col] {
                Raw::Region(id) => Some(id),
                Raw::Block => block_region,
                _ => None,
            }
        };
        let resolve_marker = |pos: Pos, marker: char| -> Result<RegionId, GridError> {
            let mut counts: BTreeMap<RegionId, usize> = BTreeMap::new();
            for dir in [Direction::N, Direction::S, Direction::E, Direction::W] {
                if let Some(n) = pos.step(dir, height, width) {
                    if let Some(id) = neighbor_region(n) {
                        *counts.entry(id).or_insert(0) += 1;
                    }
                }
            }
            let best = counts.iter().max_by_key(|(_, &n)| n);
            match best {
                None => Err(GridError::AmbiguousMarkerRegion {
                    marker,
                    pos,
                    reason: MarkerAmbiguity::NoRegionNeighbors,
                }),
                Some((&id, &n)) => {
                    let ties = counts.values().filter(|&&v| v == n).count();
                    if ties > 1 {
                        Err(GridError::AmbiguousMarkerRegion {
                            marker,
                            pos,
                            reason: MarkerAmbiguity::Tie,
                        })
                    } else {
                        Ok(id)
                    }
                }
            }
        };
        let agent_pos = agents[0];
        let goal_pos = goals[0];
        let agent_region = resolve_marker(agent_pos, 'A')?;
        let goal_region = resolve_marker(goal_pos, 'G')?;

        let cells: Vec<Cell> = raw
            .iter()
            .enumerate()
            .map(|(i, &c)| match c {
                Raw::Wall => Cell::Wall,
                Raw::Pit => Cell::Pit,
                Raw::Region(id) => Cell::Region(id),
                Raw::Agent => Cell::Region(agent_region),
                Raw::Goal => Cell::Region(goal_region),
                Raw::Block => Cell::Region(block_region.expect("checked above")),
                #[allow(unreachable_patterns)]
                _ => unreachable!("index {i}"),
            })
            .collect();

        Self::new(width, height, cells, agent_pos, goal_pos, block_cells, block_region)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Terrain at `pos`, ignoring overlays.
    pub fn terrain(&self, pos: Pos) -> Option<Cell> {
        (pos.row < self.height && pos.col < self.width)
            .then(|| self.cells[pos.row * self.width + pos.col])
    }

    pub fn agent_pos(&self) -> Pos {
        self.agent_pos
    }

    pub fn goal_pos(&self) -> Pos {
        self.goal_pos
    }

    pub fn block_cells(&self) -> &[Pos] {
        &self.block_cells
    }

    pub fn block_region(&self) -> Option<RegionId> {
        self.block_region
    }

    pub fn has_block(&self) -> bool {
        !self.block_cells.is_empty()
    }

    pub fn is_block_cell(&self, pos: Pos) -> bool {
        self.block_cells.contains(&pos)
    }

    /// Underlying regions of the agent and goal markers.
    pub fn marker_regions(&self) -> (RegionId, RegionId) {
        let r = |pos: Pos| match self.terrain(pos) {
            Some(Cell::Region(id)) => id,
            _ => unreachable!("markers always sit on region terrain"),
        };
        (r(self.agent_pos), r(self.goal_pos))
    }

    /// The region a cell contributes to adjacency and traces.
    ///
    /// Region cells (including the cells under the agent and goal markers)
    /// use their region id. Block cells resting on region terrain use the
    /// block region; block cells resting in the pit are bridge surface and
    /// carry no region. Walls and pits have none.
    pub fn effective_region(&self, pos: Pos) -> Option<RegionId> {
        if self.is_block_cell(pos) {
            return match self.terrain(pos)? {
                Cell::Pit => None,
                _ => self.block_region,
            };
        }
        self.terrain(pos)?.region()
    }

    /// Block cells currently resting on pit terrain.
    pub fn block_cells_in_pit(&self) -> Vec<Pos> {
        self.block_cells
            .iter()
            .copied()
            .filter(|&p| self.terrain(p) == Some(Cell::Pit))
            .collect()
    }

    /// True when the block exists and every block cell rests on pit terrain.
    pub fn block_fully_in_pit(&self) -> bool {
        self.has_block() && self.block_cells.iter().all(|&p| self.terrain(p) == Some(Cell::Pit))
    }

    /// Positions the agent can occupy: region terrain not covered by the block.
    pub fn is_walkable(&self, pos: Pos) -> bool {
        !self.is_block_cell(pos) && matches!(self.terrain(pos), Some(Cell::Region(_)))
    }

    pub(crate) fn with_overlay(&self, agent_pos: Pos, block_cells: Vec<Pos>) -> GridMap {
        let mut block_cells = block_cells;
        block_cells.sort();
        GridMap { agent_pos, block_cells, ..self.clone() }
    }

    /// Render the token grid (headers not included) with aligned columns.
    pub fn render_tokens(&self) -> String {
        let token = |pos: Pos| -> String {
            if pos == self.agent_pos {
                "A".to_string()
            } else if pos == self.goal_pos {
                "G".to_string()
            } else if self.is_block_cell(pos) {
                "B".to_string()
            } else {
                match self.terrain(pos).expect("in bounds") {
                    Cell::Wall => "W".to_string(),
                    Cell::Pit => "P".to_string(),
                    Cell::Region(id) => id.to_string(),
                }
            }
        };
        let mut tokens = Vec::with_capacity(self.height);
        let mut max_len = 1;
        for row in 0..self.height {
            let mut line = Vec::with_capacity(self.width);
            for col in 0..self.width {
                let t = token(Pos::new(row, col));
                max_len = max_len.max(t.len());
                line.push(t);
            }
            tokens.push(line);
        }
        let mut out = String::new();
        for line in &tokens {
            for (i, t) in line.iter().enumerate() {
                if i + 1 == line.len() {
                    out.push_str(t);
                } else {
                    out.push_str(&format!("{t:<width$} ", width = max_len));
                }
            }
            out.push('\n');
        }
        out
    }

    /// Serialize to grid-file text, including the `#block_region` header
    /// when a block is present. `parse` of the result reproduces `self`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if let Some(b) = self.block_region {
            out.push_str(&format!("#block_region: {b}\n"));
        }
        out.push_str(&self.render_tokens());
        out
    }

    /// Parse full grid-file content: optional `#key: value` headers
    /// followed by the token grid.
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let file = GridFile::parse(text)?;
        Ok(file.grid)
    }
}

fn is_straight_segment(cells: &[Pos]) -> bool {
    match cells {
        [] | [_] => true,
        _ => {
            let same_row = cells.iter().all(|p| p.row == cells[0].row);
            let same_col = cells.iter().all(|p| p.col == cells[0].col);
            // cells are sorted
            let contiguous = |coords: Vec<usize>| coords.windows(2).all(|w| w[1] == w[0] + 1);
            (same_row && contiguous(cells.iter().map(|p| p.col).collect()))
                || (same_col && contiguous(cells.iter().map(|p| p.row).collect()))
        }
    }
}

/// Header metadata plus the parsed grid of one grid file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridFile {
    pub environment: Option<String>,
    pub partition: Option<String>,
    pub phase: Option<Phase>,
    pub grid: GridMap,
}

impl GridFile {
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let mut environment = None;
        let mut partition = None;
        let mut phase = None;
        let mut block_region = None;
        let mut body = String::new();
        for line in text.lines() {
            let trimmed = line.trim();
            if let Some(header) = trimmed.strip_prefix('#') {
                let (key, value) = header.split_once(':').ok_or_else(|| {
                    GridError::InvalidHeaderValue {
                        key: header.to_string(),
                        value: String::new(),
                    }
                })?;
                let key = key.trim();
                let value = value.trim().to_string();
                if value.is_empty() {
                    return Err(GridError::InvalidHeaderValue {
                        key: key.to_string(),
                        value,
                    });
                }
                let slot: &mut Option<String> = match key {
                    "environment" => &mut environment,
                    "partition" => &mut partition,
                    "phase" => {
                        if phase.is_some() {
                            return Err(GridError::DuplicateHeader(key.to_string()));
                        }
                        phase = Some(value.parse::<Phase>().map_err(|_| {
                            GridError::InvalidHeaderValue { key: key.to_string(), value }
                        })?);
                        continue;
                    }
                    "block_region" => {
                        if block_region.is_some() {
                            return Err(GridError::DuplicateHeader(key.to_string()));
                        }
                        let id = value
                            .parse::<u32>()
                            .ok()
                            .and_then(|n| RegionId::new(n).ok())
                            .ok_or_else(|| GridError::InvalidHeaderValue {
                                key: key.to_string(),
                                value,
                            })?;
                        block_region = Some(id);
                        continue;
                    }
                    other => return Err(GridError::UnknownHeaderKey(other.to_string())),
                };
                if slot.is_some() {
                    return Err(GridError::DuplicateHeader(key.to_string()));
                }
                *slot = Some(value);
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let grid = GridMap::parse_tokens(&body, block_region)?;
        Ok(Self { environment, partition, phase, grid })
    }
}

/// Task phase of a scenario. Tasks without a block split are `Whole`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    #[default]
    Whole,
    BeforeBlock,
    AfterBlock,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Whole => "whole",
            Phase::BeforeBlock => "before-block",
            Phase::AfterBlock => "after-block",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "whole" => Ok(Phase::Whole),
            "before-block" => Ok(Phase::BeforeBlock),
            "after-block" => Ok(Phase::AfterBlock),
            other => {
                Err(format!("unknown phase '{other}' (whole, before-block, after-block)"))
            }
        }
    }
}

/// Errors from assembling scenarios.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("grid file is missing the '{0}' header required for a scenario")]
    MissingHeader(&'static str),

    #[error("declared adjacency is not symmetric: {0} lists {1} but not vice versa")]
    AsymmetricDeclaredAdjacency(RegionId, RegionId),

    #[error("declared adjacency lists region {0} as its own neighbor")]
    SelfLoopDeclaredAdjacency(RegionId),
}

/// A grid plus the labels that identify it in an evaluation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub environment: String,
    pub partition_id: String,
    pub phase: Phase,
    pub grid: GridMap,
    pub declared_adjacency: Option<BTreeMap<RegionId, Vec<RegionId>>>,
}

impl Scenario {
    /// Build a scenario from parsed grid-file content; the `environment`
    /// and `partition` headers are required.
    pub fn from_grid_file(file: GridFile) -> Result<Self, ScenarioError> {
        let environment = file.environment.ok_or(ScenarioError::MissingHeader("environment"))?;
        let partition_id = file.partition.ok_or(ScenarioError::MissingHeader("partition"))?;
        Ok(Self {
            environment,
            partition_id,
            phase: file.phase.unwrap_or_default(),
            grid: file.grid,
            declared_adjacency: None,
        })
    }

    /// Attach a declared adjacency list, validating symmetry and
    /// irreflexivity.
    pub fn with_declared_adjacency(
        mut self,
        declared: BTreeMap<RegionId, Vec<RegionId>>,
    ) -> Result<Self, ScenarioError> {
        for (&r, neighbors) in &declared {
            for &s in neighbors {
                if s == r {
                    return Err(ScenarioError::SelfLoopDeclaredAdjacency(r));
                }
                if !declared.get(&s).is_some_and(|back| back.contains(&r)) {
                    return Err(ScenarioError::AsymmetricDeclaredAdjacency(r, s));
                }
            }
        }
        self.declared_adjacency = Some(declared);
        Ok(self)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("#environment: {}\n", self.environment));
        out.push_str(&format!("#partition: {}\n", self.partition_id));
        if self.phase != Phase::Whole {
            out.push_str(&format!("#phase: {}\n", self.phase));
        }
        out.push_str(&self.grid.serialize());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;

    fn strip() -> GridMap {
        GridMap::parse("A 1 1 2 G").unwrap()
    }

    #[test]
    fn parse_rejects_grid_without_markers() {
        let err = GridMap::parse("1 2").unwrap_err();
        assert_eq!(err, GridError::MarkerCount { marker: 'A', count: 0 });
    }

    #[test]
    fn parse_minimal_strip() {
        let g = strip();
        assert_eq!((g.width(), g.height()), (5, 1));
        assert_eq!(g.agent_pos(), Pos::new(0, 0));
        assert_eq!(g.goal_pos(), Pos::new(0, 4));
        let (a, b) = g.marker_regions();
        assert_eq!((a.get(), b.get()), (1, 2));
    }

    #[test]
    fn strip_round_trips() {
        let g = strip();
        assert_eq!(GridMap::parse(&g.serialize()).unwrap(), g);
    }

    #[test]
    fn parse_rejects_ragged_rows() {
        let err = GridMap::parse("A 1 2\n1 G").unwrap_err();
        assert_eq!(err, GridError::RaggedRows { row: 1, expected: 3, got: 2 });
    }

    #[test]
    fn parse_rejects_unknown_token() {
        let err = GridMap::parse("A 1 X G").unwrap_err();
        assert!(matches!(err, GridError::UnknownToken { ref token, .. } if token == "X"));
        let err = GridMap::parse("A 1 0 G").unwrap_err();
        assert!(matches!(err, GridError::UnknownToken { ref token, .. } if token == "0"));
    }

    #[test]
    fn parse_rejects_duplicate_markers() {
        let err = GridMap::parse("A 1 A 2 G").unwrap_err();
        assert_eq!(err, GridError::MarkerCount { marker: 'A', count: 2 });
        let err = GridMap::parse("A 1 2 G G").unwrap_err();
        assert_eq!(err, GridError::MarkerCount { marker: 'G', count: 2 });
    }

    #[test]
    fn parse_rejects_marker_majority_tie() {
        // A between regions 1 and 2: one neighbor each.
        let err = GridMap::parse("1 A 2\n1 W G").unwrap_err();
        assert!(matches!(
            err,
            GridError::AmbiguousMarkerRegion { marker: 'A', reason: MarkerAmbiguity::Tie, .. }
        ));
    }

    #[test]
    fn parse_rejects_marker_with_no_region_neighbors() {
        let err = GridMap::parse("A W 1 G").unwrap_err();
        assert!(matches!(
            err,
            GridError::AmbiguousMarkerRegion {
                marker: 'A',
                reason: MarkerAmbiguity::NoRegionNeighbors,
                ..
            }
        ));
    }

    #[test]
    fn parse_rejects_block_without_sidecar_region() {
        let err = GridMap::parse("A 1 B 2 G").unwrap_err();
        assert_eq!(err, GridError::MissingBlockRegion);
    }

    #[test]
    fn parse_rejects_non_contiguous_block() {
        let text = "#block_region: 3\nA 1 B 1 B 2 G";
        assert_eq!(GridMap::parse(text).unwrap_err(), GridError::NonContiguousBlock);
    }

    #[test]
    fn parse_rejects_diagonal_block() {
        let text = "#block_region: 3\nA 1 B 2\n1 2 2 B\n1 1 G 2";
        assert_eq!(GridMap::parse(text).unwrap_err(), GridError::NonContiguousBlock);
    }

    #[test]
    fn header_errors_are_distinct() {
        assert_eq!(
            GridMap::parse("#speed: 9\nA 1 G").unwrap_err(),
            GridError::UnknownHeaderKey("speed".to_string())
        );
        assert_eq!(
            GridFile::parse("#partition: IV\n#partition: II\nA 1 G").unwrap_err(),
            GridError::DuplicateHeader("partition".to_string())
        );
        assert!(matches!(
            GridMap::parse("#block_region: zero\nA 1 B G").unwrap_err(),
            GridError::InvalidHeaderValue { .. }
        ));
    }

    #[test]
    fn ant_maze_markers_resolve_to_printed_regions() {
        let g = GridMap::parse(assets::ANT_MAZE_P4_GRID).unwrap();
        assert_eq!((g.width(), g.height()), (13, 12));
        assert_eq!(g.agent_pos(), Pos::new(10, 1));
        assert_eq!(g.goal_pos(), Pos::new(2, 1));
        let (agent, goal) = g.marker_regions();
        assert_eq!((agent.get(), goal.get()), (5, 4));
        assert!(!g.has_block());
    }

    #[test]
    fn ant_fall_markers_and_block_match_printed_metadata() {
        let g = GridMap::parse(assets::ANT_FALL_P4_GRID).unwrap();
        assert_eq!((g.width(), g.height()), (15, 14));
        let (agent, goal) = g.marker_regions();
        assert_eq!((agent.get(), goal.get()), (1, 3));
        assert_eq!(g.block_cells(), &[Pos::new(7, 14), Pos::new(8, 14)]);
        assert_eq!(g.block_region().unwrap().get(), 8);
    }

    #[test]
    fn shipped_grids_round_trip() {
        for text in [assets::ANT_MAZE_P4_GRID, assets::ANT_FALL_P4_GRID] {
            let g = GridMap::parse(text).unwrap();
            assert_eq!(GridMap::parse(&g.serialize()).unwrap(), g);
        }
    }

    #[test]
    fn scenario_requires_environment_and_partition() {
        let file = GridFile::parse("A 1 G").unwrap();
        assert_eq!(
            Scenario::from_grid_file(file).unwrap_err(),
            ScenarioError::MissingHeader("environment")
        );
    }

    #[test]
    fn scenario_rejects_asymmetric_declared_adjacency() {
        let file = GridFile::parse("#environment: e\n#partition: I\nA 1 2 G").unwrap();
        let scenario = Scenario::from_grid_file(file).unwrap();
        let one = RegionId::new(1).unwrap();
        let two = RegionId::new(2).unwrap();
        let declared: BTreeMap<_, _> =
            [(one, vec![two]), (two, vec![])].into_iter().collect();
        assert_eq!(
            scenario.with_declared_adjacency(declared).unwrap_err(),
            ScenarioError::AsymmetricDeclaredAdjacency(one, two)
        );
    }
}
