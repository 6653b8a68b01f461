//! Ground-truth generation: compile structured directive programs into
//! region traversal sequences by walking the agent cell-by-cell, and
//! validate traces against a region graph.
//!
//! Directive programs are the structured counterpart of the corpus
//! instructions. Free-text English is deliberately not parsed here —
//! interpreting it is the job of the model under evaluation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, Direction, GridMap, Pos, Scenario};
use crate::region::{RegionId, RegionTrace, TraceError};
use crate::topology::{self, PushError, RegionGraph};

/// Which side of the movement direction a condition refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Front,
}

impl Side {
    /// Absolute direction of this side while moving in `heading`.
    pub fn absolute(self, heading: Direction) -> Direction {
        match self {
            Side::Front => heading,
            Side::Left => heading.left(),
            Side::Right => heading.right(),
        }
    }
}

/// Terrain kind an obstacle condition refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    Wall,
    Pit,
}

impl ObstacleKind {
    fn matches(self, cell: Cell) -> bool {
        matches!(
            (self, cell),
            (ObstacleKind::Wall, Cell::Wall) | (ObstacleKind::Pit, Cell::Pit)
        )
    }
}

/// Stop condition of a Move directive, checked before every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Condition {
    /// The next cell is a wall, a pit, a block cell, or off the grid.
    Blocked,
    /// The agent has moved strictly beyond the named obstacle's extent.
    PastObstacle { side: Side, obstacle: ObstacleKind },
    /// The agent's current region equals the given region.
    ReachRegion { region: RegionId },
    /// The agent's current region equals the goal's region.
    ReachGoal,
    /// The next cell is a block cell.
    AlignedWithBlock,
}

/// One step of a directive program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Directive {
    Move { direction: Direction, until: Condition },
    PushBlockIntoPit { direction: Direction },
    CrossBridge,
    Stop,
}

/// Errors raised while simulating a directive program.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("program is empty")]
    EmptyProgram,

    #[error("directive {index}: movement {direction} blocked at {pos} before the condition was met")]
    MovementBlocked { index: usize, direction: Direction, pos: Pos },

    #[error("directive {index}: no {side:?}-side {obstacle:?} component exists from {pos}")]
    NoObstacle { index: usize, side: Side, obstacle: ObstacleKind, pos: Pos },

    #[error("directive {index}: push requires a block in the scenario")]
    PushWithoutBlock { index: usize },

    #[error("directive {index}: agent at {pos} is not aligned with the block for a {direction} push")]
    UnalignedPush { index: usize, pos: Pos, direction: Direction },

    #[error("directive {index}: push failed before the block filled the pit: {source}")]
    PushFailed {
        index: usize,
        #[source]
        source: PushError,
    },

    #[error("directive {index}: cross-bridge requires the block fully in the pit")]
    NoBridge { index: usize },

    #[error("directive {index}: agent at {pos} is not at a bridge end")]
    NotAtBridgeEnd { index: usize, pos: Pos },

    #[error("directive {index}: the far side of the bridge is not walkable")]
    BridgeDeadEnd { index: usize },

    #[error("trace construction failed: {0}")]
    Trace(#[from] TraceError),
}

/// Simulate `program` on the scenario's grid, returning the region trace.
pub fn simulate(scenario: &Scenario, program: &[Directive]) -> Result<RegionTrace, SimError> {
    simulate_full(scenario, program).map(|(trace, _)| trace)
}

/// Simulate and also return the final grid (agent and block positions
/// after the last directive).
pub fn simulate_full(
    scenario: &Scenario,
    program: &[Directive],
) -> Result<(RegionTrace, GridMap), SimError> {
    if program.is_empty() {
        return Err(SimError::EmptyProgram);
    }
    let mut grid = scenario.grid.clone();
    let mut visited: Vec<RegionId> = Vec::new();
    let start = grid
        .effective_region(grid.agent_pos())
        .expect("agent starts on region terrain");
    visited.push(start);

    for (index, directive) in program.iter().copied().enumerate() {
        match directive {
            Directive::Stop => break,
            Directive::Move { direction, until } => {
                run_move(&mut grid, &mut visited, index, direction, until)?;
            }
            Directive::PushBlockIntoPit { direction } => {
                run_push(&mut grid, &mut visited, index, direction)?;
            }
            Directive::CrossBridge => {
                run_cross(&mut grid, &mut visited, index)?;
            }
        }
    }
    let trace = RegionTrace::collapse(visited)?;
    Ok((trace, grid))
}

fn record(grid: &GridMap, visited: &mut Vec<RegionId>) {
    if let Some(r) = grid.effective_region(grid.agent_pos()) {
        visited.push(r);
    }
}

fn run_move(
    grid: &mut GridMap,
    visited: &mut Vec<RegionId>,
    index: usize,
    direction: Direction,
    until: Condition,
) -> Result<(), SimError> {
    // PastObstacle picks its target component once, from the starting cell.
    let past_target = match until {
        Condition::PastObstacle { side, obstacle } => Some(
            nearest_obstacle_component(grid, grid.agent_pos(), direction, side, obstacle)
                .ok_or_else(|| SimError::NoObstacle {
                    index,
                    side,
                    obstacle,
                    pos: grid.agent_pos(),
                })?,
        ),
        _ => None,
    };

    loop {
        let pos = grid.agent_pos();
        let next = pos.step(direction, grid.height(), grid.width());
        let next_open = next.is_some_and(|p| grid.is_walkable(p));

        let satisfied = match until {
            Condition::Blocked => !next_open,
            Condition::AlignedWithBlock => next.is_some_and(|p| grid.is_block_cell(p)),
            Condition::ReachRegion { region } => grid.effective_region(pos) == Some(region),
            Condition::ReachGoal => {
                let goal_region = grid.marker_regions().1;
                grid.effective_region(pos) == Some(goal_region)
            }
            Condition::PastObstacle { .. } => {
                past_extent(pos, direction, past_target.as_ref().expect("resolved above"))
            }
        };
        if satisfied {
            return Ok(());
        }
        if !next_open {
            return Err(SimError::MovementBlocked { index, direction, pos });
        }
        *grid = grid.with_overlay(next.expect("open cell exists"), grid.block_cells().to_vec());
        record(grid, visited);
    }
}

/// Bounding extent of one obstacle component.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Extent {
    min_row: usize,
    max_row: usize,
    min_col: usize,
    max_col: usize,
}

/// True once `pos` lies strictly beyond `extent` along `direction`.
fn past_extent(pos: Pos, direction: Direction, extent: &Extent) -> bool {
    match direction {
        Direction::N => pos.row < extent.min_row,
        Direction::S => pos.row > extent.max_row,
        Direction::W => pos.col < extent.min_col,
        Direction::E => pos.col > extent.max_col,
    }
}

/// Find the obstacle component nearest to `from` (Manhattan distance to
/// its closest cell, ties broken by least (row, col) cell) that has at
/// least one cell in the half-plane on the agent's `side` while heading
/// `direction`.
fn nearest_obstacle_component(
    grid: &GridMap,
    from: Pos,
    direction: Direction,
    side: Side,
    obstacle: ObstacleKind,
) -> Option<Extent> {
    let side_dir = side.absolute(direction);
    let in_half_plane = |p: Pos| -> bool {
        match side_dir {
            Direction::N => p.row < from.row,
            Direction::S => p.row > from.row,
            Direction::W => p.col < from.col,
            Direction::E => p.col > from.col,
        }
    };

    let (h, w) = (grid.height(), grid.width());
    let mut seen = vec![false; h * w];
    let mut best: Option<(usize, Pos, Extent)> = None;
    for row in 0..h {
        for col in 0..w {
            let start = Pos::new(row, col);
            if seen[row * w + col] || !obstacle.matches(grid.terrain(start).expect("in bounds")) {
                continue;
            }
            // Flood-fill one component, tracking its extent, the least
            // cell, the closest distance, and half-plane membership.
            let mut extent =
                Extent { min_row: row, max_row: row, min_col: col, max_col: col };
            let mut least = start;
            let mut dist = usize::MAX;
            let mut on_side = false;
            let mut stack = vec![start];
            seen[row * w + col] = true;
            while let Some(p) = stack.pop() {
                extent.min_row = extent.min_row.min(p.row);
                extent.max_row = extent.max_row.max(p.row);
                extent.min_col = extent.min_col.min(p.col);
                extent.max_col = extent.max_col.max(p.col);
                least = least.min(p);
                dist = dist.min(from.row.abs_diff(p.row) + from.col.abs_diff(p.col));
                on_side |= in_half_plane(p);
                for dir in [Direction::N, Direction::S, Direction::E, Direction::W] {
                    if let Some(n) = p.step(dir, h, w) {
                        if !seen[n.row * w + n.col]
                            && obstacle.matches(grid.terrain(n).expect("in bounds"))
                        {
                            seen[n.row * w + n.col] = true;
                            stack.push(n);
                        }
                    }
                }
            }
            if on_side
                && best
                    .as_ref()
                    .is_none_or(|(d, l, _)| (dist, least) < (*d, *l))
            {
                best = Some((dist, least, extent));
            }
        }
    }
    best.map(|(_, _, extent)| extent)
}

fn run_push(
    grid: &mut GridMap,
    visited: &mut Vec<RegionId>,
    index: usize,
    direction: Direction,
) -> Result<(), SimError> {
    if !grid.has_block() {
        return Err(SimError::PushWithoutBlock { index });
    }
    let aligned = grid
        .agent_pos()
        .step(direction, grid.height(), grid.width())
        .is_some_and(|p| grid.is_block_cell(p));
    if !aligned {
        return Err(SimError::UnalignedPush { index, pos: grid.agent_pos(), direction });
    }
    while !grid.block_fully_in_pit() {
        *grid = topology::push_block_step(grid, direction)
            .map_err(|source| SimError::PushFailed { index, source })?;
        record(grid, visited);
    }
    Ok(())
}

fn run_cross(grid: &mut GridMap, visited: &mut Vec<RegionId>, index: usize) -> Result<(), SimError> {
    if !grid.block_fully_in_pit() {
        return Err(SimError::NoBridge { index });
    }
    let cells = grid.block_cells(); // sorted straight segment
    let (first, last) = (cells[0], cells[cells.len() - 1]);
    let axis_vertical = cells.len() == 1 || first.col == last.col;
    let (back, front) = if axis_vertical {
        (Direction::N, Direction::S)
    } else {
        (Direction::W, Direction::E)
    };
    let near_end = |end: Pos, outward: Direction| {
        end.step(outward, grid.height(), grid.width()) == Some(grid.agent_pos())
    };
    // Cross from whichever end the agent stands at to the opposite one.
    let exit = if near_end(first, back) {
        last.step(front, grid.height(), grid.width())
    } else if near_end(last, front) {
        first.step(back, grid.height(), grid.width())
    } else {
        return Err(SimError::NotAtBridgeEnd { index, pos: grid.agent_pos() });
    };
    let exit = exit
        .filter(|&p| matches!(grid.terrain(p), Some(Cell::Region(_))))
        .ok_or(SimError::BridgeDeadEnd { index })?;
    *grid = grid.with_overlay(exit, grid.block_cells().to_vec());
    record(grid, visited);
    Ok(())
}

/// First trace step that is not an edge of `graph`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("trace step {from} -> {to} is not an edge of the region graph")]
pub struct TraceViolation {
    pub from: RegionId,
    pub to: RegionId,
}

/// Check that every consecutive pair of `trace` is an edge of `graph`
/// (bridge edges included).
pub fn validate_trace(trace: &RegionTrace, graph: &RegionGraph) -> Result<(), TraceViolation> {
    for (from, to) in trace.steps() {
        if !graph.contains_edge(from, to) {
            return Err(TraceViolation { from, to });
        }
    }
    Ok(())
}
