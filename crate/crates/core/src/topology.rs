//! Region adjacency graphs: extraction from grids, verification against
//! declared lists, block-push dynamics, and pit bridging.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::grid::{Cell, Direction, GridMap, Pos};
use crate::region::RegionId;

/// Undirected adjacency over region ids, with bridge edges tracked
/// separately from terrain-derived edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegionGraph {
    adj: BTreeMap<RegionId, BTreeSet<RegionId>>,
    bridge_edges: BTreeSet<(RegionId, RegionId)>,
}

impl RegionGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build a graph from (region, neighbor-list) pairs, e.g. a declared
    /// adjacency mapping. Edges are symmetrized.
    pub fn from_adjacency<I, N>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (RegionId, N)>,
        N: IntoIterator<Item = RegionId>,
    {
        let mut graph = Self::new();
        for (region, neighbors) in pairs {
            graph.ensure_node(region);
            for n in neighbors {
                graph.add_edge(region, n);
            }
        }
        graph
    }

    pub fn ensure_node(&mut self, region: RegionId) {
        self.adj.entry(region).or_default();
    }

    pub fn add_edge(&mut self, a: RegionId, b: RegionId) {
        if a == b {
            return;
        }
        self.adj.entry(a).or_default().insert(b);
        self.adj.entry(b).or_default().insert(a);
    }

    pub fn add_bridge_edge(&mut self, a: RegionId, b: RegionId) {
        if a == b {
            return;
        }
        self.bridge_edges.insert(ordered(a, b));
        self.add_edge(a, b);
    }

    pub fn nodes(&self) -> impl Iterator<Item = RegionId> + '_ {
        self.adj.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, region: RegionId) -> impl Iterator<Item = RegionId> + '_ {
        self.adj.get(&region).into_iter().flatten().copied()
    }

    pub fn contains_edge(&self, a: RegionId, b: RegionId) -> bool {
        self.adj.get(&a).is_some_and(|ns| ns.contains(&b))
    }

    /// All edges as ordered pairs (low, high), ascending.
    pub fn edges(&self) -> Vec<(RegionId, RegionId)> {
        let mut edges: Vec<_> = self
            .adj
            .iter()
            .flat_map(|(&r, ns)| ns.iter().filter(move |&&s| r < s).map(move |&s| (r, s)))
            .collect();
        edges.sort();
        edges
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(|ns| ns.len()).sum::<usize>() / 2
    }

    pub fn bridge_edges(&self) -> &BTreeSet<(RegionId, RegionId)> {
        &self.bridge_edges
    }

    /// Adjacency as a plain sorted mapping (for rendering and JSON output).
    pub fn to_adjacency(&self) -> BTreeMap<RegionId, Vec<RegionId>> {
        self.adj
            .iter()
            .map(|(&r, ns)| (r, ns.iter().copied().collect()))
            .collect()
    }

    /// True when `from` and `to` are joined by terrain and bridge edges.
    pub fn connected(&self, from: RegionId, to: RegionId) -> bool {
        if from == to {
            return self.adj.contains_key(&from);
        }
        let mut seen = BTreeSet::from([from]);
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(r) = queue.pop_front() {
            for s in self.neighbors(r) {
                if s == to {
                    return true;
                }
                if seen.insert(s) {
                    queue.push_back(s);
                }
            }
        }
        false
    }

    /// Shortest region path from `from` to `to` by breadth-first search,
    /// expanding neighbors in ascending id order. Returns the full path
    /// including both endpoints, or None when unreachable.
    pub fn shortest_path(&self, from: RegionId, to: RegionId) -> Option<Vec<RegionId>> {
        if !self.adj.contains_key(&from) {
            return None;
        }
        if from == to {
            return Some(vec![from]);
        }
        let mut parent: BTreeMap<RegionId, RegionId> = BTreeMap::new();
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(r) = queue.pop_front() {
            for s in self.neighbors(r) {
                if s != from && !parent.contains_key(&s) {
                    parent.insert(s, r);
                    if s == to {
                        let mut path = vec![s];
                        let mut cur = s;
                        while let Some(&p) = parent.get(&cur) {
                            path.push(p);
                            cur = p;
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(s);
                }
            }
        }
        None
    }

    /// Compare against a declared adjacency mapping as edge sets.
    pub fn verify_against(&self, declared: &BTreeMap<RegionId, Vec<RegionId>>) -> AdjacencyDiff {
        let ours: BTreeSet<(RegionId, RegionId)> = self.edges().into_iter().collect();
        let mut theirs: BTreeSet<(RegionId, RegionId)> = BTreeSet::new();
        for (&r, ns) in declared {
            for &s in ns {
                theirs.insert(ordered(r, s));
            }
        }
        AdjacencyDiff {
            missing: theirs.difference(&ours).copied().collect(),
            extra: ours.difference(&theirs).copied().collect(),
        }
    }
}

fn ordered(a: RegionId, b: RegionId) -> (RegionId, RegionId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Edge-set difference between an extracted graph and a declared list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AdjacencyDiff {
    /// Declared edges the extracted graph lacks.
    pub missing: Vec<(RegionId, RegionId)>,
    /// Extracted edges the declaration lacks.
    pub extra: Vec<(RegionId, RegionId)>,
}

impl AdjacencyDiff {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }
}

impl std::fmt::Display for AdjacencyDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_empty() {
            return writeln!(f, "adjacency matches (no differences)");
        }
        for &(a, b) in &self.missing {
            writeln!(f, "missing {{{a}, {b}}}: declared but not extracted")?;
        }
        for &(a, b) in &self.extra {
            writeln!(f, "extra {{{a}, {b}}}: extracted but not declared")?;
        }
        Ok(())
    }
}

/// Derive region adjacency from 4-adjacent cell pairs with distinct
/// effective regions. Walls, pits, and in-pit block cells contribute
/// nothing.
pub fn extract_graph(grid: &GridMap) -> RegionGraph {
    let mut graph = RegionGraph::new();
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            let pos = Pos::new(row, col);
            let Some(r) = grid.effective_region(pos) else { continue };
            graph.ensure_node(r);
            // East and south neighbors cover every unordered pair once.
            for dir in [Direction::E, Direction::S] {
                if let Some(next) = pos.step(dir, grid.height(), grid.width()) {
                    if let Some(s) = grid.effective_region(next) {
                        if r != s {
                            graph.add_edge(r, s);
                        }
                    }
                }
            }
        }
    }
    graph
}

/// Errors from block pushes and bridging.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PushError {
    #[error("grid has no block")]
    NoBlock,

    #[error("agent at {agent} is not positioned to push the block {direction}")]
    AgentNotBehindBlock { agent: Pos, direction: Direction },

    #[error("push {direction} would move the block outside the grid")]
    BlockLeavesGrid { direction: Direction },

    #[error("push {direction} would move the block into a wall at {pos}")]
    BlockHitsWall { direction: Direction, pos: Pos },

    #[error("push {direction} would move the block onto the goal at {pos}")]
    BlockHitsGoal { direction: Direction, pos: Pos },

    #[error("agent cannot follow the push {direction}: {pos} is a pit")]
    AgentFallsIntoPit { direction: Direction, pos: Pos },

    #[error("bridge requires every block cell in the pit; {outside} of {total} are not")]
    BlockNotInPit { outside: usize, total: usize },
}

/// Push the block one cell in `direction`, the agent advancing into the
/// vacated cell. Returns the updated grid; terrain never changes, only
/// the agent and block overlays move.
pub fn push_block_step(grid: &GridMap, direction: Direction) -> Result<GridMap, PushError> {
    if !grid.has_block() {
        return Err(PushError::NoBlock);
    }
    let agent = grid.agent_pos();
    let target = agent
        .step(direction, grid.height(), grid.width())
        .filter(|&p| grid.is_block_cell(p))
        .ok_or(PushError::AgentNotBehindBlock { agent, direction })?;

    let mut moved = Vec::with_capacity(grid.block_cells().len());
    for &cell in grid.block_cells() {
        let dest = cell
            .step(direction, grid.height(), grid.width())
            .ok_or(PushError::BlockLeavesGrid { direction })?;
        if grid.is_block_cell(dest) {
            // Interior cell of the block; occupied by the block itself.
            moved.push(dest);
            continue;
        }
        match grid.terrain(dest) {
            Some(Cell::Wall) => return Err(PushError::BlockHitsWall { direction, pos: dest }),
            Some(_) if dest == grid.goal_pos() => {
                return Err(PushError::BlockHitsGoal { direction, pos: dest })
            }
            Some(_) => moved.push(dest),
            None => return Err(PushError::BlockLeavesGrid { direction }),
        }
    }
    if grid.terrain(target) == Some(Cell::Pit) {
        return Err(PushError::AgentFallsIntoPit { direction, pos: target });
    }
    Ok(grid.with_overlay(target, moved))
}

/// Add bridge edges for the fully-in-pit block: one edge per maximal
/// contiguous run of block cells, joining the effective regions of the
/// non-pit cells 4-adjacent to the run's two ends.
pub fn bridged_graph(grid: &GridMap, base: &RegionGraph) -> Result<RegionGraph, PushError> {
    if !grid.has_block() {
        return Err(PushError::NoBlock);
    }
    let in_pit = grid.block_cells_in_pit();
    if in_pit.len() != grid.block_cells().len() {
        return Err(PushError::BlockNotInPit {
            outside: grid.block_cells().len() - in_pit.len(),
            total: grid.block_cells().len(),
        });
    }

    // Block cells form one straight segment, so the run's ends are the
    // extreme cells along its axis and the bridge continues past them.
    let mut cells = in_pit;
    cells.sort();
    let (first, last) = (cells[0], cells[cells.len() - 1]);
    let axis_vertical = cells.len() == 1 || first.col == last.col;
    let (back, front) = if axis_vertical {
        (Direction::N, Direction::S)
    } else {
        (Direction::W, Direction::E)
    };

    let end_region = |end: Pos, outward: Direction| -> Option<RegionId> {
        let p = end.step(outward, grid.height(), grid.width())?;
        grid.effective_region(p)
    };
    let mut graph = base.clone();
    if let (Some(a), Some(b)) = (end_region(first, back), end_region(last, front)) {
        graph.add_bridge_edge(a, b);
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;

    fn maze() -> GridMap {
        GridMap::parse(assets::ANT_MAZE_P4_GRID).unwrap()
    }

    fn fall() -> GridMap {
        GridMap::parse(assets::ANT_FALL_P4_GRID).unwrap()
    }

    fn declared(json: &str) -> BTreeMap<RegionId, Vec<RegionId>> {
        serde_json::from_str::<BTreeMap<String, Vec<u32>>>(json)
            .unwrap()
            .into_iter()
            .map(|(k, v)| {
                (
                    RegionId::new(k.parse().unwrap()).unwrap(),
                    v.into_iter().map(|n| RegionId::new(n).unwrap()).collect(),
                )
            })
            .collect()
    }

    fn rid(n: u32) -> RegionId {
        RegionId::new(n).unwrap()
    }

    #[test]
    fn strip_has_single_edge() {
        let g = GridMap::parse("A 1 1 2 G").unwrap();
        let graph = extract_graph(&g);
        assert_eq!(graph.node_count(), 2);
        assert_eq!(graph.edges(), vec![(rid(1), rid(2))]);
    }

    #[test]
    fn ant_maze_adjacency_matches_printed_list() {
        let graph = extract_graph(&maze());
        assert_eq!(graph.node_count(), 23);
        let diff = graph.verify_against(&declared(assets::ANT_MAZE_P4_ADJACENCY));
        assert!(diff.is_empty(), "diff: {diff}");
        assert_eq!(
            graph.neighbors(rid(4)).collect::<Vec<_>>(),
            vec![rid(3)]
        );
        assert_eq!(
            graph.neighbors(rid(11)).collect::<Vec<_>>(),
            vec![rid(1), rid(5), rid(6), rid(17)]
        );
    }

    #[test]
    fn ant_fall_adjacency_matches_printed_list() {
        let graph = extract_graph(&fall());
        assert_eq!(graph.node_count(), 25);
        let diff = graph.verify_against(&declared(assets::ANT_FALL_P4_ADJACENCY));
        assert!(diff.is_empty(), "diff: {diff}");
        assert_eq!(
            graph.neighbors(rid(8)).collect::<Vec<_>>(),
            vec![rid(7), rid(10), rid(12), rid(13)]
        );
    }

    #[test]
    fn verify_reports_injected_edge_as_extra() {
        let graph = extract_graph(&maze());
        let mut declared = declared(assets::ANT_MAZE_P4_ADJACENCY);
        declared.get_mut(&rid(4)).unwrap().push(rid(5));
        declared.get_mut(&rid(5)).unwrap().push(rid(4));
        let diff = graph.verify_against(&declared);
        assert_eq!(diff.missing, vec![(rid(4), rid(5))]);
        assert!(diff.extra.is_empty());
    }

    #[test]
    fn single_push_north_advances_block_and_agent() {
        // Stand the agent just south of the block, then push.
        let g = fall();
        let g = g.with_overlay(Pos::new(9, 14), g.block_cells().to_vec());
        let pushed = push_block_step(&g, Direction::N).unwrap();
        assert_eq!(pushed.block_cells(), &[Pos::new(6, 14), Pos::new(7, 14)]);
        assert_eq!(pushed.agent_pos(), Pos::new(8, 14));
        // The vacated cell reads as the block's home region again.
        assert_eq!(pushed.effective_region(Pos::new(8, 14)), Some(rid(8)));
    }

    #[test]
    fn four_pushes_fill_the_pit() {
        let g = fall();
        let mut g = g.with_overlay(Pos::new(9, 14), g.block_cells().to_vec());
        for _ in 0..4 {
            assert!(!g.block_fully_in_pit());
            g = push_block_step(&g, Direction::N).unwrap();
        }
        assert_eq!(g.block_cells(), &[Pos::new(3, 14), Pos::new(4, 14)]);
        assert!(g.block_fully_in_pit());
        assert_eq!(g.agent_pos(), Pos::new(5, 14));
    }

    #[test]
    fn push_into_wall_and_off_grid_fail() {
        let g = fall();
        let g = g.with_overlay(Pos::new(7, 13), g.block_cells().to_vec());
        let err = push_block_step(&g, Direction::E).unwrap_err();
        assert_eq!(err, PushError::BlockLeavesGrid { direction: Direction::E });

        let text = "#block_region: 1\nA B W\n1 1 G";
        let g = GridMap::parse(text).unwrap();
        let err = push_block_step(&g, Direction::E).unwrap_err();
        assert_eq!(
            err,
            PushError::BlockHitsWall { direction: Direction::E, pos: Pos::new(0, 2) }
        );
    }

    #[test]
    fn push_requires_agent_behind_block() {
        let g = fall(); // agent far away at (12,2)
        let err = push_block_step(&g, Direction::N).unwrap_err();
        assert!(matches!(err, PushError::AgentNotBehindBlock { .. }));
    }

    #[test]
    fn bridge_connects_pit_run_ends() {
        let g = fall();
        let mut g = g.with_overlay(Pos::new(9, 14), g.block_cells().to_vec());
        let base = extract_graph(&g);
        assert!(bridged_graph(&g, &base).is_err(), "block not yet in pit");
        for _ in 0..4 {
            g = push_block_step(&g, Direction::N).unwrap();
        }
        let bridged = bridged_graph(&g, &base).unwrap();
        assert_eq!(
            bridged.bridge_edges().iter().copied().collect::<Vec<_>>(),
            vec![(rid(9), rid(23))]
        );
        // Terrain edges are preserved.
        for (a, b) in base.edges() {
            assert!(bridged.contains_edge(a, b));
        }
        assert_eq!(bridged.edge_count(), base.edge_count() + 1);
    }

    #[test]
    fn pit_separates_until_bridged() {
        let g = fall();
        let base = extract_graph(&g);
        assert!(!base.connected(rid(1), rid(3)));

        let mut g = g.with_overlay(Pos::new(9, 14), g.block_cells().to_vec());
        for _ in 0..4 {
            g = push_block_step(&g, Direction::N).unwrap();
        }
        let bridged = bridged_graph(&g, &base).unwrap();
        assert!(bridged.connected(rid(1), rid(3)));
    }

    #[test]
    fn bfs_expands_lowest_ids_first() {
        let graph = extract_graph(&maze());
        let path = graph.shortest_path(rid(5), rid(4)).unwrap();
        assert_eq!(
            path.iter().map(|r| r.get()).collect::<Vec<_>>(),
            vec![5, 6, 1, 14, 15, 20, 19, 3, 4]
        );
        assert!(graph.shortest_path(rid(5), rid(5)).unwrap().len() == 1);
    }

    #[test]
    fn in_pit_block_cells_have_no_region() {
        let g = fall();
        let mut g = g.with_overlay(Pos::new(9, 14), g.block_cells().to_vec());
        for _ in 0..4 {
            g = push_block_step(&g, Direction::N).unwrap();
        }
        assert_eq!(g.effective_region(Pos::new(3, 14)), None);
        assert_eq!(g.effective_region(Pos::new(4, 14)), None);
        // The graph no longer sees the block region at the pit cells but
        // region 8 persists via its home cells.
        let after = extract_graph(&g);
        assert!(after.nodes().any(|r| r == rid(8)));
    }
}
