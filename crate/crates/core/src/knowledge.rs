//! Centralized knowledge shared by all agents: the discovered node set, what is
//! known about each wall slot, per-node visit counts, first visitors and
//! occupancy.
//!
//! All sets only grow. An edge resolved to open or wall stays resolved.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maze::{Coord, Direction, MazeGrid};

/// Agent index, also the agent's decision order within a time step.
pub type AgentId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKnowledge {
    Unknown,
    Open,
    Wall,
}

#[derive(Debug, Error, PartialEq)]
pub enum KnowledgeError {
    #[error("node {0} lies outside the grid")]
    OutOfGrid(Coord),
    #[error("two agents start on {0} with anti-collision active")]
    DuplicateStart(Coord),
    #[error("node {0} has not been visited")]
    NotVisited(Coord),
    #[error("node {0} has not been discovered")]
    NotDiscovered(Coord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeState {
    width: usize,
    height: usize,
    discovered: Vec<bool>,
    /// Discovered node indices in discovery order.
    discovered_order: Vec<usize>,
    edges: Vec<[EdgeKnowledge; 4]>,
    /// Bit set per known-open slot, same bit layout as wall masks.
    open_mask: Vec<u8>,
    coverage: Vec<u32>,
    first_visitor: Vec<Option<AgentId>>,
    /// Number of agents standing on each node.
    occupancy: Vec<u32>,
    visited: usize,
    clock: u64,
}

impl KnowledgeState {
    /// Places agents at `starts` (agent `p` at `starts[p]`), marks the starts
    /// visited and senses around them. With `known_maze` every node is
    /// discovered and every slot revealed up front; coverage is still only at
    /// the starts.
    pub fn init(maze: &MazeGrid, starts: &[Coord], known_maze: bool, anti_collision: bool) -> Result<Self, KnowledgeError> {
        let n = maze.node_count();
        let mut ks = KnowledgeState {
            width: maze.width(),
            height: maze.height(),
            discovered: vec![false; n],
            discovered_order: Vec::new(),
            edges: vec![[EdgeKnowledge::Unknown; 4]; n],
            open_mask: vec![0; n],
            coverage: vec![0; n],
            first_visitor: vec![None; n],
            occupancy: vec![0; n],
            visited: 0,
            clock: 0,
        };
        for (p, &s) in starts.iter().enumerate() {
            if !maze.contains(s) {
                return Err(KnowledgeError::OutOfGrid(s));
            }
            if anti_collision && starts[..p].contains(&s) {
                return Err(KnowledgeError::DuplicateStart(s));
            }
        }
        if known_maze {
            for idx in 0..n {
                ks.discover(idx);
                ks.resolve_slots(maze, maze.coord(idx));
            }
        }
        for (p, &s) in starts.iter().enumerate() {
            let idx = ks.index(s);
            ks.discover(idx);
            ks.record_visit(s, p, None)?;
            ks.sense_at(maze, s)?;
        }
        Ok(ks)
    }

    fn index(&self, c: Coord) -> usize {
        c.j * self.width + c.i
    }

    fn coord(&self, idx: usize) -> Coord {
        Coord::new(idx % self.width, idx / self.width)
    }

    fn check(&self, c: Coord) -> Result<usize, KnowledgeError> {
        if c.i < self.width && c.j < self.height {
            Ok(self.index(c))
        } else {
            Err(KnowledgeError::OutOfGrid(c))
        }
    }

    fn discover(&mut self, idx: usize) -> bool {
        if self.discovered[idx] {
            return false;
        }
        self.discovered[idx] = true;
        self.discovered_order.push(idx);
        true
    }

    fn set_edge(&mut self, idx: usize, dir: Direction, state: EdgeKnowledge) {
        self.edges[idx][dir as usize] = state;
        if state == EdgeKnowledge::Open {
            self.open_mask[idx] |= dir.bit();
        }
    }

    /// Resolves all four slots of `c` on both sides; returns neighbors that
    /// were newly discovered.
    fn resolve_slots(&mut self, maze: &MazeGrid, c: Coord) -> Vec<Coord> {
        let idx = self.index(c);
        let mut fresh = Vec::new();
        for dir in Direction::ALL {
            if self.edges[idx][dir as usize] != EdgeKnowledge::Unknown {
                continue;
            }
            let state = if maze.is_open(c, dir) { EdgeKnowledge::Open } else { EdgeKnowledge::Wall };
            self.set_edge(idx, dir, state);
            if let Some(nb) = maze.neighbor(c, dir) {
                let ni = self.index(nb);
                self.set_edge(ni, dir.opposite(), state);
                if state == EdgeKnowledge::Open && self.discover(ni) {
                    fresh.push(nb);
                }
            }
        }
        fresh
    }

    /// Reads the four slots of a visited node from the ground truth and
    /// discovers open neighbors. Nothing behind a wall is revealed. Returns
    /// the newly discovered nodes; idempotent.
    pub fn sense_at(&mut self, maze: &MazeGrid, node: Coord) -> Result<Vec<Coord>, KnowledgeError> {
        let idx = self.check(node)?;
        if self.coverage[idx] == 0 {
            return Err(KnowledgeError::NotVisited(node));
        }
        Ok(self.resolve_slots(maze, node))
    }

    /// Adds one visit by `agent` to `node` and moves the agent's occupancy
    /// there from `previous`. Returns true when this is the node's first
    /// visit. The mark is visible to every later query immediately.
    pub fn record_visit(&mut self, node: Coord, agent: AgentId, previous: Option<Coord>) -> Result<bool, KnowledgeError> {
        let idx = self.check(node)?;
        if !self.discovered[idx] {
            return Err(KnowledgeError::NotDiscovered(node));
        }
        if let Some(prev) = previous {
            let pi = self.check(prev)?;
            self.occupancy[pi] = self.occupancy[pi].saturating_sub(1);
        }
        self.occupancy[idx] += 1;
        self.coverage[idx] += 1;
        let first = self.coverage[idx] == 1;
        if first {
            self.visited += 1;
        }
        if self.first_visitor[idx].is_none() {
            self.first_visitor[idx] = Some(agent);
        }
        Ok(first)
    }

    /// Source term `max(0, 1 - c) * |discovered|`.
    pub fn source_value(&self, node: Coord) -> Result<f64, KnowledgeError> {
        let idx = self.check(node)?;
        if !self.discovered[idx] {
            return Err(KnowledgeError::NotDiscovered(node));
        }
        Ok(self.unscaled_source_at(idx) * self.discovered_count() as f64)
    }

    /// `max(0, 1 - c)`, which is 0 or 1 since coverage is integral.
    pub(crate) fn unscaled_source_at(&self, idx: usize) -> f64 {
        if self.coverage[idx] == 0 {
            1.0
        } else {
            0.0
        }
    }

    /// Finite-difference interface coefficients `(a_N, a_E, a_S, a_W)`.
    /// Unknown slots count as walls.
    pub fn interface_coefficients(&self, node: Coord) -> [u8; 4] {
        coefficients_from_mask(self.open_mask[self.index(node)])
    }

    /// Discovered-but-unvisited count, i.e. the total source before scaling.
    pub fn total_unscaled_source(&self) -> usize {
        self.discovered_order.len() - self.visited
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub(crate) fn tick(&mut self) {
        self.clock += 1;
    }

    pub fn is_discovered(&self, c: Coord) -> bool {
        self.discovered[self.index(c)]
    }

    pub fn discovered_count(&self) -> usize {
        self.discovered_order.len()
    }

    /// Discovered nodes in discovery order.
    pub fn discovered(&self) -> impl ExactSizeIterator<Item = Coord> + '_ {
        self.discovered_order.iter().map(|&idx| self.coord(idx))
    }

    pub(crate) fn discovered_indices(&self) -> &[usize] {
        &self.discovered_order
    }

    pub fn visited_count(&self) -> usize {
        self.visited
    }

    pub fn coverage(&self, c: Coord) -> u32 {
        self.coverage[self.index(c)]
    }

    pub fn is_visited(&self, c: Coord) -> bool {
        self.coverage(c) > 0
    }

    pub fn first_visitor(&self, c: Coord) -> Option<AgentId> {
        self.first_visitor[self.index(c)]
    }

    pub fn occupants(&self, c: Coord) -> u32 {
        self.occupancy[self.index(c)]
    }

    pub fn is_occupied(&self, c: Coord) -> bool {
        self.occupants(c) > 0
    }

    pub fn edge(&self, c: Coord, dir: Direction) -> EdgeKnowledge {
        self.edges[self.index(c)][dir as usize]
    }

    pub(crate) fn open_mask_at(&self, idx: usize) -> u8 {
        self.open_mask[idx]
    }

    /// Neighbors behind known-open slots, in N, E, S, W order.
    pub fn known_open_neighbors(&self, c: Coord) -> Vec<Coord> {
        let mask = self.open_mask[self.index(c)];
        Direction::ALL
            .iter()
            .filter(|d| mask & d.bit() != 0)
            .map(|&d| match d {
                Direction::North => Coord::new(c.i, c.j + 1),
                Direction::East => Coord::new(c.i + 1, c.j),
                Direction::South => Coord::new(c.i, c.j - 1),
                Direction::West => Coord::new(c.i - 1, c.j),
            })
            .collect()
    }
}

/// Per axis: both sides open gives `(1, 1)`, one side open gives 2 on the open
/// side (mirror node of the Neumann condition), neither gives `(0, 0)`.
pub const fn coefficients_from_mask(open: u8) -> [u8; 4] {
    const fn axis(plus: bool, minus: bool) -> (u8, u8) {
        match (plus, minus) {
            (true, true) => (1, 1),
            (true, false) => (2, 0),
            (false, true) => (0, 2),
            (false, false) => (0, 0),
        }
    }
    let (n, s) = axis(open & Direction::North.bit() != 0, open & Direction::South.bit() != 0);
    let (e, w) = axis(open & Direction::East.bit() != 0, open & Direction::West.bit() != 0);
    [n, e, s, w]
}
