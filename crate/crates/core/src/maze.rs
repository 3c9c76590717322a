//! Ground-truth maze grids: generation, wall knockdown, exit placement and the
//! JSON maze file format.
//!
//! Nodes sit on an integer lattice with unit spacing. `i` is the column
//! (`0..width`, growing East) and `j` the row (`0..height`, growing North),
//! origin at the bottom-left. Each node carries four wall slots; a slot is
//! either closed (wall) or open, and the two nodes sharing a slot always agree
//! on it.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, Stream};

/// A node position `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Coord {
    pub i: usize,
    pub j: usize,
}

impl Coord {
    pub const fn new(i: usize, j: usize) -> Self {
        Coord { i, j }
    }
}

impl From<[usize; 2]> for Coord {
    fn from([i, j]: [usize; 2]) -> Self {
        Coord { i, j }
    }
}

impl From<Coord> for [usize; 2] {
    fn from(c: Coord) -> Self {
        [c.i, c.j]
    }
}

impl std::fmt::Display for Coord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// Compass direction of a wall slot. The discriminant is the slot's bit index
/// in a wall mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `+j`
    North = 0,
    /// `+i`
    East = 1,
    /// `-j`
    South = 2,
    /// `-i`
    West = 3,
}

impl Direction {
    /// Fixed scan order used everywhere a direction order matters.
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub const fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub const fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::East => Direction::West,
            Direction::South => Direction::North,
            Direction::West => Direction::East,
        }
    }
}

/// All four slots closed.
pub const CLOSED: u8 = 0b1111;

#[derive(Debug, Error, PartialEq)]
pub enum MazeError {
    #[error("maze dimensions must be positive, got {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("node {0} lies outside the grid")]
    OutOfGrid(Coord),
    #[error("exit {0} lies outside the grid")]
    ExitOutOfRange(Coord),
    #[error("wall masks disagree between {a} and {b}")]
    InconsistentWalls { a: Coord, b: Coord },
    #[error("boundary slot of node {0} is open")]
    OpenBoundary(Coord),
    #[error("target obstacle share {target} exceeds the current share {current}")]
    InfeasibleTarget { target: f64, current: f64 },
    #[error("malformed maze document: {0}")]
    Malformed(String),
}

/// Ground-truth maze. Immutable once built; share it freely between readers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeGrid {
    width: usize,
    height: usize,
    /// Row-major (`j * width + i`) closed-slot masks.
    walls: Vec<u8>,
    exit: Option<Coord>,
}

impl MazeGrid {
    /// A grid with every slot closed.
    pub fn closed(width: usize, height: usize) -> Result<Self, MazeError> {
        if width == 0 || height == 0 {
            return Err(MazeError::InvalidDimensions { width, height });
        }
        Ok(MazeGrid { width, height, walls: vec![CLOSED; width * height], exit: None })
    }

    /// A grid with every interior slot open.
    pub fn open(width: usize, height: usize) -> Result<Self, MazeError> {
        let mut maze = Self::closed(width, height)?;
        for idx in 0..maze.node_count() {
            let c = maze.coord(idx);
            for dir in [Direction::East, Direction::North] {
                if maze.neighbor(c, dir).is_some() {
                    maze.set_open(c, dir);
                }
            }
        }
        Ok(maze)
    }

    /// Builds a maze from raw closed-slot masks, validating slot symmetry,
    /// the closed boundary and the exit.
    pub fn from_masks(width: usize, height: usize, walls: Vec<u8>, exit: Option<Coord>) -> Result<Self, MazeError> {
        if width == 0 || height == 0 {
            return Err(MazeError::InvalidDimensions { width, height });
        }
        if walls.len() != width * height {
            return Err(MazeError::Malformed(format!(
                "expected {} wall masks, found {}",
                width * height,
                walls.len()
            )));
        }
        if let Some(&bad) = walls.iter().find(|&&m| m > CLOSED) {
            return Err(MazeError::Malformed(format!("wall mask {bad} out of range")));
        }
        let maze = MazeGrid { width, height, walls, exit };
        for idx in 0..maze.node_count() {
            let c = maze.coord(idx);
            for dir in Direction::ALL {
                let closed_here = maze.walls[idx] & dir.bit() != 0;
                match maze.neighbor(c, dir) {
                    None if !closed_here => return Err(MazeError::OpenBoundary(c)),
                    None => {}
                    Some(n) => {
                        let closed_there = maze.walls[maze.index(n)] & dir.opposite().bit() != 0;
                        if closed_here != closed_there {
                            return Err(MazeError::InconsistentWalls { a: c, b: n });
                        }
                    }
                }
            }
        }
        if let Some(e) = exit {
            if !maze.contains(e) {
                return Err(MazeError::ExitOutOfRange(e));
            }
        }
        Ok(maze)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn node_count(&self) -> usize {
        self.width * self.height
    }

    pub fn exit(&self) -> Option<Coord> {
        self.exit
    }

    pub fn with_exit(mut self, exit: Option<Coord>) -> Result<Self, MazeError> {
        if let Some(e) = exit {
            if !self.contains(e) {
                return Err(MazeError::ExitOutOfRange(e));
            }
        }
        self.exit = exit;
        Ok(self)
    }

    pub fn contains(&self, c: Coord) -> bool {
        c.i < self.width && c.j < self.height
    }

    pub fn index(&self, c: Coord) -> usize {
        c.j * self.width + c.i
    }

    pub fn coord(&self, idx: usize) -> Coord {
        Coord::new(idx % self.width, idx / self.width)
    }

    /// Closed-slot mask of a node (bit set = wall).
    pub fn wall_mask(&self, c: Coord) -> u8 {
        self.walls[self.index(c)]
    }

    /// The lattice neighbor in `dir`, ignoring walls.
    pub fn neighbor(&self, c: Coord, dir: Direction) -> Option<Coord> {
        match dir {
            Direction::North if c.j + 1 < self.height => Some(Coord::new(c.i, c.j + 1)),
            Direction::East if c.i + 1 < self.width => Some(Coord::new(c.i + 1, c.j)),
            Direction::South if c.j > 0 => Some(Coord::new(c.i, c.j - 1)),
            Direction::West if c.i > 0 => Some(Coord::new(c.i - 1, c.j)),
            _ => None,
        }
    }

    pub fn is_open(&self, c: Coord, dir: Direction) -> bool {
        self.walls[self.index(c)] & dir.bit() == 0
    }

    fn set_open(&mut self, c: Coord, dir: Direction) {
        let n = self.neighbor(c, dir).expect("open slot must have a neighbor");
        let (a, b) = (self.index(c), self.index(n));
        self.walls[a] &= !dir.bit();
        self.walls[b] &= !dir.opposite().bit();
    }

    /// Neighbors reachable through open slots, in N, E, S, W order.
    pub fn connected_neighbors(&self, c: Coord) -> Result<Vec<Coord>, MazeError> {
        if !self.contains(c) {
            return Err(MazeError::OutOfGrid(c));
        }
        Ok(Direction::ALL
            .iter()
            .filter(|&&d| self.is_open(c, d))
            .filter_map(|&d| self.neighbor(c, d))
            .collect())
    }

    /// Interior slots in canonical order: for each node in row-major order,
    /// its East slot (if interior) then its North slot (if interior).
    fn interior_slots(&self) -> impl Iterator<Item = (Coord, Direction)> + '_ {
        (0..self.node_count()).flat_map(move |idx| {
            let c = self.coord(idx);
            [Direction::East, Direction::North]
                .into_iter()
                .filter(move |&d| self.neighbor(c, d).is_some())
                .map(move |d| (c, d))
        })
    }

    /// `2wh - w - h`.
    pub fn interior_slot_count(&self) -> usize {
        2 * self.width * self.height - self.width - self.height
    }

    pub fn open_interior_count(&self) -> usize {
        self.interior_slots().filter(|&(c, d)| self.is_open(c, d)).count()
    }

    pub fn closed_interior_count(&self) -> usize {
        self.interior_slot_count() - self.open_interior_count()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(idx) = stack.pop() {
            let c = self.coord(idx);
            for dir in Direction::ALL {
                if self.is_open(c, dir) {
                    if let Some(n) = self.neighbor(c, dir) {
                        let ni = self.index(n);
                        if !seen[ni] {
                            seen[ni] = true;
                            count += 1;
                            stack.push(ni);
                        }
                    }
                }
            }
        }
        count == self.node_count()
    }

    /// Connected and acyclic: exactly one corridor path between any two nodes.
    pub fn is_tree(&self) -> bool {
        self.open_interior_count() + 1 == self.node_count() && self.is_connected()
    }
}

/// Fraction of interior wall slots that are closed. Boundary walls are
/// structural and not counted.
pub fn obstacle_share(maze: &MazeGrid) -> f64 {
    let total = maze.interior_slot_count();
    if total == 0 {
        return 0.0;
    }
    maze.closed_interior_count() as f64 / total as f64
}

/// Perfect maze by iterative recursive backtracking.
///
/// Draw order on [`Stream::Generate`]: one draw picks the start node, then
/// every carve step draws once among the unvisited lattice neighbors of the
/// stack top (listed N, E, S, W).
pub fn generate_tree_maze(width: usize, height: usize, seed: u64) -> Result<MazeGrid, MazeError> {
    let mut maze = MazeGrid::closed(width, height)?;
    let mut rng = rng::stream(seed, Stream::Generate);
    let n = maze.node_count();
    let mut visited = vec![false; n];
    let start = rng.random_range(0..n);
    visited[start] = true;
    let mut stack = vec![start];
    let mut candidates = Vec::with_capacity(4);
    while let Some(&top) = stack.last() {
        let c = maze.coord(top);
        candidates.clear();
        candidates.extend(
            Direction::ALL
                .iter()
                .filter_map(|&d| maze.neighbor(c, d).map(|nb| (d, nb)))
                .filter(|&(_, nb)| !visited[maze.index(nb)]),
        );
        if candidates.is_empty() {
            stack.pop();
            continue;
        }
        let (dir, next) = candidates[rng.random_range(0..candidates.len())];
        maze.set_open(c, dir);
        let ni = maze.index(next);
        visited[ni] = true;
        stack.push(ni);
    }
    Ok(maze)
}

/// Opens uniformly chosen closed interior slots until the obstacle share
/// first drops to `target_share` or below, i.e. until
/// `floor(target_share * interior_slots)` closed slots remain.
///
/// Draw order on [`Stream::Knockdown`]: a partial Fisher-Yates shuffle over
/// the closed interior slots in canonical order, one draw per removed wall.
pub fn knock_down_walls(maze: &MazeGrid, target_share: f64, seed: u64) -> Result<MazeGrid, MazeError> {
    let current = obstacle_share(maze);
    if !(0.0..=1.0).contains(&target_share) || target_share > current + 1e-12 {
        return Err(MazeError::InfeasibleTarget { target: target_share, current });
    }
    let total = maze.interior_slot_count();
    // Guard against 0.3 * 180 = 53.99999... style representation error.
    let keep = ((target_share * total as f64) + 1e-9).floor() as usize;
    let mut closed: Vec<(Coord, Direction)> = maze.interior_slots().filter(|&(c, d)| !maze.is_open(c, d)).collect();
    let remove = closed.len().saturating_sub(keep);
    let mut out = maze.clone();
    let mut rng = rng::stream(seed, Stream::Knockdown);
    rng::partial_shuffle(&mut closed, remove, &mut rng);
    for &(c, d) in &closed[..remove] {
        out.set_open(c, d);
    }
    Ok(out)
}

/// Places the exit at a uniformly random node (one draw on [`Stream::Exit`]).
pub fn place_exit(maze: &MazeGrid, seed: u64) -> MazeGrid {
    let mut rng = rng::stream(seed, Stream::Exit);
    let idx = rng.random_range(0..maze.node_count());
    let mut out = maze.clone();
    out.exit = Some(out.coord(idx));
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MazeDocument {
    width: usize,
    height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exit: Option<Coord>,
    walls: String,
}

impl MazeGrid {
    /// Canonical JSON value of the maze document (used inside traces).
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.document()).expect("maze document serializes")
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self, MazeError> {
        let doc: MazeDocument = serde_json::from_value(value).map_err(|e| MazeError::Malformed(e.to_string()))?;
        Self::from_document(doc)
    }

    fn document(&self) -> MazeDocument {
        let walls = self.walls.iter().map(|&m| char::from_digit(m as u32, 16).expect("mask < 16")).collect();
        MazeDocument { width: self.width, height: self.height, exit: self.exit, walls }
    }

    fn from_document(doc: MazeDocument) -> Result<Self, MazeError> {
        let walls = doc
            .walls
            .chars()
            .map(|ch| {
                ch.to_digit(16)
                    .map(|d| d as u8)
                    .ok_or_else(|| MazeError::Malformed(format!("invalid wall digit {ch:?}")))
            })
            .collect::<Result<Vec<u8>, _>>()?;
        MazeGrid::from_masks(doc.width, doc.height, walls, doc.exit)
    }
}

/// Serializes a maze to its canonical JSON document.
///
/// `walls` holds one lowercase hex digit per node in row-major order
/// (`j * width + i`, bottom row first); bit 0 = N, bit 1 = E, bit 2 = S,
/// bit 3 = W, set = closed.
pub fn encode_maze(maze: &MazeGrid) -> String {
    serde_json::to_string(&maze.document()).expect("maze document serializes")
}

pub fn decode_maze(text: &str) -> Result<MazeGrid, MazeError> {
    let doc: MazeDocument = serde_json::from_str(text).map_err(|e| MazeError::Malformed(e.to_string()))?;
    MazeGrid::from_document(doc)
}
