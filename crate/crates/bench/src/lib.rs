//! Fixtures shared by the benchmarks.

use hedac_core::knowledge::KnowledgeState;
use hedac_core::maze::{generate_tree_maze, knock_down_walls, place_exit, Coord, MazeGrid};

/// A fully discovered `w x h` tree maze where every node but the top-right
/// corner has been visited.
pub fn one_source(w: usize, h: usize, seed: u64) -> (MazeGrid, KnowledgeState) {
    let maze = generate_tree_maze(w, h, seed).expect("positive dimensions");
    let target = Coord::new(w - 1, h - 1);
    let visited: Vec<Coord> = (0..maze.node_count()).map(|k| maze.coord(k)).filter(|&c| c != target).collect();
    let ks = KnowledgeState::init(&maze, &visited, true, false).expect("valid starts");
    (maze, ks)
}

/// A `w x h` maze at the given obstacle share with an exit placed.
pub fn maze_with_exit(w: usize, h: usize, share: Option<f64>, seed: u64) -> MazeGrid {
    let tree = generate_tree_maze(w, h, seed).expect("positive dimensions");
    let maze = match share {
        Some(f) => knock_down_walls(&tree, f, seed).expect("share reachable from a tree"),
        None => tree,
    };
    place_exit(&maze, seed)
}
