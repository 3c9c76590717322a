//! Shared fixtures for integration tests: random partial-knowledge
//! instances and a dense reference solution of the field equations.
#![allow(dead_code)]

use hedac_core::knowledge::KnowledgeState;
use hedac_core::maze::{generate_tree_maze, knock_down_walls, Coord, Direction, MazeGrid};
use nalgebra::{DMatrix, DVector};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub maze: MazeGrid,
    pub ks: KnowledgeState,
    pub known: bool,
}

/// A random maze up to `max_w x max_h` with a few agents that have random
/// walked for a while. Walks only use the knowledge API, never a controller.
pub fn random_instance(rng: &mut ChaCha8Rng, max_w: usize, max_h: usize) -> Instance {
    let w = rng.random_range(2..=max_w);
    let h = rng.random_range(2..=max_h);
    let seed = rng.random::<u64>();
    let tree = generate_tree_maze(w, h, seed).unwrap();
    let maze = if rng.random_bool(0.5) {
        tree
    } else {
        let target = rng.random_range(0.0..=0.45f64).min(hedac_core::obstacle_share(&tree));
        knock_down_walls(&tree, target, seed).unwrap()
    };
    let known = rng.random_bool(0.2);
    let n_agents = rng.random_range(1..=3usize.min(w * h));
    let mut all: Vec<Coord> = (0..maze.node_count()).map(|k| maze.coord(k)).collect();
    let (starts, _) = all.partial_shuffle(rng, n_agents);
    let mut positions = starts.to_vec();
    let mut ks = KnowledgeState::init(&maze, &positions, known, false).unwrap();
    let walk = rng.random_range(0..=2 * maze.node_count());
    for _ in 0..walk {
        for (id, pos) in positions.iter_mut().enumerate() {
            let options = ks.known_open_neighbors(*pos);
            let Some(&to) = options.choose(rng) else { continue };
            ks.record_visit(to, id, Some(*pos)).unwrap();
            ks.sense_at(&maze, to).unwrap();
            *pos = to;
        }
    }
    Instance { maze, ks, known }
}

/// A slot counts as known open once either end has been visited (or the
/// whole maze is known).
pub fn known_open(inst: &Instance, c: Coord, d: Direction) -> bool {
    let Some(nb) = inst.maze.neighbor(c, d) else { return false };
    inst.maze.is_open(c, d) && (inst.known || inst.ks.is_visited(c) || inst.ks.is_visited(nb))
}

pub fn discovered(inst: &Instance, c: Coord) -> bool {
    inst.known || inst.ks.is_visited(c) || Direction::ALL.iter().any(|&d| known_open(inst, c, d))
}

/// Exact field (grid-indexed, zero off the discovered set) from LU on the
/// assembled system, built from the maze and the visited set alone.
pub fn reference_field(inst: &Instance, alpha: f64) -> Vec<f64> {
    let m = &inst.maze;
    let nodes: Vec<Coord> = (0..m.node_count()).map(|k| m.coord(k)).filter(|&c| discovered(inst, c)).collect();
    let n = nodes.len();
    let row_of = |c: Coord| nodes.iter().position(|&x| x == c).unwrap();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (r, &c) in nodes.iter().enumerate() {
        a[(r, r)] = alpha;
        for (p, q) in [(Direction::North, Direction::South), (Direction::East, Direction::West)] {
            let (op, oq) = (known_open(inst, c, p), known_open(inst, c, q));
            for (d, open, other) in [(p, op, oq), (q, oq, op)] {
                if open {
                    let wgt = if other { 1.0 } else { 2.0 };
                    let col = row_of(m.neighbor(c, d).unwrap());
                    a[(r, col)] -= wgt;
                    a[(r, r)] += wgt;
                }
            }
        }
        b[r] = if inst.ks.is_visited(c) { 0.0 } else { n as f64 };
    }
    let x = a.lu().solve(&b).expect("system is strictly diagonally dominant");
    let mut u = vec![0.0; m.node_count()];
    for (r, &c) in nodes.iter().enumerate() {
        u[m.index(c)] = x[r];
    }
    u
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `max|a - b| / max|b|`, or the absolute difference when `b` is zero.
pub fn rel_max_diff(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let s = max_abs(b);
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

pub fn has_unvisited(inst: &Instance) -> bool {
    inst.ks.discovered().any(|c| !inst.ks.is_visited(c))
}
