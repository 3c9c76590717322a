//! Comparison algorithms run on the same simulation substrate as HEDAC.
//!
//! * Kivelevitch-Cohen: a multi-agent generalization of Tarry's traversal for
//!   tree mazes. Agents prefer nodes nobody has visited, then nodes they have
//!   not visited themselves, and otherwise retreat one edge along their own
//!   logged path, marking the node they leave as a dead end.
//! * Alian: white/grey/black node coloring with an occupied flag. Agents
//!   prefer white nodes, then nodes new to themselves, then their least
//!   visited neighbor; a node with a single non-black way out turns black
//!   when its agent departs and is never entered again.
//!
//! Both draw from one seeded stream, per step and per agent id, and only when
//! two or more candidates tie.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::knowledge::AgentId;
use crate::maze::{Coord, MazeGrid};
use crate::sim::{Algorithm, Policy, RunConfig, RunError, RunRecord, Scenario, Simulation, SolveStats, View};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub scenario: Scenario,
    pub max_steps: u64,
    pub exit_on_sense: bool,
}

impl BaselineConfig {
    pub fn for_maze(maze: &MazeGrid, scenario: Scenario) -> Self {
        BaselineConfig { scenario, max_steps: 50 * maze.node_count() as u64, exit_on_sense: false }
    }
}

fn pick<R: Rng>(candidates: &[Coord], rng: &mut R) -> Coord {
    if candidates.len() == 1 {
        candidates[0]
    } else {
        candidates[rng.random_range(0..candidates.len())]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KcAgentState {
    /// Nodes behind the agent, most recent last.
    pub path: Vec<Coord>,
    pub visited: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KcSharedState {
    pub dead_end: Vec<bool>,
}

pub(crate) struct KcPolicy {
    width: usize,
    agents: Vec<KcAgentState>,
    shared: KcSharedState,
}

impl KcPolicy {
    fn new(maze: &MazeGrid, starts: &[Coord]) -> Self {
        let n = maze.node_count();
        let agents = starts
            .iter()
            .map(|&s| {
                let mut visited = vec![false; n];
                visited[maze.index(s)] = true;
                KcAgentState { path: Vec::new(), visited }
            })
            .collect();
        KcPolicy { width: maze.width(), agents, shared: KcSharedState { dead_end: vec![false; n] } }
    }

    fn idx(&self, c: Coord) -> usize {
        c.j * self.width + c.i
    }
}

impl Policy for KcPolicy {
    fn choose(&mut self, agent: AgentId, view: &View<'_>, rng: &mut ChaCha8Rng, _: &mut SolveStats) -> Result<Coord, RunError> {
        let pos = view.positions[agent];
        let open = view.knowledge.known_open_neighbors(pos);
        let live: Vec<Coord> = open.into_iter().filter(|&c| !self.shared.dead_end[self.idx(c)]).collect();

        let fresh: Vec<Coord> = live.iter().copied().filter(|&c| !view.knowledge.is_visited(c)).collect();
        if !fresh.is_empty() {
            self.agents[agent].path.push(pos);
            return Ok(pick(&fresh, rng));
        }
        let own = &self.agents[agent].visited;
        let new_to_me: Vec<Coord> = live.iter().copied().filter(|&c| !own[self.idx(c)]).collect();
        if !new_to_me.is_empty() {
            self.agents[agent].path.push(pos);
            return Ok(pick(&new_to_me, rng));
        }
        match self.agents[agent].path.pop() {
            Some(back) => {
                let here = self.idx(pos);
                self.shared.dead_end[here] = true;
                Ok(back)
            }
            None => Ok(pos),
        }
    }

    fn moved(&mut self, agent: AgentId, _from: Coord, to: Coord, _view: &View<'_>) {
        let idx = self.idx(to);
        self.agents[agent].visited[idx] = true;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeColor {
    White,
    Grey,
    Black,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlianSharedState {
    pub color: Vec<NodeColor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlianAgentState {
    pub visits: Vec<u32>,
}

pub(crate) struct AlianPolicy {
    width: usize,
    agents: Vec<AlianAgentState>,
    shared: AlianSharedState,
}

impl AlianPolicy {
    fn new(maze: &MazeGrid, starts: &[Coord]) -> Self {
        let n = maze.node_count();
        let mut color = vec![NodeColor::White; n];
        let agents = starts
            .iter()
            .map(|&s| {
                let mut visits = vec![0; n];
                visits[maze.index(s)] = 1;
                color[maze.index(s)] = NodeColor::Grey;
                AlianAgentState { visits }
            })
            .collect();
        AlianPolicy { width: maze.width(), agents, shared: AlianSharedState { color } }
    }

    fn idx(&self, c: Coord) -> usize {
        c.j * self.width + c.i
    }
}

impl Policy for AlianPolicy {
    fn choose(&mut self, agent: AgentId, view: &View<'_>, rng: &mut ChaCha8Rng, _: &mut SolveStats) -> Result<Coord, RunError> {
        let pos = view.positions[agent];
        let non_black: Vec<Coord> = view
            .knowledge
            .known_open_neighbors(pos)
            .into_iter()
            .filter(|&c| self.shared.color[self.idx(c)] != NodeColor::Black)
            .collect();
        let free: Vec<Coord> = non_black.iter().copied().filter(|&c| !view.knowledge.is_occupied(c)).collect();
        if free.is_empty() {
            return Ok(pos);
        }
        let visits = &self.agents[agent].visits;
        let white: Vec<Coord> = free.iter().copied().filter(|&c| self.shared.color[self.idx(c)] == NodeColor::White).collect();
        let next = if !white.is_empty() {
            pick(&white, rng)
        } else {
            let unseen: Vec<Coord> = free.iter().copied().filter(|&c| visits[self.idx(c)] == 0).collect();
            if !unseen.is_empty() {
                pick(&unseen, rng)
            } else {
                let least = free.iter().map(|&c| visits[self.idx(c)]).min().expect("free is non-empty");
                let ties: Vec<Coord> = free.iter().copied().filter(|&c| visits[self.idx(c)] == least).collect();
                pick(&ties, rng)
            }
        };
        if non_black.len() == 1 {
            let here = self.idx(pos);
            self.shared.color[here] = NodeColor::Black;
        }
        Ok(next)
    }

    fn moved(&mut self, agent: AgentId, from: Coord, to: Coord, _view: &View<'_>) {
        if from == to {
            return;
        }
        let idx = self.idx(to);
        self.agents[agent].visits[idx] += 1;
        if self.shared.color[idx] == NodeColor::White {
            self.shared.color[idx] = NodeColor::Grey;
        }
    }
}

impl<'m> Simulation<'m> {
    /// A baseline simulation. Kivelevitch-Cohen requires a tree maze.
    pub fn baseline(
        algo: Algorithm,
        maze: &'m MazeGrid,
        starts: &[Coord],
        cfg: BaselineConfig,
        seed: u64,
    ) -> Result<Self, RunError> {
        match algo {
            Algorithm::Kc => {
                if !maze.is_tree() {
                    return Err(RunError::NotATree);
                }
                Simulation::new(maze, starts, RunConfig::Kc(cfg), seed, Box::new(KcPolicy::new(maze, starts)))
            }
            Algorithm::Alian => {
                Simulation::new(maze, starts, RunConfig::Alian(cfg), seed, Box::new(AlianPolicy::new(maze, starts)))
            }
            Algorithm::Hedac => panic!("HEDAC is not a baseline; use Simulation::hedac"),
        }
    }
}

pub fn run_baseline(
    algo: Algorithm,
    maze: &MazeGrid,
    starts: &[Coord],
    cfg: BaselineConfig,
    seed: u64,
) -> Result<RunRecord, RunError> {
    Simulation::baseline(algo, maze, starts, cfg, seed)?.run()
}
