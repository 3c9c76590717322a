//! Time-stepped multi-agent simulation shared by HEDAC and the baselines.
//!
//! Each time step, agents decide in id order. A decision is applied at once:
//! the agent moves, its new node is marked visited and sensed, so agents later
//! in the same step see the mark. The decision rule itself is a [`Policy`].

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::BaselineConfig;
use crate::controller::HedacConfig;
use crate::knowledge::{AgentId, KnowledgeError, KnowledgeState};
use crate::maze::{Coord, MazeGrid};
use crate::rng::{self, Stream};
use crate::solver::{PotentialField, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Hedac,
    Kc,
    Alian,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Hedac => "hedac",
            Algorithm::Kc => "kc",
            Algorithm::Alian => "alian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    FindExit,
    MapAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ExitFound,
    FullyMapped,
    Timeout,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::ExitFound => "exit_found",
            Outcome::FullyMapped => "fully_mapped",
            Outcome::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("potential field did not converge at step {clock} (agent {agent:?}): residual {residual} after {sweeps} sweeps")]
    NonConvergence { clock: u64, agent: Option<AgentId>, residual: f64, sweeps: u64 },
    #[error("the find-exit scenario needs a maze with an exit")]
    MissingExit,
    #[error("the Kivelevitch-Cohen rules need a tree-type maze")]
    NotATree,
    #[error("cannot place {agents} agents on {nodes} nodes")]
    TooManyAgents { agents: usize, nodes: usize },
    #[error("agent {agent} attempted an illegal move {from} -> {to}")]
    IllegalMove { agent: AgentId, from: Coord, to: Coord },
    #[error("simulation already terminated")]
    Terminated,
}

/// Configuration snapshot stored with every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunConfig {
    Hedac(HedacConfig),
    Kc(BaselineConfig),
    Alian(BaselineConfig),
}

impl RunConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            RunConfig::Hedac(_) => Algorithm::Hedac,
            RunConfig::Kc(_) => Algorithm::Kc,
            RunConfig::Alian(_) => Algorithm::Alian,
        }
    }

    pub fn scenario(&self) -> Scenario {
        match self {
            RunConfig::Hedac(c) => c.scenario,
            RunConfig::Kc(c) | RunConfig::Alian(c) => c.scenario,
        }
    }

    /// Whether two agents may never share a node. Alian's occupied flag is
    /// an anti-collision rule of its own.
    pub fn anti_collision(&self) -> bool {
        match self {
            RunConfig::Hedac(c) => c.anti_collision,
            RunConfig::Kc(_) => false,
            RunConfig::Alian(_) => true,
        }
    }

    pub fn known_maze(&self) -> bool {
        match self {
            RunConfig::Hedac(c) => c.known_maze,
            RunConfig::Kc(_) | RunConfig::Alian(_) => false,
        }
    }

    pub fn exit_on_sense(&self) -> bool {
        match self {
            RunConfig::Hedac(c) => c.exit_on_sense,
            RunConfig::Kc(c) | RunConfig::Alian(c) => c.exit_on_sense,
        }
    }

    pub fn max_steps(&self) -> u64 {
        match self {
            RunConfig::Hedac(c) => c.max_steps,
            RunConfig::Kc(c) | RunConfig::Alian(c) => c.max_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub position: Coord,
    /// One entry per time step, starting with the initial position.
    pub trajectory: Vec<Coord>,
}

/// Everything that happened in one time step (step 0 is the placement).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub clock: u64,
    pub positions: Vec<Coord>,
    /// Nodes visited for the first time, with the visiting agent.
    pub newly_visited: Vec<(Coord, AgentId)>,
    pub newly_discovered: Vec<Coord>,
    /// Visited nodes as a percentage of all maze nodes.
    pub percent_visited: f64,
    pub solves: u32,
    pub sweeps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub seed: u64,
    pub starts: Vec<Coord>,
    pub outcome: Outcome,
    pub time_steps: u64,
    pub steps: Vec<StepRecord>,
}

impl RunRecord {
    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm()
    }

    pub fn n_agents(&self) -> usize {
        self.starts.len()
    }

    /// Every agent acts once per time step, waits included.
    pub fn total_agent_steps(&self) -> u64 {
        self.time_steps * self.n_agents() as u64
    }
}

/// Read-only view handed to policies.
pub(crate) struct View<'a> {
    pub knowledge: &'a KnowledgeState,
    pub positions: &'a [Coord],
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct SolveStats {
    pub solves: u32,
    pub sweeps: u64,
}

pub(crate) trait Policy: Send {
    /// Called once at the start of every time step.
    fn begin_step(&mut self, _view: &View<'_>, _stats: &mut SolveStats) -> Result<(), RunError> {
        Ok(())
    }

    fn choose(&mut self, agent: AgentId, view: &View<'_>, rng: &mut ChaCha8Rng, stats: &mut SolveStats) -> Result<Coord, RunError>;

    /// Called after the move of `agent` has been applied to the knowledge.
    fn moved(&mut self, _agent: AgentId, _from: Coord, _to: Coord, _view: &View<'_>) {}

    fn field(&self) -> Option<&PotentialField> {
        None
    }
}

/// Samples `n` distinct start nodes uniformly (partial Fisher-Yates over node
/// indices on [`Stream::Starts`]). The first `k` starts do not depend on `n`.
pub fn sample_starts(maze: &MazeGrid, n: usize, seed: u64) -> Result<Vec<Coord>, RunError> {
    let nodes = maze.node_count();
    if n > nodes {
        return Err(RunError::TooManyAgents { agents: n, nodes });
    }
    let mut rng = rng::stream(seed, Stream::Starts);
    let mut all: Vec<usize> = (0..nodes).collect();
    rng::partial_shuffle(&mut all, n, &mut rng);
    Ok(all[..n].iter().map(|&idx| maze.coord(idx)).collect())
}

/// A running simulation.
pub struct Simulation<'m> {
    maze: &'m MazeGrid,
    knowledge: KnowledgeState,
    agents: Vec<AgentState>,
    policy: Box<dyn Policy + 'm>,
    config: RunConfig,
    seed: u64,
    rng: ChaCha8Rng,
    steps: Vec<StepRecord>,
    outcome: Option<Outcome>,
}

impl<'m> Simulation<'m> {
    pub(crate) fn new(
        maze: &'m MazeGrid,
        starts: &[Coord],
        config: RunConfig,
        seed: u64,
        policy: Box<dyn Policy + 'm>,
    ) -> Result<Self, RunError> {
        if config.scenario() == Scenario::FindExit && maze.exit().is_none() {
            return Err(RunError::MissingExit);
        }
        let knowledge = KnowledgeState::init(maze, starts, config.known_maze(), config.anti_collision())?;
        let agents = starts
            .iter()
            .enumerate()
            .map(|(id, &s)| AgentState { id, position: s, trajectory: vec![s] })
            .collect();
        let mut newly_visited = Vec::new();
        for (id, &s) in starts.iter().enumerate() {
            if knowledge.first_visitor(s) == Some(id) && !newly_visited.iter().any(|&(c, _)| c == s) {
                newly_visited.push((s, id));
            }
        }
        let step0 = StepRecord {
            clock: 0,
            positions: starts.to_vec(),
            newly_visited,
            newly_discovered: knowledge.discovered().collect(),
            percent_visited: percent(&knowledge, maze),
            solves: 0,
            sweeps: 0,
        };
        let mut sim = Simulation {
            maze,
            knowledge,
            agents,
            policy,
            config,
            seed,
            rng: rng::stream(seed, Stream::Run),
            steps: vec![step0],
            outcome: None,
        };
        sim.outcome = sim.status();
        Ok(sim)
    }

    pub fn maze(&self) -> &MazeGrid {
        self.maze
    }

    pub fn knowledge(&self) -> &KnowledgeState {
        &self.knowledge
    }

    #[cfg(test)]
    pub(crate) fn knowledge_mut(&mut self) -> &mut KnowledgeState {
        &mut self.knowledge
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn field(&self) -> Option<&PotentialField> {
        self.policy.field()
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn clock(&self) -> u64 {
        self.knowledge.clock()
    }

    fn exit_reached(&self) -> bool {
        let Some(exit) = self.maze.exit() else { return false };
        if self.knowledge.is_visited(exit) {
            return true;
        }
        self.config.exit_on_sense()
            && self.knowledge.known_open_neighbors(exit).iter().any(|&n| self.knowledge.is_visited(n))
    }

    fn status(&self) -> Option<Outcome> {
        if self.config.scenario() == Scenario::FindExit && self.exit_reached() {
            Some(Outcome::ExitFound)
        } else if self.knowledge.visited_count() == self.maze.node_count() {
            Some(Outcome::FullyMapped)
        } else {
            None
        }
    }

    /// Runs one time step: every agent decides and moves in id order.
    pub fn advance_time_step(&mut self) -> Result<Option<Outcome>, RunError> {
        if self.outcome.is_some() {
            return Err(RunError::Terminated);
        }
        let mut stats = SolveStats::default();
        let mut positions: Vec<Coord> = self.agents.iter().map(|a| a.position).collect();
        let mut newly_visited = Vec::new();
        let mut newly_discovered = Vec::new();
        {
            let view = View { knowledge: &self.knowledge, positions: &positions };
            self.policy.begin_step(&view, &mut stats)?;
        }
        for id in 0..self.agents.len() {
            let from = positions[id];
            let to = {
                let view = View { knowledge: &self.knowledge, positions: &positions };
                self.policy.choose(id, &view, &mut self.rng, &mut stats).map_err(|e| match e {
                    RunError::NonConvergence { clock, residual, sweeps, .. } => {
                        RunError::NonConvergence { clock, agent: Some(id), residual, sweeps }
                    }
                    other => other,
                })?
            };
            if to != from && !self.knowledge.known_open_neighbors(from).contains(&to) {
                return Err(RunError::IllegalMove { agent: id, from, to });
            }
            if self.knowledge.record_visit(to, id, Some(from))? {
                newly_visited.push((to, id));
            }
            newly_discovered.extend(self.knowledge.sense_at(self.maze, to)?);
            positions[id] = to;
            let agent = &mut self.agents[id];
            agent.position = to;
            agent.trajectory.push(to);
            let view = View { knowledge: &self.knowledge, positions: &positions };
            self.policy.moved(id, from, to, &view);
        }
        self.knowledge.tick();
        self.steps.push(StepRecord {
            clock: self.knowledge.clock(),
            positions,
            newly_visited,
            newly_discovered,
            percent_visited: percent(&self.knowledge, self.maze),
            solves: stats.solves,
            sweeps: stats.sweeps,
        });
        self.outcome = self.status();
        if self.outcome.is_none() && self.knowledge.clock() >= self.config.max_steps() {
            self.outcome = Some(Outcome::Timeout);
        }
        Ok(self.outcome)
    }

    /// Steps until termination and returns the record.
    pub fn run(mut self) -> Result<RunRecord, RunError> {
        if self.outcome.is_none() && self.config.max_steps() == 0 {
            self.outcome = Some(Outcome::Timeout);
        }
        while self.outcome.is_none() {
            self.advance_time_step()?;
        }
        Ok(self.into_record())
    }

    pub fn into_record(self) -> RunRecord {
        let outcome = self.outcome.unwrap_or(Outcome::Timeout);
        RunRecord {
            config: self.config,
            seed: self.seed,
            starts: self.agents.iter().map(|a| a.trajectory[0]).collect(),
            outcome,
            time_steps: self.knowledge.clock(),
            steps: self.steps,
        }
    }
}

fn percent(ks: &KnowledgeState, maze: &MazeGrid) -> f64 {
    100.0 * ks.visited_count() as f64 / maze.node_count() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_are_distinct_and_prefix_stable() {
        let m = MazeGrid::open(10, 10).unwrap();
        let five = sample_starts(&m, 5, 3).unwrap();
        let ten = sample_starts(&m, 10, 3).unwrap();
        assert_eq!(&ten[..5], &five[..]);
        let mut sorted = ten.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 10);
        assert!(matches!(sample_starts(&m, 101, 0), Err(RunError::TooManyAgents { .. })));
    }
}
