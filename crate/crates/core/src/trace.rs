//! Run traces as line-delimited JSON.
//!
//! The first line is a header (maze, configuration, seed, starts), then one
//! line per time step starting with step 0, then a footer with the outcome.
//! Lines can be appended while a run progresses; a trace cut short by a crash
//! still parses, just without a footer.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::{KnowledgeError, KnowledgeState};
use crate::maze::{Coord, MazeError, MazeGrid};
use crate::sim::{Outcome, RunConfig, RunRecord, StepRecord};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("trace is empty")]
    Empty,
    #[error("trace line {line}: expected {expected}")]
    Layout { line: usize, expected: &'static str },
    #[error("trace maze is invalid: {0}")]
    Maze(#[from] MazeError),
    #[error("step {step} is outside the trace (0..={last})")]
    StepOutOfRange { step: usize, last: usize },
    #[error("replay failed: {0}")]
    Replay(#[from] KnowledgeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    /// The maze document, as in maze files.
    pub maze: serde_json::Value,
    pub config: RunConfig,
    pub seed: u64,
    pub starts: Vec<Coord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceFooter {
    pub outcome: Outcome,
    pub time_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum TraceLine {
    Header(TraceHeader),
    Step(StepRecord),
    Footer(TraceFooter),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceDocument {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
    pub footer: Option<TraceFooter>,
}

impl TraceDocument {
    pub fn from_record(maze: &MazeGrid, record: &RunRecord) -> Self {
        TraceDocument {
            header: TraceHeader {
                maze: maze.to_json_value(),
                config: record.config.clone(),
                seed: record.seed,
                starts: record.starts.clone(),
            },
            steps: record.steps.clone(),
            footer: Some(TraceFooter { outcome: record.outcome, time_steps: record.time_steps }),
        }
    }

    pub fn maze(&self) -> Result<MazeGrid, TraceError> {
        Ok(MazeGrid::from_json_value(self.header.maze.clone())?)
    }

    /// Index of the last recorded step.
    pub fn last_step(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), TraceError> {
        let mut w = TraceWriter::new(out, &self.header)?;
        for step in &self.steps {
            w.step(step)?;
        }
        if let Some(footer) = self.footer {
            w.finish(footer)?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self, TraceError> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut footer = None;
        for (k, line) in input.lines().enumerate() {
            let line = line?;
            let n = k + 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine = serde_json::from_str(&line).map_err(|source| TraceError::Json { line: n, source })?;
            match (parsed, header.is_some(), footer.is_some()) {
                (TraceLine::Header(h), false, _) => header = Some(h),
                (_, false, _) => return Err(TraceError::Layout { line: n, expected: "a header first" }),
                (_, true, true) => return Err(TraceError::Layout { line: n, expected: "nothing after the footer" }),
                (TraceLine::Step(s), true, false) => steps.push(s),
                (TraceLine::Footer(f), true, false) => footer = Some(f),
                (TraceLine::Header(_), true, false) => return Err(TraceError::Layout { line: n, expected: "a single header" }),
            }
        }
        let header = header.ok_or(TraceError::Empty)?;
        Ok(TraceDocument { header, steps, footer })
    }

    /// Knowledge state after `step` time steps, rebuilt from the maze and
    /// the recorded positions.
    pub fn replay(&self, step: usize) -> Result<KnowledgeState, TraceError> {
        if step > self.last_step() || self.steps.is_empty() {
            return Err(TraceError::StepOutOfRange { step, last: self.last_step() });
        }
        let maze = self.maze()?;
        let mut r = Replayer::new(&maze, self)?;
        while r.step() < step {
            r.advance()?;
        }
        Ok(r.knowledge)
    }
}

/// Steps a knowledge state through a trace one time step at a time.
pub struct Replayer<'a> {
    maze: &'a MazeGrid,
    doc: &'a TraceDocument,
    knowledge: KnowledgeState,
    step: usize,
}

impl<'a> Replayer<'a> {
    pub fn new(maze: &'a MazeGrid, doc: &'a TraceDocument) -> Result<Self, TraceError> {
        let cfg = &doc.header.config;
        let knowledge = KnowledgeState::init(maze, &doc.header.starts, cfg.known_maze(), cfg.anti_collision())?;
        Ok(Replayer { maze, doc, knowledge, step: 0 })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn knowledge(&self) -> &KnowledgeState {
        &self.knowledge
    }

    /// Applies the next recorded step. Returns false at the end of the trace.
    pub fn advance(&mut self) -> Result<bool, TraceError> {
        let Some(next) = self.doc.steps.get(self.step + 1) else { return Ok(false) };
        let prev = &self.doc.steps[self.step].positions;
        for (id, (&to, &from)) in next.positions.iter().zip(prev).enumerate() {
            self.knowledge.record_visit(to, id, Some(from))?;
            self.knowledge.sense_at(self.maze, to)?;
        }
        self.knowledge.tick();
        self.step += 1;
        Ok(true)
    }
}

/// Incremental trace output: header on creation, then steps, then footer.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, header: &TraceHeader) -> Result<Self, TraceError> {
        write_line(&mut out, &TraceLine::Header(header.clone()))?;
        Ok(TraceWriter { out })
    }

    pub fn step(&mut self, step: &StepRecord) -> Result<(), TraceError> {
        write_line(&mut self.out, &TraceLine::Step(step.clone()))
    }

    pub fn finish(mut self, footer: TraceFooter) -> Result<W, TraceError> {
        write_line(&mut self.out, &TraceLine::Footer(footer))?;
        self.out.flush()?;
        Ok(self.out)
    }
}

fn write_line<W: Write>(out: &mut W, line: &TraceLine) -> Result<(), TraceError> {
    serde_json::to_writer(&mut *out, line).map_err(|source| TraceError::Json { line: 0, source })?;
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{run_scenario, HedacConfig};
    use crate::maze::generate_tree_maze;
    use crate::sim::{sample_starts, Scenario};

    fn record() -> (MazeGrid, RunRecord) {
        let m = generate_tree_maze(6, 6, 8).unwrap();
        let starts = sample_starts(&m, 3, 8).unwrap();
        let rec = run_scenario(&m, &starts, HedacConfig::for_maze(&m, Scenario::MapAll), 8).unwrap();
        (m, rec)
    }

    #[test]
    fn roundtrip_and_layout() {
        let (m, rec) = record();
        let doc = TraceDocument::from_record(&m, &rec);
        let text = doc.to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), rec.steps.len() + 2);
        assert!(lines[0].starts_with(r#"{"type":"header""#));
        assert!(lines.last().unwrap().starts_with(r#"{"type":"footer""#));
        let back = TraceDocument::read(text.as_bytes()).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn truncated_trace_still_reads() {
        let (m, rec) = record();
        let text = TraceDocument::from_record(&m, &rec).to_jsonl();
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        let doc = TraceDocument::read(cut.as_bytes()).unwrap();
        assert_eq!(doc.steps.len(), 3);
        assert!(doc.footer.is_none());
    }

    #[test]
    fn malformed_traces() {
        assert!(matches!(TraceDocument::read("".as_bytes()), Err(TraceError::Empty)));
        assert!(matches!(TraceDocument::read("{nope\n".as_bytes()), Err(TraceError::Json { line: 1, .. })));
        let (m, rec) = record();
        let text = TraceDocument::from_record(&m, &rec).to_jsonl();
        let step_first: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert!(matches!(TraceDocument::read(step_first.as_bytes()), Err(TraceError::Layout { line: 1, .. })));
    }

    #[test]
    fn replay_step_zero_is_the_initial_state() {
        let (m, rec) = record();
        let doc = TraceDocument::from_record(&m, &rec);
        let ks = doc.replay(0).unwrap();
        let init = KnowledgeState::init(&m, &rec.starts, false, true).unwrap();
        assert_eq!(ks, init);
        assert!(matches!(doc.replay(rec.steps.len()), Err(TraceError::StepOutOfRange { .. })));
    }
}
