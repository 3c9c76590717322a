//! Deterministic SVG rendering of work division and visit heatmaps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::{EdgeKnowledge, KnowledgeState};
use crate::maze::{Coord, Direction, MazeGrid};
use crate::trace::{Replayer, TraceDocument, TraceError};

/// Side of one node square in SVG user units.
pub const CELL: usize = 20;
const MARGIN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    /// Nodes colored by the agent that visited them first.
    Division,
    /// Nodes shaded by cumulative visit count.
    Heatmap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    /// Indexed by agent id modulo the length.
    pub agents: Vec<String>,
    pub exit: String,
    pub wall: String,
    pub heatmap_wall: String,
    pub unknown: String,
    pub background: String,
}

impl Default for Palette {
    fn default() -> Self {
        let agents = [
            "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8",
            "#ffbb78", "#98df8a", "#c5b0d5", "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5", "#393b79", "#637939",
        ];
        Palette {
            agents: agents.iter().map(|s| s.to_string()).collect(),
            exit: "#ff0000".into(),
            wall: "#ff0000".into(),
            heatmap_wall: "#333333".into(),
            unknown: "#000000".into(),
            background: "#ffffff".into(),
        }
    }
}

impl Palette {
    pub fn agent(&self, id: usize) -> &str {
        &self.agents[id % self.agents.len()]
    }
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

const HEAT_LOW: (u8, u8, u8) = (255, 204, 204);
const HEAT_HIGH: (u8, u8, u8) = (128, 0, 0);

/// Fill for a node visited `count` times when the busiest node has `max`.
pub fn heat_color(count: u32, max: u32) -> String {
    if count == 0 {
        return "#ffffff".into();
    }
    let t = if max <= 1 { 0.0 } else { (count - 1) as f64 / (max - 1) as f64 };
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(HEAT_LOW.0, HEAT_HIGH.0), mix(HEAT_LOW.1, HEAT_HIGH.1), mix(HEAT_LOW.2, HEAT_HIGH.2))
}

/// Fill of one node in division mode.
pub fn division_color<'p>(maze: &MazeGrid, ks: &KnowledgeState, palette: &'p Palette, c: Coord) -> &'p str {
    if maze.exit() == Some(c) {
        &palette.exit
    } else if let Some(id) = ks.first_visitor(c) {
        palette.agent(id)
    } else {
        &palette.unknown
    }
}

fn x_of(i: usize) -> usize {
    MARGIN + i * CELL
}

fn y_of(height: usize, j: usize) -> usize {
    MARGIN + (height - 1 - j) * CELL
}

/// SVG of the knowledge state: node squares, known walls, then markers on
/// occupied nodes. Element order is fixed (row-major from the bottom row).
pub fn render_state(maze: &MazeGrid, ks: &KnowledgeState, mode: RenderMode, palette: &Palette) -> String {
    let (w, h) = (maze.width(), maze.height());
    let (pw, ph) = (w * CELL + 2 * MARGIN, h * CELL + 2 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{pw}" height="{ph}" viewBox="0 0 {pw} {ph}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{pw}" height="{ph}" fill="{}"/>"#, palette.background);

    let max_cov = (0..maze.node_count()).map(|k| ks.coverage(maze.coord(k))).max().unwrap_or(0);
    for k in 0..maze.node_count() {
        let c = maze.coord(k);
        let fill = match mode {
            RenderMode::Division => division_color(maze, ks, palette, c).to_string(),
            RenderMode::Heatmap => heat_color(ks.coverage(c), max_cov),
        };
        let _ = writeln!(
            s,
            r#"<rect class="node" x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{fill}"/>"#,
            x_of(c.i),
            y_of(h, c.j)
        );
    }

    let stroke = match mode {
        RenderMode::Division => &palette.wall,
        RenderMode::Heatmap => &palette.heatmap_wall,
    };
    let _ = writeln!(s, r#"<g stroke="{stroke}" stroke-width="2" stroke-linecap="square">"#);
    for k in 0..maze.node_count() {
        let c = maze.coord(k);
        for dir in Direction::ALL {
            // Each interior wall is drawn once, from its south or west node.
            let owned = match dir {
                Direction::North | Direction::East => true,
                Direction::South => c.j == 0,
                Direction::West => c.i == 0,
            };
            if !owned || !wall_known(maze, ks, c, dir) {
                continue;
            }
            let (x0, y0) = (x_of(c.i), y_of(h, c.j));
            let (x1, y1, x2, y2) = match dir {
                Direction::North => (x0, y0, x0 + CELL, y0),
                Direction::East => (x0 + CELL, y0, x0 + CELL, y0 + CELL),
                Direction::South => (x0, y0 + CELL, x0 + CELL, y0 + CELL),
                Direction::West => (x0, y0, x0, y0 + CELL),
            };
            let _ = writeln!(s, r#"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>"#);
        }
    }
    s.push_str("</g>\n");

    for k in 0..maze.node_count() {
        let c = maze.coord(k);
        if ks.is_occupied(c) {
            let _ = writeln!(
                s,
                r##"<circle class="agent" cx="{}" cy="{}" r="{}" fill="#ffffff" stroke="#000000" stroke-width="1.5"/>"##,
                x_of(c.i) + CELL / 2,
                y_of(h, c.j) + CELL / 2,
                CELL / 4
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn wall_known(maze: &MazeGrid, ks: &KnowledgeState, c: Coord, dir: Direction) -> bool {
    if ks.edge(c, dir) == EdgeKnowledge::Wall {
        return true;
    }
    match maze.neighbor(c, dir) {
        Some(nb) => ks.edge(nb, dir.opposite()) == EdgeKnowledge::Wall,
        None => false,
    }
}

/// Renders the trace at time step `step`.
pub fn render_step(doc: &TraceDocument, step: usize, mode: RenderMode, palette: &Palette) -> Result<String, RenderError> {
    let ks = doc.replay(step)?;
    let maze = doc.maze()?;
    Ok(render_state(&maze, &ks, mode, palette))
}

/// File name of frame `k` out of `count`, zero-padded to at least 4 digits.
pub fn frame_name(k: usize, count: usize) -> String {
    let digits = count.saturating_sub(1).to_string().len().max(4);
    format!("frame_{k:0digits$}.svg")
}

/// Writes one SVG per recorded time step into `dir` and returns the paths.
pub fn export_frames(doc: &TraceDocument, dir: &Path, mode: RenderMode, palette: &Palette) -> Result<Vec<PathBuf>, RenderError> {
    std::fs::create_dir_all(dir).map_err(|source| RenderError::Io { path: dir.to_path_buf(), source })?;
    let maze = doc.maze()?;
    let count = doc.steps.len();
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    let mut replayer = Replayer::new(&maze, doc)?;
    loop {
        let path = dir.join(frame_name(replayer.step(), count));
        let svg = render_state(&maze, replayer.knowledge(), mode, palette);
        std::fs::write(&path, svg).map_err(|source| RenderError::Io { path: path.clone(), source })?;
        out.push(path);
        if !replayer.advance()? {
            break;
        }
    }
    Ok(out)
}
