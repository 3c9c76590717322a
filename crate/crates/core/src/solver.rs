//! Potential field over the discovered domain.
//!
//! Every discovered node satisfies
//!
//! ```text
//! (sum_l a_l + alpha) * u - sum_l a_l * u_l = s
//! ```
//!
//! with interface coefficients `a_l` from the known wall structure (see
//! [`coefficients_from_mask`]). The system is never assembled: sweeps read the
//! coefficients straight from the knowledge state. Values live in a flat array
//! indexed by grid position; a node that has never been discovered holds 0, so
//! a newly discovered node enters the warm-started iteration at 0.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::{coefficients_from_mask, KnowledgeState};
use crate::maze::{Coord, Direction};

/// Color-set size from which [`Parallelism::Auto`] updates nodes in parallel.
pub const PARALLEL_THRESHOLD: usize = 4096;

/// Largest discovered set the dense oracle accepts.
pub const ORACLE_MAX_NODES: usize = 4096;

const COEFFS: [[u8; 4]; 16] = {
    let mut table = [[0u8; 4]; 16];
    let mut m = 0;
    while m < 16 {
        table[m] = coefficients_from_mask(m as u8);
        m += 1;
    }
    table
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Jacobi,
    Sor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    Off,
    /// Parallel once a color set reaches [`PARALLEL_THRESHOLD`] nodes.
    Auto,
    Always,
}

/// The factor `S(t)` multiplying the unscaled source `max(0, 1 - c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceScale {
    /// `S(t) = |discovered|`.
    Discovered,
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Convective cooling.
    pub alpha: f64,
    /// Over-relaxation factor for SOR.
    pub omega: f64,
    /// Relative residual threshold: stop once `max|defect| <= tol * max|s|`.
    pub tol: f64,
    /// Defaults to `100 * |discovered| + 1000` when unset.
    pub max_sweeps: Option<u64>,
    pub method: SolveMethod,
    pub parallelism: Parallelism,
    pub source_scale: SourceScale,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            alpha: 0.1,
            omega: 1.3,
            tol: 1e-6,
            max_sweeps: None,
            method: SolveMethod::Sor,
            parallelism: Parallelism::Auto,
            source_scale: SourceScale::Discovered,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(SolverError::InvalidAlpha(self.alpha));
        }
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(SolverError::InvalidOmega(self.omega));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(SolverError::InvalidTolerance(self.tol));
        }
        if let SourceScale::Constant(c) = self.source_scale {
            if !(c > 0.0 && c.is_finite()) {
                return Err(SolverError::InvalidScale(c));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("omega must lie in (0, 2), got {0}")]
    InvalidOmega(f64),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("source scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("dense oracle limited to {max} nodes, got {nodes}")]
    TooLarge { nodes: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub sweeps: u64,
    pub final_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    width: usize,
    u: Vec<f64>,
    scratch: Vec<f64>,
    settings: SolverSettings,
}

/// Splits discovered nodes into `B` (`i + j` even) and `R` (`i + j` odd).
/// Lattice neighbors always differ in parity, so no edge joins two nodes of
/// one set.
pub fn partition_red_black(ks: &KnowledgeState) -> (Vec<Coord>, Vec<Coord>) {
    ks.discovered().partition(|c| (c.i + c.j) % 2 == 0)
}

fn partition_indices(ks: &KnowledgeState) -> (Vec<usize>, Vec<usize>) {
    let w = ks.width();
    ks.discovered_indices().iter().partition(|&&idx| (idx % w + idx / w).is_multiple_of(2))
}

impl PotentialField {
    pub fn new(width: usize, height: usize, settings: SolverSettings) -> Result<Self, SolverError> {
        settings.validate()?;
        Ok(PotentialField { width, u: vec![0.0; width * height], scratch: vec![0.0; width * height], settings })
    }

    /// A zero field sized for `ks`.
    pub fn for_knowledge(ks: &KnowledgeState, settings: SolverSettings) -> Result<Self, SolverError> {
        Self::new(ks.width(), ks.height(), settings)
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn value(&self, c: Coord) -> f64 {
        self.u[c.j * self.width + c.i]
    }

    pub fn set_value(&mut self, c: Coord, v: f64) {
        self.u[c.j * self.width + c.i] = v;
    }

    /// Grid-indexed values (`j * width + i`).
    pub fn values(&self) -> &[f64] {
        &self.u
    }

    fn scale(&self, ks: &KnowledgeState) -> f64 {
        match self.settings.source_scale {
            SourceScale::Discovered => ks.discovered_count() as f64,
            SourceScale::Constant(c) => c,
        }
    }

    fn parallel_for(&self, len: usize) -> bool {
        match self.settings.parallelism {
            Parallelism::Off => false,
            Parallelism::Auto => len >= PARALLEL_THRESHOLD,
            Parallelism::Always => true,
        }
    }

    /// Max-norm defect of the discrete equations over the discovered nodes.
    pub fn residual(&self, ks: &KnowledgeState) -> f64 {
        let scale = self.scale(ks);
        let defect = |&idx: &usize| {
            let (sum, diag) = neighbor_sum(ks, &self.u, idx, self.width, self.settings.alpha);
            (diag * self.u[idx] - sum - ks.unscaled_source_at(idx) * scale).abs()
        };
        let nodes = ks.discovered_indices();
        if self.parallel_for(nodes.len()) {
            nodes.par_iter().map(defect).reduce(|| 0.0, f64::max)
        } else {
            nodes.iter().map(defect).fold(0.0, f64::max)
        }
    }

    /// One Jacobi sweep: every node replaced by its local average using only
    /// previous-sweep values. Returns the largest update magnitude.
    pub fn jacobi_sweep(&mut self, ks: &KnowledgeState) -> f64 {
        let scale = self.scale(ks);
        let alpha = self.settings.alpha;
        let width = self.width;
        let nodes = ks.discovered_indices();
        let u = &self.u;
        let target = |&idx: &usize| {
            let (sum, diag) = neighbor_sum(ks, u, idx, width, alpha);
            (sum + ks.unscaled_source_at(idx) * scale) / diag
        };
        if self.parallel_for(nodes.len()) {
            let fresh: Vec<f64> = nodes.par_iter().map(target).collect();
            for (&idx, v) in nodes.iter().zip(fresh) {
                self.scratch[idx] = v;
            }
        } else {
            for idx in nodes {
                self.scratch[*idx] = target(idx);
            }
        }
        let mut delta = 0.0f64;
        for &idx in nodes {
            delta = delta.max((self.scratch[idx] - self.u[idx]).abs());
            self.u[idx] = self.scratch[idx];
        }
        delta
    }

    /// One red-black SOR sweep: all `black` nodes from current values, then
    /// all `red` nodes using the fresh black values. Returns the largest
    /// update magnitude.
    pub fn sor_redblack_sweep(&mut self, ks: &KnowledgeState, black: &[Coord], red: &[Coord]) -> f64 {
        let w = self.width;
        let b: Vec<usize> = black.iter().map(|c| c.j * w + c.i).collect();
        let r: Vec<usize> = red.iter().map(|c| c.j * w + c.i).collect();
        self.sor_sweep_indices(ks, &b, &r)
    }

    fn sor_sweep_indices(&mut self, ks: &KnowledgeState, black: &[usize], red: &[usize]) -> f64 {
        let d1 = self.color_pass(ks, black);
        let d2 = self.color_pass(ks, red);
        d1.max(d2)
    }

    /// Over-relaxed update of one color. Nodes of one color only read nodes
    /// of the other color, so the in-place sequential pass and the parallel
    /// pass compute bit-identical values.
    fn color_pass(&mut self, ks: &KnowledgeState, nodes: &[usize]) -> f64 {
        let scale = self.scale(ks);
        let SolverSettings { alpha, omega, .. } = self.settings;
        let width = self.width;
        let relaxed = |u: &[f64], idx: usize| {
            let (sum, diag) = neighbor_sum(ks, u, idx, width, alpha);
            let gs = (sum + ks.unscaled_source_at(idx) * scale) / diag;
            u[idx] + omega * (gs - u[idx])
        };
        let mut delta = 0.0f64;
        if self.parallel_for(nodes.len()) {
            let u = &self.u;
            let fresh: Vec<f64> = nodes.par_iter().map(|&idx| relaxed(u, idx)).collect();
            for (&idx, v) in nodes.iter().zip(fresh) {
                delta = delta.max((v - self.u[idx]).abs());
                self.u[idx] = v;
            }
        } else {
            for &idx in nodes {
                let v = relaxed(&self.u, idx);
                delta = delta.max((v - self.u[idx]).abs());
                self.u[idx] = v;
            }
        }
        delta
    }

    /// Iterates sweeps from the current values until the relative residual
    /// drops to `tol` or the sweep budget runs out. A zero total source sets
    /// the field to zero without sweeping.
    pub fn solve(&mut self, ks: &KnowledgeState) -> SolveReport {
        self.solve_to(ks, self.settings.tol)
    }

    /// [`solve`](Self::solve) with an explicit relative tolerance.
    pub fn solve_to(&mut self, ks: &KnowledgeState, tol: f64) -> SolveReport {
        let nodes = ks.discovered_indices();
        if ks.total_unscaled_source() == 0 {
            for &idx in nodes {
                self.u[idx] = 0.0;
            }
            return SolveReport { sweeps: 0, final_residual: 0.0, converged: true };
        }
        let threshold = tol * self.scale(ks);
        let budget = self.settings.max_sweeps.unwrap_or(100 * nodes.len() as u64 + 1000);
        let (black, red) = match self.settings.method {
            SolveMethod::Sor => partition_indices(ks),
            SolveMethod::Jacobi => (Vec::new(), Vec::new()),
        };
        let mut sweeps = 0;
        let mut res = self.residual(ks);
        while res > threshold && sweeps < budget {
            match self.settings.method {
                SolveMethod::Jacobi => {
                    self.jacobi_sweep(ks);
                }
                SolveMethod::Sor => {
                    self.sor_sweep_indices(ks, &black, &red);
                }
            }
            sweeps += 1;
            res = self.residual(ks);
        }
        SolveReport { sweeps, final_residual: res, converged: res <= threshold }
    }

    /// Bound on the max-norm distance to the exact field given a residual.
    /// Every row of the system has diagonal excess exactly `alpha`, so the
    /// inverse has infinity norm at most `1 / alpha`.
    pub fn error_bound(&self, residual: f64) -> f64 {
        residual / self.settings.alpha
    }
}

/// `(sum_l a_l u_l, sum_l a_l + alpha)` for the node at `idx`.
#[inline]
fn neighbor_sum(ks: &KnowledgeState, u: &[f64], idx: usize, width: usize, alpha: f64) -> (f64, f64) {
    let a = COEFFS[ks.open_mask_at(idx) as usize];
    let mut sum = 0.0;
    let mut diag = alpha;
    if a[Direction::North as usize] != 0 {
        let k = a[Direction::North as usize] as f64;
        sum += k * u[idx + width];
        diag += k;
    }
    if a[Direction::East as usize] != 0 {
        let k = a[Direction::East as usize] as f64;
        sum += k * u[idx + 1];
        diag += k;
    }
    if a[Direction::South as usize] != 0 {
        let k = a[Direction::South as usize] as f64;
        sum += k * u[idx - width];
        diag += k;
    }
    if a[Direction::West as usize] != 0 {
        let k = a[Direction::West as usize] as f64;
        sum += k * u[idx - 1];
        diag += k;
    }
    (sum, diag)
}

/// Exact field by dense Gaussian elimination with partial pivoting, in
/// discovery order. The matrix is built from the tri-state edge knowledge,
/// independently of the sweep kernels.
pub fn direct_solve_oracle(ks: &KnowledgeState, alpha: f64, scale: SourceScale) -> Result<Vec<(Coord, f64)>, SolverError> {
    if !(alpha > 0.0) {
        return Err(SolverError::InvalidAlpha(alpha));
    }
    let nodes: Vec<Coord> = ks.discovered().collect();
    let n = nodes.len();
    if n > ORACLE_MAX_NODES {
        return Err(SolverError::TooLarge { nodes: n, max: ORACLE_MAX_NODES });
    }
    let s_scale = match scale {
        SourceScale::Discovered => n as f64,
        SourceScale::Constant(c) => c,
    };
    let mut position = std::collections::HashMap::with_capacity(n);
    for (k, c) in nodes.iter().enumerate() {
        position.insert(*c, k);
    }
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for (row, &c) in nodes.iter().enumerate() {
        let open = |d: Direction| ks.edge(c, d) == crate::knowledge::EdgeKnowledge::Open;
        let step = |d: Direction| match d {
            Direction::North => Coord::new(c.i, c.j + 1),
            Direction::East => Coord::new(c.i + 1, c.j),
            Direction::South => Coord::new(c.i, c.j.wrapping_sub(1)),
            Direction::West => Coord::new(c.i.wrapping_sub(1), c.j),
        };
        let mut diag = alpha;
        for (plus, minus) in [(Direction::North, Direction::South), (Direction::East, Direction::West)] {
            let weights: &[(Direction, f64)] = match (open(plus), open(minus)) {
                (true, true) => &[(plus, 1.0), (minus, 1.0)],
                (true, false) => &[(plus, 2.0)],
                (false, true) => &[(minus, 2.0)],
                (false, false) => &[],
            };
            for &(d, wgt) in weights {
                let col = position[&step(d)];
                a[row][col] -= wgt;
                diag += wgt;
            }
        }
        a[row][row] += diag;
        a[row][n] = if ks.is_visited(c) { 0.0 } else { s_scale };
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).expect("finite"))
            .expect("non-empty range");
        a.swap(col, pivot);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for r in rest.iter_mut() {
            let f = r[col] / pivot_row[col];
            if f != 0.0 {
                for (x, &y) in r[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * y;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = a[row][n];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(nodes.into_iter().zip(x).collect())
}
