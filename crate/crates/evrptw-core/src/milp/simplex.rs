//! Bounded-variable primal simplex.
//!
//! Rows become equalities with a bounded logical (slack) column, so every
//! variable lives in an interval and non-basic variables sit at a finite
//! bound. The basis is factorized by eliminating slack columns first (they
//! are unit vectors, so elimination is free) and running a dense LU with
//! partial pivoting on the remaining structural core; pivots append
//! product-form eta vectors until the next refactorization.
//!
//! Phase 1 is the composite (big-M free) variant: it minimizes the total
//! bound violation of the basic variables and shares the pricing and ratio
//! test machinery with phase 2. Bland's rule engages after a run of
//! degenerate pivots to break cycling.

use thiserror::Error;

use super::model::{MilpModel, Sense};
use super::work::WorkMeter;

const REFACTOR_EVERY: usize = 64;
/// Degenerate-pivot run length after which Bland's rule takes over.
pub const STALL_THRESHOLD: usize = 1000;
const PIVOT_EPS: f64 = 1e-10;
const RATIO_EPS: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Basis snapshot: basic variable per row position plus the bound each
/// non-basic variable rests at.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSnapshot {
    pub basic: Vec<u32>,
    pub at_upper: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    /// Values of the structural columns (empty unless status is Optimal).
    pub assignment: Vec<f64>,
    pub objective: f64,
    pub basis: BasisSnapshot,
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("numerical failure in simplex: {0}")]
    Numerical(String),
    #[error("work budget exhausted")]
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(u32),
    AtLower,
    AtUpper,
}

/// How to seed the initial basis.
#[derive(Debug, Clone)]
pub enum Start {
    /// Slack basis, structural columns at their lower (else upper) bound.
    Cold,
    /// Slack basis, structural columns at the bound nearest to the given
    /// point. Useful to resume near a known-good assignment.
    Point(Vec<f64>),
    /// Resume from a previous basis.
    Basis(BasisSnapshot),
}

struct Eta {
    pos: usize,
    w: Vec<f64>,
}

#[derive(Default)]
struct Factor {
    /// Basis at the moment of factorization.
    basic: Vec<usize>,
    /// Basis positions holding structural columns, in core-column order.
    struct_pos: Vec<usize>,
    /// Basis positions holding slack columns, with their row.
    slack_pos: Vec<(usize, usize)>,
    /// Model rows covered by the dense core, in core-row order.
    core_rows: Vec<usize>,
    /// LU of the core (row-major, k x k) with row permutation `piv`.
    lu: Vec<f64>,
    piv: Vec<usize>,
    k: usize,
    etas: Vec<Eta>,
}

/// A simplex engine bound to one model's rows; working bounds can be
/// tightened and restored between solves, which is how branch-and-bound
/// drives it.
pub struct SimplexEngine {
    pub ncols: usize,
    pub nrows: usize,
    ntotal: usize,
    /// Structural columns, sparse by row.
    cols: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    model_lower: Vec<f64>,
    model_upper: Vec<f64>,
    state: Vec<VarState>,
    basic: Vec<usize>,
    x_basic: Vec<f64>,
    factor: Factor,
    factored: bool,
    feas_tol: f64,
    degenerate_run: usize,
    bland: bool,
    stall_threshold: usize,
}

impl SimplexEngine {
    pub fn from_model(model: &MilpModel, feas_tol: f64) -> Self {
        let ncols = model.num_cols();
        let nrows = model.num_rows();
        let ntotal = ncols + nrows;
        let mut cols = vec![Vec::new(); ncols];
        for (r, row) in model.rows.iter().enumerate() {
            for &(c, a) in &row.terms {
                cols[c].push((r, a));
            }
        }
        let mut lower = Vec::with_capacity(ntotal);
        let mut upper = Vec::with_capacity(ntotal);
        let mut cost = Vec::with_capacity(ntotal);
        for c in &model.columns {
            lower.push(c.lower);
            upper.push(c.upper);
            cost.push(c.objective);
        }
        for row in &model.rows {
            let (l, u) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lower.push(l);
            upper.push(u);
            cost.push(0.0);
        }
        SimplexEngine {
            ncols,
            nrows,
            ntotal,
            cols,
            rhs: model.rows.iter().map(|r| r.rhs).collect(),
            cost,
            model_lower: lower.clone(),
            model_upper: upper.clone(),
            lower,
            upper,
            state: vec![VarState::AtLower; ntotal],
            basic: Vec::new(),
            x_basic: Vec::new(),
            factor: Factor::default(),
            factored: false,
            feas_tol,
            degenerate_run: 0,
            bland: false,
            stall_threshold: STALL_THRESHOLD,
        }
    }

    /// Tighten one structural column's working bounds.
    pub fn set_col_bounds(&mut self, col: usize, lo: f64, hi: f64) {
        self.lower[col] = lo;
        self.upper[col] = hi;
    }

    pub fn reset_col_bounds(&mut self, col: usize) {
        self.lower[col] = self.model_lower[col];
        self.upper[col] = self.model_upper[col];
    }

    pub fn col_bounds(&self, col: usize) -> (f64, f64) {
        (self.lower[col], self.upper[col])
    }

    /// Solve from an explicit start.
    pub fn solve(&mut self, start: Start, work: &mut WorkMeter) -> Result<LpResult, LpError> {
        self.install_start(&start);
        self.factored = false;
        self.resume(work)
    }

    /// Re-optimize after bound changes, keeping the current basis. This is
    /// the hot path when branch-and-bound dives.
    pub fn resume(&mut self, work: &mut WorkMeter) -> Result<LpResult, LpError> {
        if !self.factored {
            self.refactorize(work)?;
        }
        self.recompute_basic_values();
        // Non-basic variables whose resting bound vanished must re-anchor.
        let mut moved = false;
        for j in 0..self.ntotal {
            match self.state[j] {
                VarState::AtLower if !self.lower[j].is_finite() => {
                    self.state[j] = VarState::AtUpper;
                    moved = true;
                }
                VarState::AtUpper if !self.upper[j].is_finite() => {
                    self.state[j] = VarState::AtLower;
                    moved = true;
                }
                _ => {}
            }
        }
        if moved {
            self.recompute_basic_values();
        }
        self.run_phases(work)
    }

    fn run_phases(&mut self, work: &mut WorkMeter) -> Result<LpResult, LpError> {
        let mut iterations = 0usize;

        // Phase 1: drive out bound violations of the basic variables.
        loop {
            if self.max_basic_violation() <= self.feas_tol {
                break;
            }
            let g: Vec<f64> = self
                .basic
                .iter()
                .enumerate()
                .map(|(pos, &v)| {
                    let x = self.x_basic[pos];
                    if x < self.lower[v] - self.feas_tol {
                        -1.0
                    } else if x > self.upper[v] + self.feas_tol {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let y = self.btran(&g);
            match self.price(&y, None) {
                Some((j, sigma)) => {
                    if self.step(j, sigma, true, work)?.is_none() {
                        return Err(LpError::Numerical(
                            "unblocked improving ray in phase 1".to_string(),
                        ));
                    }
                }
                None => {
                    // Confirm on a fresh factorization before giving up.
                    self.refactorize(work)?;
                    self.recompute_basic_values();
                    if self.max_basic_violation() <= self.feas_tol {
                        break;
                    }
                    let y = self.btran(&g);
                    if self.price(&y, None).is_none() {
                        return Ok(self.finish(LpStatus::Infeasible, iterations));
                    }
                }
            }
            iterations += 1;
            self.maintain(iterations, work)?;
        }

        // Phase 2: optimize the true objective.
        loop {
            let cb: Vec<f64> = self.basic.iter().map(|&v| self.cost[v]).collect();
            let y = self.btran(&cb);
            match self.price(&y, Some(true)) {
                Some((j, sigma)) => {
                    if self.step(j, sigma, false, work)?.is_none() {
                        return Ok(self.finish(LpStatus::Unbounded, iterations));
                    }
                }
                None => {
                    self.refactorize(work)?;
                    self.recompute_basic_values();
                    let cb: Vec<f64> = self.basic.iter().map(|&v| self.cost[v]).collect();
                    let y = self.btran(&cb);
                    if self.price(&y, Some(true)).is_none() {
                        return Ok(self.finish(LpStatus::Optimal, iterations));
                    }
                }
            }
            iterations += 1;
            self.maintain(iterations, work)?;
        }
    }

    fn install_start(&mut self, start: &Start) {
        self.degenerate_run = 0;
        self.bland = false;
        match start {
            Start::Basis(snap) if snap.basic.len() == self.nrows => {
                self.basic = snap.basic.iter().map(|&v| v as usize).collect();
                for j in 0..self.ntotal {
                    self.state[j] = if j < snap.at_upper.len() && snap.at_upper[j] {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                }
                for (pos, &v) in self.basic.iter().enumerate() {
                    self.state[v] = VarState::Basic(pos as u32);
                }
            }
            Start::Point(point) => {
                self.slack_basis();
                for j in 0..self.ncols.min(point.len()) {
                    let lo = self.lower[j];
                    let hi = self.upper[j];
                    if hi.is_finite() && (point[j] - hi).abs() < (point[j] - lo).abs() {
                        self.state[j] = VarState::AtUpper;
                    }
                }
            }
            _ => self.slack_basis(),
        }
        for j in 0..self.ntotal {
            match self.state[j] {
                VarState::AtLower if !self.lower[j].is_finite() => {
                    self.state[j] = VarState::AtUpper;
                }
                VarState::AtUpper if !self.upper[j].is_finite() => {
                    self.state[j] = VarState::AtLower;
                }
                _ => {}
            }
        }
    }

    fn slack_basis(&mut self) {
        self.basic = (self.ncols..self.ntotal).collect();
        for j in 0..self.ncols {
            self.state[j] = if self.lower[j].is_finite() {
                VarState::AtLower
            } else {
                VarState::AtUpper
            };
        }
        for (pos, v) in (self.ncols..self.ntotal).enumerate() {
            self.state[v] = VarState::Basic(pos as u32);
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
            VarState::Basic(_) => unreachable!("basic variable has no resting bound"),
        }
    }

    fn refactorize(&mut self, work: &mut WorkMeter) -> Result<(), LpError> {
        let mut attempts = 0;
        loop {
            match self.try_refactorize(work) {
                Ok(()) => return Ok(()),
                Err(RefactorFail::Singular(pos)) => {
                    attempts += 1;
                    if attempts > self.nrows + 1 {
                        return Err(LpError::Numerical(
                            "could not repair singular basis".to_string(),
                        ));
                    }
                    self.repair_singular(pos);
                }
                Err(RefactorFail::Broken(msg)) => return Err(LpError::Numerical(msg)),
            }
        }
    }

    fn try_refactorize(&mut self, work: &mut WorkMeter) -> Result<(), RefactorFail> {
        let m = self.nrows;
        let mut slack_of_row: Vec<Option<usize>> = vec![None; m];
        let mut struct_pos = Vec::new();
        for (pos, &v) in self.basic.iter().enumerate() {
            if v >= self.ncols {
                slack_of_row[v - self.ncols] = Some(pos);
            } else {
                struct_pos.push(pos);
            }
        }
        let core_rows: Vec<usize> = (0..m).filter(|&r| slack_of_row[r].is_none()).collect();
        let k = core_rows.len();
        if k != struct_pos.len() {
            return Err(RefactorFail::Broken(
                "basis bookkeeping out of sync".to_string(),
            ));
        }
        let mut row_index: Vec<usize> = vec![usize::MAX; m];
        for (i, &r) in core_rows.iter().enumerate() {
            row_index[r] = i;
        }
        let mut lu = vec![0.0f64; k * k];
        for (cidx, &pos) in struct_pos.iter().enumerate() {
            let col = self.basic[pos];
            for &(r, a) in &self.cols[col] {
                if row_index[r] != usize::MAX {
                    lu[row_index[r] * k + cidx] = a;
                }
            }
        }
        work.add(1 + (k as u64).pow(3) / 12_288);

        let mut piv: Vec<usize> = (0..k).collect();
        for col in 0..k {
            let mut best = col;
            let mut best_abs = lu[piv[col] * k + col].abs();
            for r in (col + 1)..k {
                let v = lu[piv[r] * k + col].abs();
                if v > best_abs {
                    best_abs = v;
                    best = r;
                }
            }
            if best_abs < 1e-11 {
                return Err(RefactorFail::Singular(struct_pos[col]));
            }
            piv.swap(col, best);
            let prow = piv[col];
            let pval = lu[prow * k + col];
            for r in (col + 1)..k {
                let row = piv[r];
                let factor = lu[row * k + col] / pval;
                lu[row * k + col] = factor;
                if factor != 0.0 {
                    for c in (col + 1)..k {
                        lu[row * k + c] -= factor * lu[prow * k + c];
                    }
                }
            }
        }

        self.factor = Factor {
            basic: self.basic.clone(),
            struct_pos,
            slack_pos: slack_of_row
                .iter()
                .enumerate()
                .filter_map(|(r, p)| p.map(|pos| (pos, r)))
                .collect(),
            core_rows,
            lu,
            piv,
            k,
            etas: Vec::new(),
        };
        self.factored = true;
        Ok(())
    }

    /// Replace the structural basic at `pos` by the first non-basic slack;
    /// the evicted variable rests at its nearest finite bound and phase 1
    /// restores feasibility afterwards.
    fn repair_singular(&mut self, pos: usize) {
        let old = self.basic[pos];
        let row = (0..self.nrows)
            .find(|r| !matches!(self.state[self.ncols + r], VarState::Basic(_)))
            .expect("some slack must be non-basic when the core is singular");
        let slack = self.ncols + row;
        self.basic[pos] = slack;
        self.state[slack] = VarState::Basic(pos as u32);
        self.state[old] = if self.lower[old].is_finite() {
            VarState::AtLower
        } else {
            VarState::AtUpper
        };
    }

    fn core_solve(&self, rhs: &mut Vec<f64>) {
        let k = self.factor.k;
        let lu = &self.factor.lu;
        let piv = &self.factor.piv;
        let mut y = vec![0.0f64; k];
        for c in 0..k {
            let mut v = rhs[piv[c]];
            let row = &lu[piv[c] * k..piv[c] * k + c];
            for (j, &l) in row.iter().enumerate() {
                v -= l * y[j];
            }
            y[c] = v;
        }
        for c in (0..k).rev() {
            let mut v = y[c];
            let row = &lu[piv[c] * k..(piv[c] + 1) * k];
            for j in (c + 1)..k {
                v -= row[j] * rhs[j];
            }
            rhs[c] = v / row[c];
        }
    }

    fn core_solve_transposed(&self, rhs: &mut Vec<f64>) {
        let k = self.factor.k;
        let lu = &self.factor.lu;
        let piv = &self.factor.piv;
        // Factorization is P M = L U (rows permuted by piv); solving
        // M' z = rhs goes U' v = rhs, then L' w = v, then z = P' w.
        let mut v = vec![0.0f64; k];
        for c in 0..k {
            let mut s = rhs[c];
            for j in 0..c {
                s -= lu[piv[j] * k + c] * v[j];
            }
            v[c] = s / lu[piv[c] * k + c];
        }
        let mut w = vec![0.0f64; k];
        for c in (0..k).rev() {
            let mut s = v[c];
            for j in (c + 1)..k {
                s -= lu[piv[j] * k + c] * w[j];
            }
            w[c] = s;
        }
        for c in 0..k {
            rhs[piv[c]] = w[c];
        }
    }

    /// Solve B z = a for a dense row-space right-hand side; the result is
    /// indexed by basis position.
    fn ftran_dense(&self, a: &[f64]) -> Vec<f64> {
        let f = &self.factor;
        let mut core_rhs: Vec<f64> = f.core_rows.iter().map(|&r| a[r]).collect();
        if f.k > 0 {
            self.core_solve(&mut core_rhs);
        }
        let mut out = vec![0.0f64; self.nrows];
        if !f.slack_pos.is_empty() {
            let mut acc = vec![0.0f64; self.nrows];
            for (ci, &pos) in f.struct_pos.iter().enumerate() {
                let col = f.basic[pos];
                let z = core_rhs[ci];
                if z != 0.0 {
                    for &(r, v) in &self.cols[col] {
                        acc[r] += v * z;
                    }
                }
            }
            for &(pos, row) in &f.slack_pos {
                out[pos] = a[row] - acc[row];
            }
        }
        for (ci, &pos) in f.struct_pos.iter().enumerate() {
            out[pos] = core_rhs[ci];
        }
        for eta in &f.etas {
            let zp = out[eta.pos] / eta.w[eta.pos];
            for (i, &wi) in eta.w.iter().enumerate() {
                out[i] -= wi * zp;
            }
            out[eta.pos] = zp;
        }
        out
    }

    fn ftran_col(&self, j: usize) -> Vec<f64> {
        let mut a = vec![0.0f64; self.nrows];
        if j < self.ncols {
            for &(r, v) in &self.cols[j] {
                a[r] = v;
            }
        } else {
            a[j - self.ncols] = 1.0;
        }
        self.ftran_dense(&a)
    }

    /// Solve y' B = c' for position-indexed costs `c`; result in row space.
    fn btran(&self, c_basic: &[f64]) -> Vec<f64> {
        let f = &self.factor;
        let mut c = c_basic.to_vec();
        for eta in f.etas.iter().rev() {
            let mut v = c[eta.pos];
            for (i, &wi) in eta.w.iter().enumerate() {
                if i != eta.pos {
                    v -= wi * c[i];
                }
            }
            c[eta.pos] = v / eta.w[eta.pos];
        }
        let mut y = vec![0.0f64; self.nrows];
        for &(pos, row) in &f.slack_pos {
            y[row] = c[pos];
        }
        if f.k > 0 {
            let mut rhs = vec![0.0f64; f.k];
            for (ci, &pos) in f.struct_pos.iter().enumerate() {
                let col = f.basic[pos];
                let mut v = c[pos];
                for &(r, a) in &self.cols[col] {
                    if y[r] != 0.0 {
                        v -= a * y[r];
                    }
                }
                rhs[ci] = v;
            }
            self.core_solve_transposed(&mut rhs);
            for (ci, &r) in f.core_rows.iter().enumerate() {
                y[r] = rhs[ci];
            }
        }
        y
    }

    fn recompute_basic_values(&mut self) {
        let mut rhs_eff = self.rhs.clone();
        for j in 0..self.ntotal {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let v = self.nonbasic_value(j);
            if v != 0.0 {
                if j < self.ncols {
                    for &(r, a) in &self.cols[j] {
                        rhs_eff[r] -= a * v;
                    }
                } else {
                    rhs_eff[j - self.ncols] -= v;
                }
            }
        }
        self.x_basic = self.ftran_dense(&rhs_eff);
    }

    fn max_basic_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (pos, &v) in self.basic.iter().enumerate() {
            let x = self.x_basic[pos];
            worst = worst.max(self.lower[v] - x).max(x - self.upper[v]);
        }
        worst
    }

    fn pivot_work(&self) -> u64 {
        let k = self.factor.k as u64;
        let m = self.nrows as u64;
        1 + (k * k + 24 * m * (1 + self.factor.etas.len() as u64)) / 4096
    }

    fn maintain(&mut self, iterations: usize, work: &mut WorkMeter) -> Result<(), LpError> {
        if self.factor.etas.len() >= REFACTOR_EVERY {
            self.refactorize(work)?;
            self.recompute_basic_values();
        }
        if work.exhausted() {
            return Err(LpError::Budget);
        }
        let cap = 2000 * (self.nrows + self.ntotal) + 20_000;
        if iterations > cap {
            return Err(LpError::Numerical(format!(
                "no convergence after {iterations} pivots"
            )));
        }
        Ok(())
    }

    /// Pick an entering variable: Dantzig by default, Bland under stall.
    /// `costs` is None in phase 1, where every non-basic phase cost is zero.
    fn price(&self, y: &[f64], costs: Option<bool>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ntotal {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            if self.lower[j] == self.upper[j] {
                continue; // fixed
            }
            let cj = if costs.is_some() { self.cost[j] } else { 0.0 };
            let d = cj - self.col_dot(j, y);
            let (eligible, sigma) = match self.state[j] {
                VarState::AtLower => (d < -REDUCED_COST_TOL, 1.0),
                VarState::AtUpper => (d > REDUCED_COST_TOL, -1.0),
                VarState::Basic(_) => unreachable!(),
            };
            if !eligible {
                continue;
            }
            if self.bland {
                return Some((j, sigma));
            }
            let score = d.abs();
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((j, sigma, score));
            }
        }
        best.map(|(j, sigma, _)| (j, sigma))
    }

    fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.ncols {
            self.cols[j].iter().map(|&(r, a)| a * y[r]).sum()
        } else {
            y[j - self.ncols]
        }
    }

    /// One pivot (or bound flip) of entering variable `j` in direction
    /// `sigma`. Returns `Ok(None)` when the improving ray is unblocked.
    fn step(
        &mut self,
        j: usize,
        sigma: f64,
        phase1: bool,
        work: &mut WorkMeter,
    ) -> Result<Option<()>, LpError> {
        work.add(self.pivot_work());
        let alpha = self.ftran_col(j);
        let own_span = self.upper[j] - self.lower[j];
        let mut t_best = own_span; // may be +inf
        let mut leaving: Option<(usize, bool)> = None; // (position, leaves at upper)

        for (pos, &v) in self.basic.iter().enumerate() {
            let rate = sigma * alpha[pos]; // x_basic[pos] moves at -rate
            if rate.abs() <= PIVOT_EPS {
                continue;
            }
            let x = self.x_basic[pos];
            let lo = self.lower[v];
            let hi = self.upper[v];
            let below = phase1 && x < lo - self.feas_tol;
            let above = phase1 && x > hi + self.feas_tol;
            let (t, at_upper) = if below {
                if rate < 0.0 {
                    ((x - lo) / rate, false)
                } else {
                    continue; // moving further below; charged by phase cost
                }
            } else if above {
                if rate > 0.0 {
                    ((x - hi) / rate, true)
                } else {
                    continue;
                }
            } else if rate > 0.0 {
                if !lo.is_finite() {
                    continue;
                }
                ((x - lo) / rate, false)
            } else {
                if !hi.is_finite() {
                    continue;
                }
                ((x - hi) / rate, true)
            };
            let t = t.max(0.0);
            let take = match leaving {
                None => t < t_best,
                Some((cur, _)) => {
                    if t < t_best - RATIO_EPS {
                        true
                    } else if t > t_best + RATIO_EPS {
                        false
                    } else if self.bland {
                        self.basic[pos] < self.basic[cur]
                    } else {
                        alpha[pos].abs() > alpha[cur].abs()
                    }
                }
            };
            if take {
                t_best = t;
                leaving = Some((pos, at_upper));
            }
        }

        if leaving.is_none() && !own_span.is_finite() {
            return Ok(None); // unbounded ray
        }

        if t_best.abs() <= RATIO_EPS {
            self.degenerate_run += 1;
            if self.degenerate_run >= self.stall_threshold {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }

        match leaving {
            None => {
                // Bound-to-bound flip of the entering variable.
                for (pos, a) in alpha.iter().enumerate() {
                    self.x_basic[pos] -= sigma * t_best * a;
                }
                self.state[j] = match self.state[j] {
                    VarState::AtLower => VarState::AtUpper,
                    VarState::AtUpper => VarState::AtLower,
                    VarState::Basic(_) => unreachable!(),
                };
                Ok(Some(()))
            }
            Some((pos, at_upper)) => {
                if alpha[pos].abs() < PIVOT_EPS {
                    return Err(LpError::Numerical("vanishing pivot element".to_string()));
                }
                let enter_value = self.nonbasic_value(j) + sigma * t_best;
                for (p, a) in alpha.iter().enumerate() {
                    self.x_basic[p] -= sigma * t_best * a;
                }
                let old = self.basic[pos];
                self.state[old] = if at_upper {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
                self.basic[pos] = j;
                self.state[j] = VarState::Basic(pos as u32);
                self.x_basic[pos] = enter_value;
                self.factor.etas.push(Eta { pos, w: alpha });
                Ok(Some(()))
            }
        }
    }

    fn finish(&mut self, status: LpStatus, iterations: usize) -> LpResult {
        let assignment = if status == LpStatus::Optimal {
            self.current_assignment()
        } else {
            Vec::new()
        };
        let objective = assignment
            .iter()
            .zip(&self.cost)
            .map(|(x, c)| x * c)
            .sum();
        LpResult {
            status,
            objective,
            basis: self.snapshot(),
            iterations,
            assignment,
        }
    }

    pub fn current_assignment(&self) -> Vec<f64> {
        let mut x = vec![0.0f64; self.ncols];
        for (j, slot) in x.iter_mut().enumerate() {
            *slot = match self.state[j] {
                VarState::Basic(pos) => self.x_basic[pos as usize],
                VarState::AtLower => self.lower[j],
                VarState::AtUpper => self.upper[j],
            };
        }
        x
    }

    pub fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot {
            basic: self.basic.iter().map(|&v| v as u32).collect(),
            at_upper: (0..self.ntotal)
                .map(|j| matches!(self.state[j], VarState::AtUpper))
                .collect(),
        }
    }
}

enum RefactorFail {
    Singular(usize),
    Broken(String),
}

/// Solve the LP relaxation of `model` (integrality dropped, bounds kept).
pub fn solve_lp(
    model: &MilpModel,
    basis_hint: Option<BasisSnapshot>,
    feas_tol: f64,
    work: &mut WorkMeter,
) -> Result<LpResult, LpError> {
    let mut engine = SimplexEngine::from_model(model, feas_tol);
    let start = match basis_hint {
        Some(b) => Start::Basis(b),
        None => Start::Cold,
    };
    engine.solve(start, work)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::{MilpModel, Sense};

    fn solve(model: &MilpModel) -> LpResult {
        let mut work = WorkMeter::unlimited();
        solve_lp(model, None, 1e-7, &mut work).unwrap()
    }

    #[test]
    fn single_var_lower_bounded_by_row() {
        // minimize x subject to x >= 3, x in [0, 10]
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 10.0, 1.0);
        m.add_row("r", vec![(x, 1.0)], Sense::Ge, 3.0);
        let res = solve(&m);
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.objective - 3.0).abs() < 1e-9);
        assert!((res.assignment[x] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn two_var_knapsack_relaxation() {
        // min -x - y subject to x + y <= 1, x, y in [0, 1]
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 1.0, -1.0);
        let y = m.add_continuous("y", 0.0, 1.0, -1.0);
        m.add_row("cap", vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        let res = solve(&m);
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.objective + 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 1.0, 1.0);
        m.add_row("r", vec![(x, 1.0)], Sense::Ge, 2.0);
        let res = solve(&m);
        assert_eq!(res.status, LpStatus::Infeasible);
    }

    #[test]
    fn equality_rows_work() {
        // min x + y s.t. x + y = 2, x - y = 0 -> x = y = 1
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 5.0, 1.0);
        let y = m.add_continuous("y", 0.0, 5.0, 1.0);
        m.add_row("sum", vec![(x, 1.0), (y, 1.0)], Sense::Eq, 2.0);
        m.add_row("diff", vec![(x, 1.0), (y, -1.0)], Sense::Eq, 0.0);
        let res = solve(&m);
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.assignment[x] - 1.0).abs() < 1e-9);
        assert!((res.assignment[y] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_lower_bounds() {
        // min x subject to x >= -4 via bound only
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", -4.0, 4.0, 1.0);
        let y = m.add_continuous("y", -1.0, 1.0, -2.0);
        m.add_row("mix", vec![(x, 1.0), (y, 1.0)], Sense::Ge, -3.0);
        let res = solve(&m);
        assert_eq!(res.status, LpStatus::Optimal);
        // y -> 1 (cost -2), then x >= -4 and x >= -3 - 1 = -4
        assert!((res.objective - (-4.0 - 2.0)).abs() < 1e-9);
    }

    #[test]
    fn warm_basis_reaches_same_optimum() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 10.0, -1.0);
        let y = m.add_continuous("y", 0.0, 10.0, -2.0);
        m.add_row("r1", vec![(x, 1.0), (y, 2.0)], Sense::Le, 10.0);
        m.add_row("r2", vec![(x, 1.0), (y, -1.0)], Sense::Le, 4.0);
        let cold = solve(&m);
        let mut work = WorkMeter::unlimited();
        let warm = solve_lp(&m, Some(cold.basis.clone()), 1e-7, &mut work).unwrap();
        assert_eq!(warm.status, LpStatus::Optimal);
        assert!((warm.objective - cold.objective).abs() < 1e-9);
        assert!(warm.iterations <= cold.iterations);
    }
}
