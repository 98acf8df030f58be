//! Branch-and-bound over the LP engine: best-bound node selection with
//! depth-first plunging, most-fractional branching, warm starts, objective
//! cutoffs and deterministic work budgets.

use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use thiserror::Error;

use super::model::MilpModel;
use super::simplex::{BasisSnapshot, LpError, LpStatus, SimplexEngine, Start};
use super::work::WorkMeter;

#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Nominal time limit in seconds; enforced as a deterministic work
    /// budget (see [`super::work`]).
    pub time_limit: f64,
    pub integrality_tol: f64,
    pub feasibility_tol: f64,
    pub relative_gap_tol: f64,
    pub stop_at_first_feasible: bool,
    /// Prune every node whose bound reaches this value; with a cutoff the
    /// solver looks only for strictly better solutions.
    pub objective_cutoff: Option<f64>,
    pub rng_seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            time_limit: 7200.0,
            integrality_tol: 1e-6,
            feasibility_tol: 1e-7,
            relative_gap_tol: 1e-6,
            stop_at_first_feasible: false,
            objective_cutoff: None,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    FeasibleTimeLimit,
    InfeasibleProven,
    NoSolutionTimeLimit,
}

#[derive(Debug, Clone)]
pub struct MipResult {
    pub status: MipStatus,
    pub best_assignment: Option<Vec<f64>>,
    pub best_objective: f64,
    pub best_bound: f64,
    pub nodes_explored: u64,
    /// Real elapsed seconds; informational only.
    pub wall_time: f64,
    pub work_used: u64,
    /// Objective of each incumbent in the order found.
    pub incumbent_history: Vec<f64>,
    /// Bound of each node popped from the best-bound queue.
    pub bound_history: Vec<f64>,
}

impl MipResult {
    pub fn has_solution(&self) -> bool {
        self.best_assignment.is_some()
    }
}

#[derive(Debug, Error)]
pub enum MipError {
    #[error("warm start rejected: {0}")]
    WarmStartInfeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// An unexplored node: the branch fixes that define it, the parent's LP
/// bound, and the basis at the moment of branching.
struct OpenNode {
    bound: f64,
    seq: usize,
    path: Vec<(usize, bool)>,
    basis: Rc<BasisSnapshot>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap is a max-heap; invert for best-bound-first, break ties
        // by insertion order for determinism.
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(other.seq.cmp(&self.seq))
    }
}

enum NodeOutcome {
    Closed,
    Branch { assignment: Vec<f64> },
    Stop(MipStatus),
}

/// Branch-and-bound solver for one model. Construct, optionally attach a
/// warm start or a root hint, then call [`Mip::solve`].
pub struct Mip<'a> {
    model: &'a MilpModel,
    cfg: SolveConfig,
    warm_start: Option<Vec<f64>>,
    root_hint: Option<Vec<f64>>,
}

struct Search<'a> {
    model: &'a MilpModel,
    cfg: SolveConfig,
    binaries: Vec<usize>,
    engine: SimplexEngine,
    incumbent: Option<(Vec<f64>, f64)>,
    user_cutoff: Option<f64>,
    heap: BinaryHeap<OpenNode>,
    applied_path: Vec<(usize, bool)>,
    seq: usize,
    nodes_explored: u64,
    dive_bound: f64,
    incumbent_history: Vec<f64>,
    bound_history: Vec<f64>,
}

impl<'a> Mip<'a> {
    pub fn new(model: &'a MilpModel, cfg: SolveConfig) -> Self {
        Mip {
            model,
            cfg,
            warm_start: None,
            root_hint: None,
        }
    }

    /// Install a known-feasible assignment as the initial incumbent. It is
    /// validated against rows, bounds and integrality before acceptance.
    pub fn warm_start(mut self, assignment: Vec<f64>) -> Self {
        self.warm_start = Some(assignment);
        self
    }

    /// Guide the root LP towards a point without installing an incumbent.
    pub fn root_hint(mut self, point: Vec<f64>) -> Self {
        self.root_hint = Some(point);
        self
    }

    pub fn solve(self) -> Result<MipResult, MipError> {
        let started = Instant::now();
        let mut work = WorkMeter::from_seconds(self.cfg.time_limit);
        let out = self.solve_with_meter(&mut work);
        out.map(|mut r| {
            r.wall_time = started.elapsed().as_secs_f64();
            r
        })
    }

    /// Run against an externally managed budget (used by the matheuristic
    /// to charge sub-solves to a shared meter).
    pub fn solve_with_meter(self, work: &mut WorkMeter) -> Result<MipResult, MipError> {
        let started = Instant::now();
        let work_before = work.used();
        let cfg = self.cfg.clone();
        let binaries: Vec<usize> = self.model.binary_cols().collect();

        let mut search = Search {
            model: self.model,
            cfg: cfg.clone(),
            engine: SimplexEngine::from_model(self.model, cfg.feasibility_tol),
            binaries,
            incumbent: None,
            user_cutoff: cfg.objective_cutoff,
            heap: BinaryHeap::new(),
            applied_path: Vec::new(),
            seq: 0,
            nodes_explored: 0,
            dive_bound: f64::NEG_INFINITY,
            incumbent_history: Vec::new(),
            bound_history: Vec::new(),
        };

        if let Some(ws) = &self.warm_start {
            search.install_warm_start(ws)?;
        }

        let root_start = match &self.root_hint {
            Some(p) => Start::Point(p.clone()),
            None => match &search.incumbent {
                Some((a, _)) => Start::Point(a.clone()),
                None => Start::Cold,
            },
        };

        let status = search.run(root_start, work)?;
        let mut result = search.into_result(status);
        result.wall_time = started.elapsed().as_secs_f64();
        result.work_used = work.used() - work_before;
        Ok(result)
    }
}

impl<'a> Search<'a> {
    fn install_warm_start(&mut self, ws: &[f64]) -> Result<(), MipError> {
        if ws.len() != self.model.num_cols() {
            return Err(MipError::WarmStartInfeasible(format!(
                "assignment has {} values, model has {} columns",
                ws.len(),
                self.model.num_cols()
            )));
        }
        let int_viol = self.model.max_integrality_violation(ws);
        if int_viol > self.cfg.integrality_tol {
            return Err(MipError::WarmStartInfeasible(format!(
                "integrality violated by {int_viol:.3e}"
            )));
        }
        let viol = self.model.max_violation(ws);
        if viol > self.cfg.feasibility_tol * 100.0 {
            return Err(MipError::WarmStartInfeasible(format!(
                "row/bound violation {viol:.3e}"
            )));
        }
        let mut nice = ws.to_vec();
        for &b in &self.binaries {
            nice[b] = nice[b].round();
        }
        let obj = self.model.objective_value(&nice);
        self.incumbent_history.push(obj);
        self.incumbent = Some((nice, obj));
        Ok(())
    }

    fn cutoff(&self) -> f64 {
        let inc = self
            .incumbent
            .as_ref()
            .map_or(f64::INFINITY, |(_, o)| *o - 1e-9);
        inc.min(self.user_cutoff.unwrap_or(f64::INFINITY))
    }

    /// Global lower bound visible right now.
    fn global_bound(&self) -> f64 {
        let open = self.heap.peek().map_or(f64::INFINITY, |n| n.bound);
        open.min(self.dive_bound)
    }

    fn run(&mut self, root_start: Start, work: &mut WorkMeter) -> Result<MipStatus, MipError> {
        let mut pending_start = Some(root_start);
        loop {
            if work.exhausted() {
                return Ok(self.limit_status());
            }
            let lp = match pending_start.take() {
                Some(start) => self.engine.solve(start, work),
                None => self.engine.resume(work),
            };
            self.nodes_explored += 1;
            work.add(1 + self.engine.nrows as u64 / 512);

            let outcome = match lp {
                Err(LpError::Budget) => return Ok(self.limit_status()),
                Err(LpError::Numerical(msg)) => return Err(MipError::Numerical(msg)),
                Ok(res) => match res.status {
                    LpStatus::Unbounded => {
                        return Err(MipError::Numerical(
                            "relaxation unbounded despite finite bounds".to_string(),
                        ))
                    }
                    LpStatus::Infeasible => NodeOutcome::Closed,
                    LpStatus::Optimal => {
                        self.dive_bound = res.objective;
                        self.handle_optimal_relaxation(res.assignment, res.objective, work)?
                    }
                },
            };

            match outcome {
                NodeOutcome::Stop(status) => return Ok(status),
                NodeOutcome::Branch { assignment } => {
                    let (col, _) = most_fractional(
                        &self.binaries,
                        &assignment,
                        self.cfg.integrality_tol,
                    )
                    .or_else(|| most_fractional(&self.binaries, &assignment, 1e-14))
                    .expect("branch without fractional column");
                    let up_first = assignment[col] >= 0.5;
                    let mut sibling_path = self.applied_path.clone();
                    sibling_path.push((col, !up_first));
                    self.heap.push(OpenNode {
                        bound: self.dive_bound,
                        seq: self.seq,
                        path: sibling_path,
                        basis: Rc::new(self.engine.snapshot()),
                    });
                    self.seq += 1;
                    self.applied_path.push((col, up_first));
                    apply_bound(&mut self.engine, col, up_first);
                    // dive continues with the live basis
                }
                NodeOutcome::Closed => {
                    self.dive_bound = f64::INFINITY;
                    match self.next_open_node() {
                        NextNode::Exhausted => {
                            return Ok(if self.incumbent.is_some() {
                                MipStatus::Optimal
                            } else {
                                MipStatus::InfeasibleProven
                            });
                        }
                        NextNode::GapClosed => return Ok(MipStatus::Optimal),
                        NextNode::Jump(start) => pending_start = Some(start),
                    }
                }
            }
        }
    }

    fn handle_optimal_relaxation(
        &mut self,
        assignment: Vec<f64>,
        objective: f64,
        work: &mut WorkMeter,
    ) -> Result<NodeOutcome, MipError> {
        if objective >= self.cutoff() {
            return Ok(NodeOutcome::Closed);
        }
        match most_fractional(&self.binaries, &assignment, self.cfg.integrality_tol) {
            Some(_) => Ok(NodeOutcome::Branch { assignment }),
            None => {
                // Integral within tolerance: pin binaries at their rounded
                // values and re-optimize the continuous part exactly.
                match self.polish(&assignment, work)? {
                    Some((cand, obj)) => {
                        if obj < self.cutoff() {
                            self.incumbent_history.push(obj);
                            self.incumbent = Some((cand, obj));
                            if self.cfg.stop_at_first_feasible {
                                return Ok(NodeOutcome::Stop(MipStatus::FeasibleTimeLimit));
                            }
                        }
                        Ok(NodeOutcome::Closed)
                    }
                    // Rounding infeasible: separate on the least integral
                    // column (its child with the fix away from the rounded
                    // value is where a solution may hide).
                    None => Ok(NodeOutcome::Branch { assignment }),
                }
            }
        }
    }

    fn polish(
        &mut self,
        relaxed: &[f64],
        work: &mut WorkMeter,
    ) -> Result<Option<(Vec<f64>, f64)>, MipError> {
        for &b in &self.binaries {
            let v = relaxed[b].round();
            self.engine.set_col_bounds(b, v, v);
        }
        let solved = self.engine.resume(work);
        for &b in &self.binaries {
            self.engine.reset_col_bounds(b);
        }
        let path = self.applied_path.clone();
        for (col, up) in path {
            apply_bound(&mut self.engine, col, up);
        }
        match solved {
            Ok(res) if res.status == LpStatus::Optimal => {
                let mut cand = res.assignment;
                for &b in &self.binaries {
                    cand[b] = relaxed[b].round();
                }
                if self.model.max_violation(&cand) > self.cfg.feasibility_tol * 100.0 {
                    return Ok(None);
                }
                let obj = self.model.objective_value(&cand);
                Ok(Some((cand, obj)))
            }
            Ok(_) => Ok(None),
            Err(LpError::Budget) => Err(MipError::Numerical(
                "work budget exhausted during polish".into(),
            )),
            Err(LpError::Numerical(m)) => Err(MipError::Numerical(m)),
        }
    }

    fn next_open_node(&mut self) -> NextNode {
        loop {
            match self.heap.pop() {
                None => return NextNode::Exhausted,
                Some(open) => {
                    if open.bound >= self.cutoff() {
                        continue;
                    }
                    if let Some((_, inc_obj)) = &self.incumbent {
                        let gap = (inc_obj - open.bound) / inc_obj.abs().max(1.0);
                        if gap <= self.cfg.relative_gap_tol {
                            return NextNode::GapClosed;
                        }
                    }
                    self.bound_history.push(open.bound);
                    self.dive_bound = open.bound;
                    move_bounds(&mut self.engine, &mut self.applied_path, &open.path);
                    return NextNode::Jump(Start::Basis((*open.basis).clone()));
                }
            }
        }
    }

    fn limit_status(&self) -> MipStatus {
        if self.incumbent.is_some() {
            MipStatus::FeasibleTimeLimit
        } else {
            MipStatus::NoSolutionTimeLimit
        }
    }

    fn into_result(self, status: MipStatus) -> MipResult {
        let bound = match status {
            MipStatus::Optimal => self
                .incumbent
                .as_ref()
                .map_or(f64::INFINITY, |(_, o)| *o),
            MipStatus::InfeasibleProven => f64::INFINITY,
            _ => self.global_bound(),
        };
        let (assignment, objective) = match self.incumbent {
            Some((a, o)) => (Some(a), o),
            None => (None, f64::INFINITY),
        };
        MipResult {
            status,
            best_assignment: assignment,
            best_objective: objective,
            best_bound: bound,
            nodes_explored: self.nodes_explored,
            wall_time: 0.0,
            work_used: 0,
            incumbent_history: self.incumbent_history,
            bound_history: self.bound_history,
        }
    }
}

enum NextNode {
    Exhausted,
    GapClosed,
    Jump(Start),
}

/// Most fractional binary beyond `tol`, ties broken by lowest column index.
fn most_fractional(binaries: &[usize], x: &[f64], tol: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &b in binaries {
        let frac = (x[b] - x[b].round()).abs();
        if frac > tol {
            match best {
                Some((_, f)) if f >= frac => {}
                _ => best = Some((b, frac)),
            }
        }
    }
    best
}

fn apply_bound(engine: &mut SimplexEngine, col: usize, up: bool) {
    if up {
        engine.set_col_bounds(col, 1.0, 1.0);
    } else {
        engine.set_col_bounds(col, 0.0, 0.0);
    }
}

fn move_bounds(
    engine: &mut SimplexEngine,
    applied: &mut Vec<(usize, bool)>,
    target: &[(usize, bool)],
) {
    let common = applied
        .iter()
        .zip(target)
        .take_while(|(a, b)| a == b)
        .count();
    for &(col, _) in applied[common..].iter() {
        engine.reset_col_bounds(col);
    }
    applied.truncate(common);
    for &(col, up) in &target[common..] {
        apply_bound(engine, col, up);
        applied.push((col, up));
    }
}

/// Solve `model` to proven optimality (or until limits) by LP-based
/// branch-and-bound.
pub fn branch_and_bound(
    model: &MilpModel,
    cfg: SolveConfig,
    warm_start: Option<Vec<f64>>,
) -> Result<MipResult, MipError> {
    let mut mip = Mip::new(model, cfg);
    if let Some(ws) = warm_start {
        mip = mip.warm_start(ws);
    }
    mip.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::Sense;

    fn knapsack(weights: &[f64], profits: &[f64], cap: f64) -> MilpModel {
        let mut m = MilpModel::new();
        let xs: Vec<usize> = profits
            .iter()
            .enumerate()
            .map(|(i, &p)| m.add_binary(format!("x{i}"), -p))
            .collect();
        let terms: Vec<(usize, f64)> = xs.iter().zip(weights).map(|(&x, &w)| (x, w)).collect();
        m.add_row("cap", terms, Sense::Le, cap);
        m
    }

    #[test]
    fn degenerate_no_binaries_matches_lp() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 10.0, 1.0);
        m.add_row("r", vec![(x, 1.0)], Sense::Ge, 3.0);
        let res = branch_and_bound(&m, SolveConfig::default(), None).unwrap();
        assert_eq!(res.status, MipStatus::Optimal);
        assert!((res.best_objective - 3.0).abs() < 1e-9);
        assert_eq!(res.nodes_explored, 1);
    }

    #[test]
    fn small_knapsack_exact() {
        let m = knapsack(&[3.0, 4.0, 5.0, 6.0], &[3.0, 5.0, 6.0, 8.0], 10.0);
        let res = branch_and_bound(&m, SolveConfig::default(), None).unwrap();
        assert_eq!(res.status, MipStatus::Optimal);
        // best: items 1 and 3 (weights 4 + 6, profit 13)
        assert!((res.best_objective + 13.0).abs() < 1e-6);
    }

    #[test]
    fn warm_start_at_optimum_is_kept() {
        let m = knapsack(&[3.0, 4.0, 5.0, 6.0], &[3.0, 5.0, 6.0, 8.0], 10.0);
        let ws = vec![0.0, 1.0, 0.0, 1.0];
        let res = branch_and_bound(&m, SolveConfig::default(), Some(ws)).unwrap();
        assert_eq!(res.status, MipStatus::Optimal);
        assert!((res.best_objective + 13.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_warm_start_rejected() {
        let m = knapsack(&[6.0, 6.0], &[1.0, 1.0], 10.0);
        let err = branch_and_bound(&m, SolveConfig::default(), Some(vec![1.0, 1.0]));
        assert!(matches!(err, Err(MipError::WarmStartInfeasible(_))));
    }

    #[test]
    fn all_binaries_blocked_is_infeasible() {
        // every feasible solution needs at least one binary, but a row caps
        // their sum at zero
        let mut m = knapsack(&[1.0, 1.0], &[1.0, 1.0], 10.0);
        m.add_row("need", vec![(0, 1.0), (1, 1.0)], Sense::Ge, 1.0);
        m.add_row("block", vec![(0, 1.0), (1, 1.0)], Sense::Le, 0.0);
        let res = branch_and_bound(&m, SolveConfig::default(), None).unwrap();
        assert_eq!(res.status, MipStatus::InfeasibleProven);
        assert!(res.best_assignment.is_none());
    }

    #[test]
    fn cutoff_prunes_everything_when_no_better_exists() {
        let m = knapsack(&[3.0, 4.0], &[3.0, 5.0], 10.0);
        let mut cfg = SolveConfig::default();
        cfg.objective_cutoff = Some(-8.0); // optimum is exactly -8
        let res = branch_and_bound(&m, cfg, None).unwrap();
        assert_eq!(res.status, MipStatus::InfeasibleProven);
    }

    #[test]
    fn fix_column_respected() {
        let mut m = knapsack(&[3.0, 4.0], &[3.0, 5.0], 10.0);
        m.fix_column("x0", 1.0).unwrap();
        let res = branch_and_bound(&m, SolveConfig::default(), None).unwrap();
        let a = res.best_assignment.unwrap();
        assert_eq!(a[0], 1.0);
    }

    #[test]
    fn deterministic_node_counts() {
        let m = knapsack(
            &[3.0, 7.0, 4.0, 9.0, 2.0, 5.0],
            &[4.0, 9.0, 5.0, 11.0, 2.0, 7.0],
            17.0,
        );
        let r1 = branch_and_bound(&m, SolveConfig::default(), None).unwrap();
        let r2 = branch_and_bound(&m, SolveConfig::default(), None).unwrap();
        assert_eq!(r1.nodes_explored, r2.nodes_explored);
        assert_eq!(r1.incumbent_history, r2.incumbent_history);
        assert!((r1.best_objective - r2.best_objective).abs() < 1e-12);
    }

    #[test]
    fn bounds_monotone_over_run() {
        let m = knapsack(
            &[3.0, 7.0, 4.0, 9.0, 2.0, 5.0, 6.0, 8.0],
            &[4.0, 9.0, 5.0, 11.0, 2.0, 7.0, 8.0, 10.0],
            21.0,
        );
        let res = branch_and_bound(&m, SolveConfig::default(), None).unwrap();
        for w in res.bound_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "pop bounds regressed: {w:?}");
        }
        for w in res.incumbent_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "incumbents regressed: {w:?}");
        }
    }
}
