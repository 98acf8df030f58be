//! Variable neighborhood search branching: local-branching constraints over
//! the routing binaries turn the MILP solver into a neighborhood search,
//! with the neighborhood radius `k` growing on failure and a random-radius
//! shake once `k_max` is exhausted.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formulation::{
    decode_solution, encode_solution, model_objective, DecodeError, EncodeError, VariableMap,
};
use crate::graph::{ExpandedGraph, VertexRole};
use crate::instance::Instance;
use crate::milp::{
    Mip, MilpModel, MipError, MipStatus, RowHandle, Sense, SolveConfig, WorkMeter,
    TICKS_PER_SECOND,
};
use crate::schedule::{canonical_route, PlanItem};
use crate::solution::{Route, Solution, SolverInfo, VisitKind};
use crate::validate::SIM_TOL;

#[derive(Debug, Clone)]
pub struct VnsbConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub k_step: usize,
    /// Nominal seconds per sub-MILP solve.
    pub sub_time_limit: f64,
    /// Nominal seconds for the whole run.
    pub total_time_limit: f64,
    pub rng_seed: u64,
    pub improvement_eps: f64,
    /// Nominal seconds granted to the first-feasible MILP seeding attempt.
    pub seed_time_limit: f64,
}

impl Default for VnsbConfig {
    fn default() -> Self {
        VnsbConfig {
            k_min: 3,
            k_max: 10,
            k_step: 1,
            sub_time_limit: 5.0,
            total_time_limit: 7200.0,
            rng_seed: 0,
            improvement_eps: 1e-6,
            seed_time_limit: 30.0,
        }
    }
}

impl VnsbConfig {
    fn check(&self) {
        assert!(3 <= self.k_min, "k_min below the smallest feasible radius");
        assert!(self.k_min <= self.k_max, "k_min exceeds k_max");
        assert!(self.sub_time_limit > 0.0);
        assert!(self.k_step >= 1);
    }
}

/// Best known feasible point: the raw binary assignment (the local
/// branching center) plus its decoded solution and objective.
#[derive(Debug, Clone)]
pub struct Incumbent {
    pub assignment: Vec<f64>,
    pub solution: Solution,
    pub objective: f64,
}

/// One line of the per-iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub k: usize,
    pub sub_status: String,
    pub incumbent_objective: f64,
    pub elapsed_s: f64,
}

impl TraceRow {
    pub fn csv_header() -> &'static str {
        "iteration,k,sub_status,incumbent_objective,elapsed_s"
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{:.9},{:.6}",
            self.iteration, self.k, self.sub_status, self.incumbent_objective, self.elapsed_s
        )
    }
}

#[derive(Debug, Error)]
pub enum VnsbError {
    #[error("no feasible solution found while seeding")]
    NoFeasibleFound,
    #[error("assignments disagree on the routing column set")]
    ColumnSetMismatch,
    #[error(transparent)]
    Mip(#[from] MipError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// Number of routing binaries on which two assignments disagree.
pub fn hamming_distance(a: &[f64], b: &[f64], vmap: &VariableMap) -> Result<usize, VnsbError> {
    let need = vmap.x.iter().max().map_or(0, |&c| c + 1);
    if a.len() < need || b.len() < need {
        return Err(VnsbError::ColumnSetMismatch);
    }
    Ok(vmap
        .x
        .iter()
        .filter(|&&col| (a[col].round() - b[col].round()).abs() > 0.5)
        .count())
}

/// Push the local branching rows `lower <= Delta(x, center) <= upper` where
/// `Delta = sum_{center=1}(1 - x) + sum_{center=0} x`. Handles are popped in
/// reverse order via `remove_row`.
pub fn local_branching_rows(
    model: &mut MilpModel,
    vmap: &VariableMap,
    center: &[f64],
    lower: usize,
    upper: usize,
) -> Vec<RowHandle> {
    assert!(lower <= upper);
    let mut ones = 0usize;
    let mut terms = Vec::with_capacity(vmap.x.len());
    for &col in &vmap.x {
        if center[col].round() >= 1.0 {
            ones += 1;
            terms.push((col, -1.0));
        } else {
            terms.push((col, 1.0));
        }
    }
    let mut handles = Vec::with_capacity(2);
    handles.push(model.add_row(
        "lb_upper",
        terms.clone(),
        Sense::Le,
        upper as f64 - ones as f64,
    ));
    if lower > 0 {
        handles.push(model.add_row(
            "lb_lower",
            terms,
            Sense::Ge,
            lower as f64 - ones as f64,
        ));
    }
    handles
}

fn pop_rows(model: &mut MilpModel, handles: Vec<RowHandle>) {
    for h in handles.into_iter().rev() {
        model
            .remove_row(h)
            .expect("local branching rows pop in LIFO order");
    }
}

// ---------------------------------------------------------------------------
// Constructive seeding heuristic
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stop {
    Customer(usize),
    Station { station: usize, target: f64 },
}

struct Builder<'a> {
    inst: &'a Instance,
    clone_budget: Vec<usize>,
    routes: Vec<Vec<Stop>>,
    max_routes: usize,
}

impl<'a> Builder<'a> {
    fn items(&self, stops: &[Stop]) -> Vec<PlanItem<'a>> {
        stops
            .iter()
            .map(|s| match *s {
                Stop::Customer(c) => PlanItem {
                    node: &self.inst.customers[c],
                    recharge_to: None,
                },
                Stop::Station { station, target } => PlanItem {
                    node: &self.inst.stations[station],
                    recharge_to: Some(target),
                },
            })
            .collect()
    }

    /// Canonical duration if the route is fully feasible.
    fn evaluate(&self, stops: &[Stop]) -> Option<f64> {
        let p = &self.inst.params;
        let route = canonical_route(self.inst, &self.items(stops));
        let mut load = 0.0;
        for (vi, v) in route.vertices.iter().enumerate() {
            if v.battery_on_arrival < -SIM_TOL {
                return None;
            }
            if v.kind == VisitKind::Customer {
                let node = self
                    .inst
                    .customers
                    .iter()
                    .find(|c| c.id == v.id)
                    .expect("customer id");
                if v.arrival.max(node.ready) > node.due + SIM_TOL {
                    return None;
                }
                load += node.demand;
            }
            if load > p.load_capacity + SIM_TOL {
                return None;
            }
            if vi + 1 == route.vertices.len() && v.arrival > self.inst.horizon() + SIM_TOL {
                return None;
            }
        }
        if route.departure() < self.inst.depot.ready - SIM_TOL {
            return None;
        }
        Some(route.duration())
    }

    /// Arrival battery levels along [depot, stops.., depot]; index i is the
    /// level arriving at position i.
    fn battery_profile(&self, stops: &[Stop]) -> Vec<f64> {
        let p = &self.inst.params;
        let mut levels = vec![p.battery_capacity];
        let mut level = p.battery_capacity;
        let node_of = |s: &Stop| match *s {
            Stop::Customer(c) => &self.inst.customers[c],
            Stop::Station { station, .. } => &self.inst.stations[station],
        };
        let mut prev = &self.inst.depot;
        for s in stops {
            let node = node_of(s);
            level -= p.consumption_rate * prev.distance_to(node);
            levels.push(level);
            if let Stop::Station { target, .. } = s {
                level = level.max(*target).min(p.battery_capacity);
            }
            prev = node;
        }
        level -= p.consumption_rate * prev.distance_to(&self.inst.depot);
        levels.push(level);
        levels
    }

    fn node_of(&self, s: &Stop) -> &'a crate::instance::Node {
        match *s {
            Stop::Customer(c) => &self.inst.customers[c],
            Stop::Station { station, .. } => &self.inst.stations[station],
        }
    }

    /// Set every station target to the minimum level that reaches the next
    /// recharge opportunity (or the depot). Returns false when even a full
    /// battery cannot bridge a gap.
    fn set_minimal_targets(&self, stops: &mut [Stop]) -> bool {
        let p = &self.inst.params;
        for i in 0..stops.len() {
            if let Stop::Station { station, .. } = stops[i] {
                let mut dist = 0.0;
                let mut prev = &self.inst.stations[station];
                let mut bridged = false;
                for item in stops[i + 1..].iter() {
                    let node = self.node_of(item);
                    dist += prev.distance_to(node);
                    if matches!(item, Stop::Station { .. }) {
                        bridged = true;
                        break;
                    }
                    prev = node;
                }
                if !bridged {
                    dist += prev.distance_to(&self.inst.depot);
                }
                let needed = p.consumption_rate * dist;
                if needed > p.battery_capacity + SIM_TOL {
                    return false;
                }
                let arrival = self.battery_profile(stops)[i + 1];
                let target = needed.max(arrival).min(p.battery_capacity);
                stops[i] = Stop::Station { station, target };
            }
        }
        true
    }

    /// Insert stations until the battery never goes negative; targets are
    /// the minimal feasible levels. `budget` tracks remaining clones.
    fn repair_battery(&self, stops: &mut Vec<Stop>, budget: &mut [usize]) -> bool {
        let p = &self.inst.params;
        for _round in 0..stops.len() + 4 {
            if !self.set_minimal_targets(stops) {
                return false;
            }
            let profile = self.battery_profile(stops);
            let Some(fail) = profile.iter().position(|&b| b < -SIM_TOL) else {
                return true;
            };
            // fail arrives at position `fail`; insert into the gap before it.
            let gap = fail - 1; // stop index to insert at (0 = right after depot)
            let prev_node = if gap == 0 {
                &self.inst.depot
            } else {
                self.node_of(&stops[gap - 1])
            };
            let next_node = if gap == stops.len() {
                &self.inst.depot
            } else {
                self.node_of(&stops[gap])
            };
            let depart_level = if gap == 0 {
                p.battery_capacity
            } else {
                match stops[gap - 1] {
                    Stop::Station { target, .. } => target.max(profile[gap]),
                    _ => profile[gap],
                }
            };
            let mut best: Option<(usize, f64)> = None;
            for (si, snode) in self.inst.stations.iter().enumerate() {
                if budget[si] == 0 {
                    continue;
                }
                let to_station = prev_node.distance_to(snode);
                if depart_level - p.consumption_rate * to_station < -SIM_TOL {
                    continue; // cannot even reach this station
                }
                let detour =
                    to_station + snode.distance_to(next_node) - prev_node.distance_to(next_node);
                match best {
                    Some((_, d)) if d <= detour => {}
                    _ => best = Some((si, detour)),
                }
            }
            let Some((si, _)) = best else { return false };
            budget[si] -= 1;
            stops.insert(
                gap,
                Stop::Station {
                    station: si,
                    target: p.battery_capacity,
                },
            );
        }
        false
    }

    /// Strip stations (their clones go back to the budget), try the
    /// customer at every position, repair, and keep the cheapest feasible
    /// result.
    fn best_insertion(&self, route: &[Stop], customer: usize) -> Option<(Vec<Stop>, f64)> {
        let base: Vec<Stop> = route
            .iter()
            .filter(|s| matches!(s, Stop::Customer(_)))
            .copied()
            .collect();
        let remaining = self.remaining_budget_excluding(route);
        let mut best: Option<(Vec<Stop>, f64)> = None;
        for pos in 0..=base.len() {
            let mut cand = base.clone();
            cand.insert(pos, Stop::Customer(customer));
            let mut budget = remaining.clone();
            if !self.repair_battery(&mut cand, &mut budget) {
                continue;
            }
            if let Some(duration) = self.evaluate(&cand) {
                match &best {
                    Some((_, d)) if *d <= duration => {}
                    _ => best = Some((cand, duration)),
                }
            }
        }
        best
    }

    /// Clone budget left after accounting for every route except `except`.
    fn remaining_budget_excluding(&self, except: &[Stop]) -> Vec<usize> {
        let mut budget = self.clone_budget.clone();
        for route in &self.routes {
            if route.as_slice() == except {
                continue;
            }
            for s in route {
                if let Stop::Station { station, .. } = s {
                    budget[*station] = budget[*station].saturating_sub(1);
                }
            }
        }
        budget
    }

    fn build(mut self) -> Option<Vec<Vec<Stop>>> {
        let mut order: Vec<usize> = (0..self.inst.num_customers()).collect();
        order.sort_by(|&a, &b| {
            self.inst.customers[a]
                .ready
                .partial_cmp(&self.inst.customers[b].ready)
                .unwrap()
                .then_with(|| self.inst.customers[a].id.cmp(&self.inst.customers[b].id))
        });

        for c in order {
            let mut best: Option<(usize, Vec<Stop>, f64)> = None;
            for (ri, route) in self.routes.iter().enumerate() {
                let old = self.evaluate(route).unwrap_or(0.0);
                if let Some((cand, dur)) = self.best_insertion(route, c) {
                    let delta = dur - old;
                    match &best {
                        Some((_, _, d)) if *d <= delta => {}
                        _ => best = Some((ri, cand, delta)),
                    }
                }
            }
            match best {
                Some((ri, cand, _)) => self.routes[ri] = cand,
                None => {
                    if self.routes.len() >= self.max_routes {
                        return None;
                    }
                    match self.best_insertion(&[], c) {
                        Some((cand, _)) => self.routes.push(cand),
                        None => return None,
                    }
                }
            }
        }
        Some(self.routes)
    }
}

/// Build a feasible solution by cheapest-feasible sequential insertion with
/// on-demand station stops, then encode it as a model assignment.
pub fn constructive_incumbent(
    model: &MilpModel,
    vmap: &VariableMap,
    g: &ExpandedGraph,
    inst: &Instance,
) -> Result<Vec<f64>, VnsbError> {
    let mut clone_budget = vec![0usize; inst.num_stations()];
    for v in g.station_clones() {
        clone_budget[g.vertices[v].base_index] += 1;
    }
    let builder = Builder {
        inst,
        clone_budget,
        routes: Vec::new(),
        max_routes: g.depot_clone_count,
    };
    let routes = builder.build().ok_or(VnsbError::NoFeasibleFound)?;
    let solution = routes_to_solution(inst, &routes, vmap);
    let assignment = encode_solution(&solution, vmap, g, inst)?;
    if model.max_violation(&assignment) > 1e-5 {
        return Err(VnsbError::NoFeasibleFound);
    }
    Ok(assignment)
}

fn routes_to_solution(inst: &Instance, routes: &[Vec<Stop>], vmap: &VariableMap) -> Solution {
    let mut out = Vec::with_capacity(routes.len());
    let mut ttd = 0.0;
    for stops in routes {
        let items: Vec<PlanItem> = stops
            .iter()
            .map(|s| match *s {
                Stop::Customer(c) => PlanItem {
                    node: &inst.customers[c],
                    recharge_to: None,
                },
                Stop::Station { station, target } => PlanItem {
                    node: &inst.stations[station],
                    recharge_to: Some(target),
                },
            })
            .collect();
        let mut prev = &inst.depot;
        for it in &items {
            ttd += prev.distance_to(it.node);
            prev = it.node;
        }
        ttd += prev.distance_to(&inst.depot);
        out.push(canonical_route(inst, &items));
    }
    let ttod: f64 = out.iter().map(Route::duration).sum();
    Solution {
        instance_id: String::new(),
        variant: vmap.variant.as_str().to_string(),
        vehicles: out.len(),
        ttd,
        ttod,
        routes: out,
        solver: SolverInfo::default(),
    }
}

// ---------------------------------------------------------------------------
// VNSB proper
// ---------------------------------------------------------------------------

fn make_incumbent(
    assignment: Vec<f64>,
    vmap: &VariableMap,
    g: &ExpandedGraph,
    inst: &Instance,
) -> Result<Incumbent, VnsbError> {
    let solution = decode_solution(&assignment, vmap, g, inst)?;
    let objective = model_objective(&solution, inst, g, vmap.variant);
    Ok(Incumbent {
        assignment,
        solution,
        objective,
    })
}

/// Find one feasible incumbent: a budgeted first-feasible MILP dive, then
/// the constructive insertion heuristic as fallback.
pub fn initial_solution(
    model: &MilpModel,
    vmap: &VariableMap,
    g: &ExpandedGraph,
    inst: &Instance,
    budget_seconds: f64,
    meter: &mut WorkMeter,
) -> Result<Incumbent, VnsbError> {
    assert!(budget_seconds > 0.0);
    let cfg = SolveConfig {
        time_limit: budget_seconds,
        stop_at_first_feasible: true,
        ..SolveConfig::default()
    };
    let mut sub = meter.child((budget_seconds * TICKS_PER_SECOND as f64) as u64);
    let attempt = Mip::new(model, cfg).solve_with_meter(&mut sub);
    meter.absorb(&sub);
    if let Ok(res) = attempt {
        if let Some(a) = res.best_assignment {
            return make_incumbent(a, vmap, g, inst);
        }
    }
    let assignment = constructive_incumbent(model, vmap, g, inst)?;
    make_incumbent(assignment, vmap, g, inst)
}

/// The full matheuristic loop. Returns the best incumbent ever seen plus
/// the per-iteration trace.
pub fn vnsb_solve(
    model: &mut MilpModel,
    vmap: &VariableMap,
    g: &ExpandedGraph,
    inst: &Instance,
    cfg: &VnsbConfig,
) -> Result<(Incumbent, Vec<TraceRow>), VnsbError> {
    cfg.check();
    let mut meter = WorkMeter::from_seconds(cfg.total_time_limit);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let seed_budget = cfg
        .seed_time_limit
        .min(cfg.total_time_limit * 0.5)
        .max(0.001);
    let mut center = initial_solution(model, vmap, g, inst, seed_budget, &mut meter)?;
    let mut best = center.clone();
    let mut trace = Vec::new();

    let sub_ticks = (cfg.sub_time_limit * TICKS_PER_SECOND as f64) as u64;
    let mut k = cfg.k_min;
    let mut iteration = 0usize;

    while !meter.exhausted() {
        iteration += 1;
        let handles = local_branching_rows(model, vmap, &center.assignment, 1, k);
        let sub_cfg = SolveConfig {
            time_limit: cfg.sub_time_limit,
            objective_cutoff: Some(center.objective - cfg.improvement_eps),
            rng_seed: cfg.rng_seed,
            ..SolveConfig::default()
        };
        let mut sub = meter.child(sub_ticks);
        let outcome = Mip::new(model, sub_cfg)
            .root_hint(center.assignment.clone())
            .solve_with_meter(&mut sub);
        meter.absorb(&sub);
        pop_rows(model, handles);

        let mut status = String::new();
        let mut improved = false;
        match outcome {
            Ok(res) => {
                status = format!("{:?}", res.status).to_lowercase();
                if let Some(a) = res.best_assignment {
                    let cand = make_incumbent(a, vmap, g, inst)?;
                    if cand.objective < center.objective - cfg.improvement_eps {
                        center = cand;
                        improved = true;
                        if center.objective < best.objective {
                            best = center.clone();
                        }
                    }
                }
            }
            Err(MipError::Numerical(m)) => status = format!("numerical:{m}"),
            Err(e) => return Err(e.into()),
        }

        if improved {
            k = cfg.k_min;
        } else {
            k += cfg.k_step;
            if k > cfg.k_max {
                // Shake: any feasible point at distance exactly k' recenters
                // the search without an improvement requirement.
                let k_shake = rng.gen_range(cfg.k_min..=cfg.k_max);
                let handles =
                    local_branching_rows(model, vmap, &center.assignment, k_shake, k_shake);
                let shake_cfg = SolveConfig {
                    time_limit: cfg.sub_time_limit,
                    stop_at_first_feasible: true,
                    rng_seed: cfg.rng_seed,
                    ..SolveConfig::default()
                };
                let mut sub = meter.child(sub_ticks);
                let outcome = Mip::new(model, shake_cfg)
                    .root_hint(center.assignment.clone())
                    .solve_with_meter(&mut sub);
                meter.absorb(&sub);
                pop_rows(model, handles);
                match outcome {
                    Ok(res) => {
                        if let Some(a) = res.best_assignment {
                            let cand = make_incumbent(a, vmap, g, inst)?;
                            status = format!("shake_k{k_shake}");
                            if cand.objective < best.objective {
                                best = cand.clone();
                            }
                            center = cand;
                        } else {
                            status = format!("shake_k{k_shake}_empty");
                        }
                    }
                    Err(MipError::Numerical(m)) => status = format!("shake_numerical:{m}"),
                    Err(e) => return Err(e.into()),
                }
                k = cfg.k_min;
            }
        }

        trace.push(TraceRow {
            iteration,
            k,
            sub_status: status,
            incumbent_objective: best.objective,
            elapsed_s: meter.used() as f64 / TICKS_PER_SECOND as f64,
        });
    }

    Ok((best, trace))
}
