//! Translation between the expanded routing graph and the two-index MILP,
//! in both variants:
//!
//! * partial recharges with a time-effective objective (vehicle count
//!   first, then total time outside the depot, the time term normalized by
//!   `l_0 * n` so it can never outweigh one vehicle), and
//! * full recharges with a distance objective (vehicle count first, then
//!   total travel distance), the reconstruction of the reference model the
//!   benchmark tables compare against.
//!
//! Column and row counts follow closed forms in the graph size: with `|A|`
//! arcs, `|V|` vertices, `n` customers, `S` station clones and `m` depot
//! clone pairs, the model has `|A| + 3|V| + S` columns and
//! `3|A| + 2n + 3S + 4m` rows (plus optional symmetry-breaking rows).

use thiserror::Error;

use crate::graph::{ExpandedGraph, VertexRole};
use crate::instance::Instance;
use crate::milp::{MilpModel, Sense};
use crate::solution::{Route, Solution, SolverInfo, Visit, VisitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelVariant {
    PartialRechargeTimeEffective,
    FullRechargeMinDistance,
}

impl ModelVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::PartialRechargeTimeEffective => "partial",
            ModelVariant::FullRechargeMinDistance => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "partial" => Some(ModelVariant::PartialRechargeTimeEffective),
            "full" => Some(ModelVariant::FullRechargeMinDistance),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub variant: ModelVariant,
    /// Order clone usage to cut clone-permutation symmetry. Value-preserving
    /// but changes the row count; enabled on the exact solve path, kept off
    /// for neighborhood search so Hamming distances keep their move
    /// semantics.
    pub symmetry_breaking: bool,
}

impl BuildOptions {
    pub fn new(variant: ModelVariant) -> Self {
        BuildOptions {
            variant,
            symmetry_breaking: false,
        }
    }

    pub fn with_symmetry_breaking(mut self, on: bool) -> Self {
        self.symmetry_breaking = on;
        self
    }
}

/// Mapping from model columns back to routing semantics.
#[derive(Debug, Clone)]
pub struct VariableMap {
    /// Routing binary per arc, indexed like `ExpandedGraph::arcs`.
    pub x: Vec<usize>,
    /// Arrival time per vertex.
    pub tau: Vec<usize>,
    /// Remaining load capacity per vertex.
    pub load: Vec<usize>,
    /// Battery level before leaving, per vertex.
    pub battery: Vec<usize>,
    /// Battery level reached at a station clone (None elsewhere).
    pub recharge: Vec<Option<usize>>,
    pub variant: ModelVariant,
}

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("graph has not been pre-processed")]
    GraphNotPreprocessed,
    #[error("instance has no customers")]
    NoCustomers,
    #[error("depot horizon {0} too large for absolute feasibility tolerances")]
    HorizonTooLarge(f64),
}

/// Scale that keeps the distance term of the full-recharge objective below
/// the cost of one vehicle for any feasible solution.
pub fn distance_normalizer(g: &ExpandedGraph, inst: &Instance) -> f64 {
    let max_d = g.arcs.iter().map(|a| a.distance).fold(0.0, f64::max);
    let station_clones = g.station_clones().count();
    let max_arcs = inst.num_customers() + station_clones + g.depot_clone_count;
    max_d * max_arcs as f64 + 1.0
}

pub fn vertex_label(g: &ExpandedGraph, v: usize) -> String {
    let vr = &g.vertices[v];
    match vr.role {
        VertexRole::StartDepot => format!("{}_s{}", vr.base_id, vr.clone_index),
        VertexRole::EndDepot => format!("{}_e{}", vr.base_id, vr.clone_index),
        VertexRole::Customer => vr.base_id.clone(),
        VertexRole::StationClone => format!("{}_{}", vr.base_id, vr.clone_index),
    }
}

/// Build the routing MILP for a pre-processed graph.
pub fn build_model(
    g: &ExpandedGraph,
    inst: &Instance,
    options: &BuildOptions,
) -> Result<(MilpModel, VariableMap), BuildError> {
    if !g.preprocessed {
        return Err(BuildError::GraphNotPreprocessed);
    }
    let n = inst.num_customers();
    if n == 0 {
        return Err(BuildError::NoCustomers);
    }
    let l0 = inst.horizon();
    if l0 > 1e7 {
        return Err(BuildError::HorizonTooLarge(l0));
    }
    let p = &inst.params;
    let (q_cap, c_cap, rate, g_rate) = (
        p.battery_capacity,
        p.load_capacity,
        p.consumption_rate,
        p.recharge_rate,
    );
    let variant = options.variant;
    let time_norm = 1.0 / (l0 * n as f64);
    let dist_norm = distance_normalizer(g, inst);

    let mut model = MilpModel::new();
    let nv = g.vertices.len();
    let labels: Vec<String> = (0..nv).map(|v| vertex_label(g, v)).collect();

    // Routing binaries, one per arc.
    let mut x = Vec::with_capacity(g.arcs.len());
    for a in &g.arcs {
        let mut obj = 0.0;
        if g.vertices[a.from].role == VertexRole::StartDepot {
            obj += 1.0; // vehicle count term
        }
        if variant == ModelVariant::FullRechargeMinDistance {
            obj += a.distance / dist_norm;
        }
        x.push(model.add_binary(format!("x_{}__{}", labels[a.from], labels[a.to]), obj));
    }

    // Arrival times.
    let mut tau = Vec::with_capacity(nv);
    for v in 0..nv {
        let node = g.base_node(v, inst);
        let (lo, hi, obj) = match g.vertices[v].role {
            VertexRole::Customer => (node.ready, node.due, 0.0),
            VertexRole::StartDepot => {
                let o = if variant == ModelVariant::PartialRechargeTimeEffective {
                    -time_norm
                } else {
                    0.0
                };
                (0.0, l0, o)
            }
            VertexRole::EndDepot => {
                let o = if variant == ModelVariant::PartialRechargeTimeEffective {
                    time_norm
                } else {
                    0.0
                };
                (0.0, l0, o)
            }
            VertexRole::StationClone => (0.0, l0, 0.0),
        };
        tau.push(model.add_continuous(format!("tau_{}", labels[v]), lo, hi, obj));
    }

    // Remaining load capacity and battery level.
    let mut load = Vec::with_capacity(nv);
    let mut battery = Vec::with_capacity(nv);
    for v in 0..nv {
        load.push(model.add_continuous(format!("u_{}", labels[v]), 0.0, c_cap, 0.0));
    }
    for v in 0..nv {
        battery.push(model.add_continuous(format!("y_{}", labels[v]), 0.0, q_cap, 0.0));
    }

    // Recharge targets at station clones; pinned to Q for full recharges.
    let mut recharge = vec![None; nv];
    for v in g.station_clones() {
        let lo = if variant == ModelVariant::FullRechargeMinDistance {
            q_cap
        } else {
            0.0
        };
        recharge[v] = Some(model.add_continuous(format!("xi_{}", labels[v]), lo, q_cap, 0.0));
    }

    // Each customer leaves exactly once; station and depot clones at most
    // once; flow conservation ties arrivals to departures.
    for v in g.customers() {
        let terms: Vec<(usize, f64)> = g.out_arcs(v).map(|(ai, _)| (x[ai], 1.0)).collect();
        model.add_row(format!("visit_{}", labels[v]), terms, Sense::Eq, 1.0);
    }
    for v in g.station_clones() {
        let terms: Vec<(usize, f64)> = g.out_arcs(v).map(|(ai, _)| (x[ai], 1.0)).collect();
        model.add_row(format!("use_{}", labels[v]), terms, Sense::Le, 1.0);
    }
    for v in g.start_depots() {
        let terms: Vec<(usize, f64)> = g.out_arcs(v).map(|(ai, _)| (x[ai], 1.0)).collect();
        model.add_row(format!("open_{}", labels[v]), terms, Sense::Le, 1.0);
    }
    for v in g.end_depots() {
        let terms: Vec<(usize, f64)> = g.in_arcs(v).map(|(ai, _)| (x[ai], 1.0)).collect();
        model.add_row(format!("close_{}", labels[v]), terms, Sense::Le, 1.0);
    }
    for v in g.customers().chain(g.station_clones()) {
        let mut terms: Vec<(usize, f64)> = g.in_arcs(v).map(|(ai, _)| (x[ai], 1.0)).collect();
        for (ai, _) in g.out_arcs(v) {
            terms.push((x[ai], -1.0));
        }
        model.add_row(format!("flow_{}", labels[v]), terms, Sense::Eq, 0.0);
    }

    // Time propagation along every arc. From customers and start depots the
    // step is service plus travel; from stations it also carries the
    // recharge duration g*(xi - y), which widens the big-M by g*Q.
    for (ai, a) in g.arcs.iter().enumerate() {
        let from = &g.vertices[a.from];
        let name = format!("time_{}__{}", labels[a.from], labels[a.to]);
        match from.role {
            VertexRole::StationClone => {
                let big_m = l0 + g_rate * q_cap;
                model.add_row(
                    name,
                    vec![
                        (tau[a.from], 1.0),
                        (tau[a.to], -1.0),
                        (x[ai], a.time + big_m),
                        (recharge[a.from].unwrap(), g_rate),
                        (battery[a.from], -g_rate),
                    ],
                    Sense::Le,
                    big_m,
                );
            }
            _ => {
                let service = g.base_node(a.from, inst).service;
                model.add_row(
                    name,
                    vec![
                        (tau[a.from], 1.0),
                        (tau[a.to], -1.0),
                        (x[ai], a.time + service + l0),
                    ],
                    Sense::Le,
                    l0,
                );
            }
        }
    }

    // Battery drain along every arc; departures from stations drain from
    // the recharge target instead of the arrival level.
    for (ai, a) in g.arcs.iter().enumerate() {
        let name = format!("batt_{}__{}", labels[a.from], labels[a.to]);
        let origin_level = match g.vertices[a.from].role {
            VertexRole::StationClone => recharge[a.from].unwrap(),
            _ => battery[a.from],
        };
        model.add_row(
            name,
            vec![
                (battery[a.to], 1.0),
                (origin_level, -1.0),
                (x[ai], rate * a.distance + q_cap),
            ],
            Sense::Le,
            q_cap,
        );
    }

    // Load propagation (pickups): remaining capacity decreases by the tail
    // demand whenever the arc is used.
    for (ai, a) in g.arcs.iter().enumerate() {
        let demand = g.base_node(a.from, inst).demand;
        model.add_row(
            format!("load_{}__{}", labels[a.from], labels[a.to]),
            vec![
                (load[a.to], 1.0),
                (load[a.from], -1.0),
                (x[ai], demand + c_cap),
            ],
            Sense::Le,
            c_cap,
        );
    }

    // Unused depot clones keep arrival time zero, so the objective's time
    // term sums exactly the used route durations.
    for v in g.start_depots() {
        let mut terms: Vec<(usize, f64)> = vec![(tau[v], 1.0)];
        for (ai, _) in g.out_arcs(v) {
            terms.push((x[ai], -l0));
        }
        model.add_row(format!("tlink_{}", labels[v]), terms, Sense::Le, 0.0);
    }
    for v in g.end_depots() {
        let mut terms: Vec<(usize, f64)> = vec![(tau[v], 1.0)];
        for (ai, _) in g.in_arcs(v) {
            terms.push((x[ai], -l0));
        }
        model.add_row(format!("tlink_{}", labels[v]), terms, Sense::Le, 0.0);
    }

    // A recharge never discharges: arrival level <= target.
    for v in g.station_clones() {
        model.add_row(
            format!("lvl_{}", labels[v]),
            vec![(battery[v], 1.0), (recharge[v].unwrap(), -1.0)],
            Sense::Le,
            0.0,
        );
    }

    // Depot windows opening later than zero need activation rows, since
    // unused clones are pinned to tau = 0.
    if inst.depot.ready > 0.0 {
        let e0 = inst.depot.ready;
        for v in g.start_depots() {
            let mut terms: Vec<(usize, f64)> = vec![(tau[v], 1.0)];
            for (ai, _) in g.out_arcs(v) {
                terms.push((x[ai], -e0));
            }
            model.add_row(format!("ewin_{}", labels[v]), terms, Sense::Ge, 0.0);
        }
        for v in g.end_depots() {
            let mut terms: Vec<(usize, f64)> = vec![(tau[v], 1.0)];
            for (ai, _) in g.in_arcs(v) {
                terms.push((x[ai], -e0));
            }
            model.add_row(format!("ewin_{}", labels[v]), terms, Sense::Ge, 0.0);
        }
    }

    if options.symmetry_breaking {
        add_symmetry_rows(&mut model, g, &x);
    }

    Ok((
        model,
        VariableMap {
            x,
            tau,
            load,
            battery,
            recharge,
            variant,
        },
    ))
}

/// Clone-ordering rows: lower-indexed depot and station clones are used
/// first, and route k starting at clone k also ends at clone k. All of it
/// is value-preserving relabeling.
fn add_symmetry_rows(model: &mut MilpModel, g: &ExpandedGraph, x: &[usize]) {
    let starts: Vec<usize> = g.start_depots().collect();
    let ends: Vec<usize> = g.end_depots().collect();
    let out_terms = |v: usize, sign: f64| -> Vec<(usize, f64)> {
        g.out_arcs(v).map(|(ai, _)| (x[ai], sign)).collect()
    };
    let in_terms = |v: usize, sign: f64| -> Vec<(usize, f64)> {
        g.in_arcs(v).map(|(ai, _)| (x[ai], sign)).collect()
    };
    for w in starts.windows(2) {
        let mut terms = out_terms(w[0], 1.0);
        terms.extend(out_terms(w[1], -1.0));
        model.add_row(format!("sym_open_{}", g.vertices[w[0]].clone_index), terms, Sense::Ge, 0.0);
    }
    for (k, (&s, &e)) in starts.iter().zip(&ends).enumerate() {
        let mut terms = out_terms(s, 1.0);
        terms.extend(in_terms(e, -1.0));
        model.add_row(format!("sym_pair_{k}"), terms, Sense::Eq, 0.0);
    }
    // Per-station clone usage ordering.
    let clones: Vec<usize> = g.station_clones().collect();
    for w in clones.windows(2) {
        let a = &g.vertices[w[0]];
        let b = &g.vertices[w[1]];
        if a.base_index == b.base_index && a.clone_index + 1 == b.clone_index {
            let mut terms = out_terms(w[0], 1.0);
            terms.extend(out_terms(w[1], -1.0));
            model.add_row(
                format!("sym_{}_{}", a.base_id, a.clone_index),
                terms,
                Sense::Ge,
                0.0,
            );
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("routing variables do not form depot-to-depot chains: {0}")]
    BrokenChain(String),
}

/// Extract routes from an integral assignment and lay out a canonical
/// schedule: each route departs as late as feasibility allows and runs
/// forward from there, which reproduces the optimizer's times at optimality
/// and keeps reported metrics independent of LP degeneracy.
pub fn decode_solution(
    assignment: &[f64],
    vmap: &VariableMap,
    g: &ExpandedGraph,
    inst: &Instance,
) -> Result<Solution, DecodeError> {
    let mut out_used: Vec<Option<usize>> = vec![None; g.vertices.len()];
    let mut used_arcs = 0usize;
    for (ai, a) in g.arcs.iter().enumerate() {
        if assignment[vmap.x[ai]] > 0.5 {
            if out_used[a.from].is_some() {
                return Err(DecodeError::BrokenChain(format!(
                    "vertex {} has two outgoing arcs",
                    vertex_label(g, a.from)
                )));
            }
            out_used[a.from] = Some(ai);
            used_arcs += 1;
        }
    }

    let mut chains: Vec<Vec<usize>> = Vec::new(); // arc index sequences
    let mut covered = 0usize;
    let mut visited = vec![false; g.vertices.len()];
    for s in g.start_depots() {
        let Some(first) = out_used[s] else { continue };
        let mut chain = vec![first];
        visited[s] = true;
        let mut at = g.arcs[first].to;
        loop {
            if visited[at] {
                return Err(DecodeError::BrokenChain(format!(
                    "vertex {} visited twice",
                    vertex_label(g, at)
                )));
            }
            visited[at] = true;
            if g.vertices[at].role == VertexRole::EndDepot {
                break;
            }
            match out_used[at] {
                Some(ai) => {
                    chain.push(ai);
                    at = g.arcs[ai].to;
                }
                None => {
                    return Err(DecodeError::BrokenChain(format!(
                        "chain stops at {} short of an end depot",
                        vertex_label(g, at)
                    )))
                }
            }
            if chain.len() > g.vertices.len() {
                return Err(DecodeError::BrokenChain("chain exceeds vertex count".into()));
            }
        }
        covered += chain.len();
        chains.push(chain);
    }
    if covered != used_arcs {
        return Err(DecodeError::BrokenChain(format!(
            "{} used arcs lie on no depot-to-depot chain",
            used_arcs - covered
        )));
    }

    let mut routes = Vec::with_capacity(chains.len());
    let mut ttd = 0.0;
    for chain in &chains {
        let verts: Vec<usize> = std::iter::once(g.arcs[chain[0]].from)
            .chain(chain.iter().map(|&ai| g.arcs[ai].to))
            .collect();
        let targets: Vec<Option<f64>> = verts
            .iter()
            .map(|&v| vmap.recharge[v].map(|col| assignment[col]))
            .collect();
        ttd += chain.iter().map(|&ai| g.arcs[ai].distance).sum::<f64>();
        routes.push(schedule_route(g, inst, &verts, &targets));
    }
    // Deterministic route order: by first interior stop label.
    routes.sort_by(|a, b| {
        let ka = a.vertices.get(1).map(|v| v.id.clone()).unwrap_or_default();
        let kb = b.vertices.get(1).map(|v| v.id.clone()).unwrap_or_default();
        ka.cmp(&kb)
    });

    let ttod: f64 = routes.iter().map(Route::duration).sum();
    Ok(Solution {
        instance_id: String::new(),
        variant: vmap.variant.as_str().to_string(),
        vehicles: routes.len(),
        ttd,
        ttod,
        routes,
        solver: SolverInfo::default(),
    })
}

/// Lay out the latest-departure, earliest-return schedule for one chain of
/// graph vertices with the given recharge targets.
fn schedule_route(
    g: &ExpandedGraph,
    inst: &Instance,
    verts: &[usize],
    raw_targets: &[Option<f64>],
) -> Route {
    let p = &inst.params;
    let l0 = inst.horizon();
    let k = verts.len();
    let leg_time = |i: usize| -> f64 {
        let a = g.base_node(verts[i], inst);
        let b = g.base_node(verts[i + 1], inst);
        inst.travel_time(a.distance_to(b))
    };
    let leg_dist = |i: usize| -> f64 {
        g.base_node(verts[i], inst).distance_to(g.base_node(verts[i + 1], inst))
    };

    // Battery pass: levels depend only on distances and targets.
    let mut battery_in = vec![p.battery_capacity; k];
    let mut recharge_to: Vec<Option<f64>> = vec![None; k];
    let mut stop_time = vec![0.0f64; k]; // service or recharge duration
    let mut level = p.battery_capacity;
    for i in 1..k {
        level -= p.consumption_rate * leg_dist(i - 1);
        battery_in[i] = level;
        let node = g.base_node(verts[i], inst);
        match g.vertices[verts[i]].role {
            VertexRole::StationClone => {
                let target = raw_targets[i]
                    .unwrap_or(p.battery_capacity)
                    .clamp(level, p.battery_capacity);
                recharge_to[i] = Some(target);
                stop_time[i] = p.recharge_rate * (target - level);
                level = target;
            }
            _ => stop_time[i] = node.service,
        }
    }

    // Backward pass: latest feasible service start per stop.
    let mut latest = vec![0.0f64; k];
    latest[k - 1] = l0;
    for i in (1..k - 1).rev() {
        let node = g.base_node(verts[i], inst);
        let cap = match g.vertices[verts[i]].role {
            VertexRole::Customer => node.due,
            _ => l0,
        };
        latest[i] = cap.min(latest[i + 1] - stop_time[i] - leg_time(i));
    }
    let departure = (latest[1] - leg_time(0)).min(l0).max(inst.depot.ready);

    // Forward pass from the latest departure.
    let mut visits = Vec::with_capacity(k);
    let depot_node = &inst.depot;
    let mut load = 0.0f64;
    visits.push(Visit {
        id: depot_node.id.clone(),
        kind: VisitKind::Depot,
        arrival: departure,
        departure,
        battery_on_arrival: p.battery_capacity,
        recharge_to: None,
        load_after: 0.0,
    });
    let mut clock = departure;
    for i in 1..k {
        let arrival = clock + leg_time(i - 1);
        let node = g.base_node(verts[i], inst);
        let role = g.vertices[verts[i]].role;
        let (kind, leave) = match role {
            VertexRole::Customer => {
                load += node.demand;
                let start = arrival.max(node.ready);
                (VisitKind::Customer, start + node.service)
            }
            VertexRole::StationClone => (VisitKind::Station, arrival + stop_time[i]),
            VertexRole::EndDepot => (VisitKind::Depot, arrival),
            VertexRole::StartDepot => unreachable!("start depot inside a chain"),
        };
        visits.push(Visit {
            id: node.id.clone(),
            kind,
            arrival,
            departure: leave,
            battery_on_arrival: battery_in[i],
            recharge_to: recharge_to[i],
            load_after: load,
        });
        clock = leave;
    }
    Route { vertices: visits }
}

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("solution references unknown vertex id {0}")]
    UnknownId(String),
    #[error("no arc between {0} and {1} in the expanded graph")]
    MissingArc(String, String),
    #[error("solution uses {got} routes but the graph has {have} depot clone pairs")]
    TooManyRoutes { got: usize, have: usize },
    #[error("station {0} visited more often than it has clones")]
    StationCloneBudget(String),
}

/// Re-encode a decoded solution as a full column assignment. Route `i` uses
/// depot clone pair `i` and station clones are assigned in visit order, so
/// encoded assignments satisfy the optional clone-ordering rows too.
pub fn encode_solution(
    sol: &Solution,
    vmap: &VariableMap,
    g: &ExpandedGraph,
    inst: &Instance,
) -> Result<Vec<f64>, EncodeError> {
    let ncols = vmap
        .x
        .iter()
        .chain(vmap.tau.iter())
        .chain(vmap.load.iter())
        .chain(vmap.battery.iter())
        .chain(vmap.recharge.iter().flatten())
        .max()
        .map_or(0, |&c| c + 1);
    let mut a = vec![0.0f64; ncols];

    let p = &inst.params;
    let starts: Vec<usize> = g.start_depots().collect();
    let ends: Vec<usize> = g.end_depots().collect();
    if sol.routes.len() > starts.len() {
        return Err(EncodeError::TooManyRoutes {
            got: sol.routes.len(),
            have: starts.len(),
        });
    }

    let mut customer_vertex = std::collections::BTreeMap::new();
    for v in g.customers() {
        customer_vertex.insert(g.vertices[v].base_id.clone(), v);
    }
    let mut station_clones: std::collections::BTreeMap<String, Vec<usize>> = Default::default();
    for v in g.station_clones() {
        station_clones
            .entry(g.vertices[v].base_id.clone())
            .or_default()
            .push(v);
    }
    let mut clone_cursor: std::collections::BTreeMap<String, usize> = Default::default();

    let mut adjacency: Vec<std::collections::BTreeMap<usize, usize>> =
        vec![Default::default(); g.vertices.len()];
    for (ai, arc) in g.arcs.iter().enumerate() {
        adjacency[arc.from].insert(arc.to, ai);
    }

    // Defaults for unused vertices: full capacity, full battery, tau zero.
    for v in 0..g.vertices.len() {
        a[vmap.load[v]] = p.load_capacity;
        a[vmap.battery[v]] = p.battery_capacity;
        if let Some(col) = vmap.recharge[v] {
            a[col] = p.battery_capacity;
        }
    }
    // Customer windows force tau >= ready even when bounds alone hold it.
    for v in g.customers() {
        a[vmap.tau[v]] = g.base_node(v, inst).ready;
    }

    for (ri, route) in sol.routes.iter().enumerate() {
        let mut verts = Vec::with_capacity(route.vertices.len());
        verts.push(starts[ri]);
        for visit in &route.vertices[1..route.vertices.len() - 1] {
            let v = match visit.kind {
                VisitKind::Customer => *customer_vertex
                    .get(&visit.id)
                    .ok_or_else(|| EncodeError::UnknownId(visit.id.clone()))?,
                VisitKind::Station => {
                    let pool = station_clones
                        .get(&visit.id)
                        .ok_or_else(|| EncodeError::UnknownId(visit.id.clone()))?;
                    let cur = clone_cursor.entry(visit.id.clone()).or_insert(0);
                    if *cur >= pool.len() {
                        return Err(EncodeError::StationCloneBudget(visit.id.clone()));
                    }
                    let v = pool[*cur];
                    *cur += 1;
                    v
                }
                VisitKind::Depot => {
                    return Err(EncodeError::UnknownId(format!(
                        "interior depot visit {}",
                        visit.id
                    )))
                }
            };
            verts.push(v);
        }
        verts.push(ends[ri]);

        for w in verts.windows(2) {
            let ai = *adjacency[w[0]].get(&w[1]).ok_or_else(|| {
                EncodeError::MissingArc(vertex_label(g, w[0]), vertex_label(g, w[1]))
            })?;
            a[vmap.x[ai]] = 1.0;
        }

        let mut load_before = 0.0f64;
        for (vi, visit) in route.vertices.iter().enumerate() {
            let v = verts[vi];
            let node = g.base_node(v, inst);
            // tau: service start at customers, arrival elsewhere.
            a[vmap.tau[v]] = match visit.kind {
                VisitKind::Customer => visit.arrival.max(node.ready),
                _ => visit.arrival,
            };
            a[vmap.load[v]] = p.load_capacity - load_before;
            load_before = visit.load_after;
            a[vmap.battery[v]] = visit.battery_on_arrival;
            if let Some(col) = vmap.recharge[v] {
                a[col] = visit
                    .recharge_to
                    .unwrap_or(visit.battery_on_arrival)
                    .max(visit.battery_on_arrival);
            }
        }
    }
    Ok(a)
}

/// Vehicle count, total time outside the depot, and the composite
/// time-effective objective `vehicles + ttod / (l0 * n)`.
pub fn objective_value(sol: &Solution, inst: &Instance) -> (usize, f64, f64) {
    let vehicles = sol.routes.len();
    let ttod: f64 = sol.routes.iter().map(Route::duration).sum();
    let composite = vehicles as f64 + ttod / (inst.horizon() * inst.num_customers() as f64);
    (vehicles, ttod, composite)
}

/// The model objective a decoded solution would score under `variant`.
pub fn model_objective(
    sol: &Solution,
    inst: &Instance,
    g: &ExpandedGraph,
    variant: ModelVariant,
) -> f64 {
    let (vehicles, ttod, composite) = objective_value(sol, inst);
    match variant {
        ModelVariant::PartialRechargeTimeEffective => composite,
        ModelVariant::FullRechargeMinDistance => {
            vehicles as f64 + sol.ttd / distance_normalizer(g, inst) + 0.0 * ttod
        }
    }
}
