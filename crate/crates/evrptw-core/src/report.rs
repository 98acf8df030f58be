//! Per-instance run reports and the orchestration that produces them.
//!
//! Reported metrics are always recomputed from the decoded routes by the
//! independent simulator, never copied from solver bookkeeping.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{
    build_model, decode_solution, encode_solution, BuildError, BuildOptions, DecodeError,
    ModelVariant,
};
use crate::graph::{expand_graph, preprocess_arcs};
use crate::instance::Instance;
use crate::milp::{Mip, MipError, MipStatus, SolveConfig};
use crate::oracle::{enumerate_optimum, OracleConfig, OracleError};
use crate::solution::{Route, Solution, SolverInfo};
use crate::validate::{simulate_route, PlannedStop, RoutePlan, ValidateError};
use crate::vnsb::{vnsb_solve, TraceRow, VnsbConfig, VnsbError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Vnsb,
    Oracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Vnsb => "vnsb",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(Method::Exact),
            "vnsb" => Some(Method::Vnsb),
            "oracle" => Some(Method::Oracle),
            _ => None,
        }
    }
}

/// Metrics of one solver run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance_id: String,
    pub variant: String,
    pub method: Method,
    pub vehicles: usize,
    pub ttd: f64,
    pub ttod: f64,
    pub status: String,
    pub wall_time_s: f64,
    pub seed: u64,
}

/// Everything the solve entry point needs beyond the instance itself.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub method: Method,
    pub variant: ModelVariant,
    /// Total nominal time limit in seconds.
    pub time_limit: f64,
    /// Per-sub-MILP limit for the matheuristic.
    pub sub_time_limit: f64,
    pub k_min: usize,
    pub k_max: usize,
    /// Start/end depot clone pairs; defaults to the customer count.
    pub depot_clones: Option<usize>,
    pub station_clones: usize,
    pub seed: u64,
    /// Collect the per-iteration matheuristic trace.
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            method: Method::Exact,
            variant: ModelVariant::PartialRechargeTimeEffective,
            time_limit: 7200.0,
            sub_time_limit: 5.0,
            k_min: 3,
            k_max: 10,
            depot_clones: None,
            station_clones: 2,
            seed: 0,
            trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub solution: Solution,
    pub report: RunReport,
    pub trace: Vec<TraceRow>,
    /// Proven infeasible (distinct from "nothing found in time").
    pub proven_infeasible: bool,
    pub no_solution: bool,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Mip(#[from] MipError),
    #[error(transparent)]
    Vnsb(#[from] VnsbError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Validate(#[from] ValidateError),
}

fn status_str(status: MipStatus) -> &'static str {
    match status {
        MipStatus::Optimal => "optimal",
        MipStatus::FeasibleTimeLimit => "feasible_time_limit",
        MipStatus::InfeasibleProven => "infeasible",
        MipStatus::NoSolutionTimeLimit => "no_solution_time_limit",
    }
}

/// Recompute vehicles / ttd / ttod for a solution by re-simulating every
/// route against the raw instance.
pub fn recompute_metrics(sol: &Solution, inst: &Instance) -> Result<(usize, f64, f64), ValidateError> {
    let mut ttd = 0.0;
    let mut ttod = 0.0;
    for route in &sol.routes {
        let plan = RoutePlan {
            departure: route.vertices[0].departure,
            stops: route.vertices[1..route.vertices.len() - 1]
                .iter()
                .map(|v| PlannedStop {
                    id: v.id.clone(),
                    recharge_to: v.recharge_to,
                })
                .collect(),
        };
        let (sim, _) = simulate_route(&plan, inst)?;
        ttod += sim.duration();
        let mut prev = &inst.depot;
        for v in &sim.vertices[1..] {
            let node = inst
                .customers
                .iter()
                .chain(inst.stations.iter())
                .chain(std::iter::once(&inst.depot))
                .find(|n| n.id == v.id)
                .ok_or_else(|| ValidateError::UnknownId(v.id.clone()))?;
            ttd += prev.distance_to(node);
            prev = node;
        }
    }
    Ok((sol.routes.len(), ttd, ttod))
}

fn finish_report(
    mut sol: Solution,
    inst: &Instance,
    instance_id: &str,
    opts: &RunOptions,
    status: &str,
    wall: f64,
    nodes: u64,
) -> Result<(Solution, RunReport), RunError> {
    let (vehicles, ttd, ttod) = recompute_metrics(&sol, inst)?;
    sol.instance_id = instance_id.to_string();
    sol.variant = opts.variant.as_str().to_string();
    sol.vehicles = vehicles;
    sol.ttd = ttd;
    sol.ttod = ttod;
    sol.solver = SolverInfo {
        status: status.to_string(),
        wall_time_s: wall,
        nodes,
    };
    let report = RunReport {
        instance_id: instance_id.to_string(),
        variant: opts.variant.as_str().to_string(),
        method: opts.method,
        vehicles,
        ttd,
        ttod,
        status: status.to_string(),
        wall_time_s: wall,
        seed: opts.seed,
    };
    Ok((sol, report))
}

/// Solve one instance end to end with the chosen method and report the
/// recomputed metrics.
pub fn run_instance(
    inst: &Instance,
    instance_id: &str,
    opts: &RunOptions,
) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    let depot_clones = opts.depot_clones.unwrap_or(inst.num_customers().max(1));
    let graph = preprocess_arcs(
        &expand_graph(inst, depot_clones, opts.station_clones),
        inst,
    );

    match opts.method {
        Method::Oracle => {
            let cfg = OracleConfig {
                station_clone_budget: opts.station_clones,
                ..OracleConfig::default()
            };
            match enumerate_optimum(inst, &cfg) {
                Ok(sol) => {
                    let wall = started.elapsed().as_secs_f64();
                    let (solution, report) =
                        finish_report(sol, inst, instance_id, opts, "optimal", wall, 0)?;
                    Ok(RunOutcome {
                        solution,
                        report,
                        trace: Vec::new(),
                        proven_infeasible: false,
                        no_solution: false,
                    })
                }
                Err(OracleError::BudgetedInfeasible { .. }) => {
                    empty_outcome(inst, instance_id, opts, "infeasible", started, true)
                }
                Err(e) => Err(e.into()),
            }
        }
        Method::Exact => {
            let build = BuildOptions::new(opts.variant).with_symmetry_breaking(true);
            let (model, vmap) = build_model(&graph, inst, &build)?;
            let cfg = SolveConfig {
                time_limit: opts.time_limit,
                rng_seed: opts.seed,
                ..SolveConfig::default()
            };
            let mut mip = Mip::new(&model, cfg);
            // A constructive incumbent gives the tree a cutoff from the
            // start; ignore failures, the search works without it.
            if let Ok(seed_inc) =
                crate::vnsb::constructive_incumbent(&model, &vmap, &graph, inst)
            {
                mip = mip.warm_start(seed_inc);
            }
            let res = mip.solve()?;
            let wall = started.elapsed().as_secs_f64();
            match &res.best_assignment {
                Some(assignment) => {
                    let sol = decode_solution(assignment, &vmap, &graph, inst)?;
                    let (solution, report) = finish_report(
                        sol,
                        inst,
                        instance_id,
                        opts,
                        status_str(res.status),
                        wall,
                        res.nodes_explored,
                    )?;
                    Ok(RunOutcome {
                        solution,
                        report,
                        trace: Vec::new(),
                        proven_infeasible: false,
                        no_solution: false,
                    })
                }
                None => empty_outcome(
                    inst,
                    instance_id,
                    opts,
                    status_str(res.status),
                    started,
                    res.status == MipStatus::InfeasibleProven,
                ),
            }
        }
        Method::Vnsb => {
            let build = BuildOptions::new(opts.variant);
            let (mut model, vmap) = build_model(&graph, inst, &build)?;
            let cfg = VnsbConfig {
                total_time_limit: opts.time_limit,
                sub_time_limit: opts.sub_time_limit,
                k_min: opts.k_min,
                k_max: opts.k_max,
                rng_seed: opts.seed,
                ..VnsbConfig::default()
            };
            match vnsb_solve(&mut model, &vmap, &graph, inst, &cfg) {
                Ok((best, trace)) => {
                    let wall = started.elapsed().as_secs_f64();
                    let (solution, report) = finish_report(
                        best.solution,
                        inst,
                        instance_id,
                        opts,
                        "feasible",
                        wall,
                        0,
                    )?;
                    Ok(RunOutcome {
                        solution,
                        report,
                        trace: if opts.trace { trace } else { Vec::new() },
                        proven_infeasible: false,
                        no_solution: false,
                    })
                }
                Err(VnsbError::NoFeasibleFound) => {
                    empty_outcome(inst, instance_id, opts, "no_solution_time_limit", started, false)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn empty_outcome(
    inst: &Instance,
    instance_id: &str,
    opts: &RunOptions,
    status: &str,
    started: Instant,
    proven: bool,
) -> Result<RunOutcome, RunError> {
    let wall = started.elapsed().as_secs_f64();
    let sol = Solution::empty(instance_id, opts.variant.as_str());
    let (solution, report) = finish_report(sol, inst, instance_id, opts, status, wall, 0)?;
    Ok(RunOutcome {
        solution,
        report,
        trace: Vec::new(),
        proven_infeasible: proven,
        no_solution: true,
    })
}

/// Verify an encodable route set exists for `sol` (used by tests).
pub fn reencode_check(
    sol: &Solution,
    inst: &Instance,
    opts: &RunOptions,
) -> Result<f64, RunError> {
    let depot_clones = opts.depot_clones.unwrap_or(inst.num_customers().max(1));
    let graph = preprocess_arcs(
        &expand_graph(inst, depot_clones, opts.station_clones),
        inst,
    );
    let build = BuildOptions::new(opts.variant);
    let (model, vmap) = build_model(&graph, inst, &build)?;
    let assignment = encode_solution(sol, &vmap, &graph, inst)
        .map_err(|e| RunError::Validate(ValidateError::Malformed(e.to_string())))?;
    Ok(model.max_violation(&assignment))
}

impl Route {
    /// Short `D0 -> C1 -> S2 -> D0` rendering for logs and error messages.
    pub fn pretty(&self) -> String {
        self.vertices
            .iter()
            .map(|v| v.id.as_str())
            .collect::<Vec<_>>()
            .join(" -> ")
    }
}
