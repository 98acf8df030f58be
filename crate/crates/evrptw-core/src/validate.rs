//! Ground-truth route simulation against the raw instance, independent of
//! the MILP: forward replay of each route, feasibility violations as data,
//! and the percentage-gap metrics used in benchmark tables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, Node, NodeKind};
use crate::report::RunReport;
use crate::solution::{Route, Solution, Visit, VisitKind};

/// Slack allowed before a discrepancy counts as a violation, in native
/// units (times, loads, energies).
pub const SIM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    TimeWindow,
    BatteryNegative,
    BatteryOverCap,
    LoadOverCap,
    HorizonExceeded,
    StationReuse,
    CustomerMissingOrDuplicated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub route: Option<usize>,
    pub visit: Option<usize>,
    pub kind: ViolationKind,
    /// How far past the limit, in native units.
    pub magnitude: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ValidateError {
    #[error("solution references unknown vertex id {0}")]
    UnknownId(String),
    #[error("malformed solution: {0}")]
    Malformed(String),
}

/// A route to simulate: stop ids with recharge targets, and the departure
/// time from the depot.
#[derive(Debug, Clone)]
pub struct RoutePlan {
    pub departure: f64,
    pub stops: Vec<PlannedStop>,
}

#[derive(Debug, Clone)]
pub struct PlannedStop {
    pub id: String,
    pub recharge_to: Option<f64>,
}

impl RoutePlan {
    /// Plan with the given interior stop ids (no depots) and no recharging.
    pub fn through(departure: f64, ids: &[&str]) -> Self {
        RoutePlan {
            departure,
            stops: ids
                .iter()
                .map(|id| PlannedStop {
                    id: id.to_string(),
                    recharge_to: None,
                })
                .collect(),
        }
    }
}

fn node_by_id<'a>(inst: &'a Instance, id: &str) -> Option<&'a Node> {
    if inst.depot.id == id {
        return Some(&inst.depot);
    }
    inst.customers
        .iter()
        .chain(inst.stations.iter())
        .find(|n| n.id == id)
}

/// Forward simulation of one route from the depot and back: arrival is
/// departure of the predecessor plus travel time, service waits for the
/// window to open, recharging takes `g * (target - level)`, battery drains
/// `r * d` per leg, and pickups accumulate. Violations are data, not
/// errors.
pub fn simulate_route(
    plan: &RoutePlan,
    inst: &Instance,
) -> Result<(Route, Vec<Violation>), ValidateError> {
    let p = &inst.params;
    let mut violations = Vec::new();
    let mut visits = Vec::with_capacity(plan.stops.len() + 2);

    let mut clock = plan.departure;
    if clock < inst.depot.ready - SIM_TOL {
        violations.push(Violation {
            route: None,
            visit: Some(0),
            kind: ViolationKind::TimeWindow,
            magnitude: inst.depot.ready - clock,
            detail: format!("departure {clock} before depot opens"),
        });
    }
    visits.push(Visit {
        id: inst.depot.id.clone(),
        kind: VisitKind::Depot,
        arrival: clock,
        departure: clock,
        battery_on_arrival: p.battery_capacity,
        recharge_to: None,
        load_after: 0.0,
    });

    let mut battery = p.battery_capacity;
    let mut load = 0.0f64;
    let mut here: &Node = &inst.depot;

    for (vi, stop) in plan.stops.iter().enumerate() {
        let node = node_by_id(inst, &stop.id).ok_or_else(|| ValidateError::UnknownId(stop.id.clone()))?;
        if node.kind == NodeKind::Depot {
            return Err(ValidateError::Malformed(
                "depot appears as an interior stop".to_string(),
            ));
        }
        let d = here.distance_to(node);
        let arrival = clock + inst.travel_time(d);
        battery -= p.consumption_rate * d;
        let battery_at_arrival = battery;
        if battery < -SIM_TOL {
            violations.push(Violation {
                route: None,
                visit: Some(vi + 1),
                kind: ViolationKind::BatteryNegative,
                magnitude: -battery,
                detail: format!("battery {battery:.6} on arrival at {}", stop.id),
            });
        }

        let (kind, departure, recharge_to) = match node.kind {
            NodeKind::Customer => {
                let start = arrival.max(node.ready);
                if arrival > node.due + SIM_TOL {
                    violations.push(Violation {
                        route: None,
                        visit: Some(vi + 1),
                        kind: ViolationKind::TimeWindow,
                        magnitude: arrival - node.due,
                        detail: format!("arrival {arrival:.6} after due {:.6} at {}", node.due, stop.id),
                    });
                }
                load += node.demand;
                if load > p.load_capacity + SIM_TOL {
                    violations.push(Violation {
                        route: None,
                        visit: Some(vi + 1),
                        kind: ViolationKind::LoadOverCap,
                        magnitude: load - p.load_capacity,
                        detail: format!("load {load:.6} after pickup at {}", stop.id),
                    });
                }
                (VisitKind::Customer, start + node.service, None)
            }
            NodeKind::Station => {
                let mut target = stop.recharge_to.unwrap_or(p.battery_capacity);
                if target > p.battery_capacity + SIM_TOL {
                    violations.push(Violation {
                        route: None,
                        visit: Some(vi + 1),
                        kind: ViolationKind::BatteryOverCap,
                        magnitude: target - p.battery_capacity,
                        detail: format!("recharge target {target:.6} above capacity at {}", stop.id),
                    });
                    target = p.battery_capacity;
                }
                let effective = target.max(battery);
                let duration = p.recharge_rate * (effective - battery);
                battery = effective;
                (VisitKind::Station, arrival + duration, Some(effective))
            }
            NodeKind::Depot => unreachable!(),
        };
        visits.push(Visit {
            id: stop.id.clone(),
            kind,
            arrival,
            departure,
            battery_on_arrival: battery_at_arrival,
            recharge_to,
            load_after: load,
        });
        clock = departure;
        here = node;
    }

    // Return leg to the depot.
    let d = here.distance_to(&inst.depot);
    let arrival = clock + inst.travel_time(d);
    battery -= p.consumption_rate * d;
    if battery < -SIM_TOL {
        violations.push(Violation {
            route: None,
            visit: Some(plan.stops.len() + 1),
            kind: ViolationKind::BatteryNegative,
            magnitude: -battery,
            detail: "battery negative on the return leg".to_string(),
        });
    }
    if arrival > inst.horizon() + SIM_TOL {
        violations.push(Violation {
            route: None,
            visit: Some(plan.stops.len() + 1),
            kind: ViolationKind::HorizonExceeded,
            magnitude: arrival - inst.horizon(),
            detail: format!("returned at {arrival:.6}, horizon {:.6}", inst.horizon()),
        });
    }
    visits.push(Visit {
        id: inst.depot.id.clone(),
        kind: VisitKind::Depot,
        arrival,
        departure: arrival,
        battery_on_arrival: battery,
        recharge_to: None,
        load_after: load,
    });

    Ok((Route { vertices: visits }, violations))
}

/// Validate a full solution: per-route simulation plus global customer
/// coverage and station-clone budget checks. `station_clone_budget` is the
/// number of clones each physical station had in the solver's graph.
pub fn validate_solution(
    sol: &Solution,
    inst: &Instance,
    station_clone_budget: usize,
) -> Result<ViolationReport, ValidateError> {
    let mut report = ViolationReport::default();
    let mut customer_count: std::collections::BTreeMap<&str, usize> = inst
        .customers
        .iter()
        .map(|c| (c.id.as_str(), 0usize))
        .collect();
    let mut station_count: std::collections::BTreeMap<&str, usize> = inst
        .stations
        .iter()
        .map(|s| (s.id.as_str(), 0usize))
        .collect();

    for (ri, route) in sol.routes.iter().enumerate() {
        if route.vertices.len() < 2
            || route.vertices.first().unwrap().kind != VisitKind::Depot
            || route.vertices.last().unwrap().kind != VisitKind::Depot
        {
            return Err(ValidateError::Malformed(format!(
                "route {ri} does not start and end at the depot"
            )));
        }
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
        let (_, mut violations) = simulate_route(&plan, inst)?;
        for v in &mut violations {
            v.route = Some(ri);
        }
        report.violations.append(&mut violations);

        // Claimed schedule must respect windows too: a hand-edited arrival
        // past a due date is a violation even if the sequence itself could
        // be driven feasibly.
        for (vi, visit) in route.vertices.iter().enumerate() {
            let node = node_by_id(inst, &visit.id)
                .ok_or_else(|| ValidateError::UnknownId(visit.id.clone()))?;
            if visit.kind == VisitKind::Customer && visit.arrival > node.due + SIM_TOL {
                let dup = report.violations.iter().any(|w| {
                    w.route == Some(ri)
                        && w.visit == Some(vi)
                        && w.kind == ViolationKind::TimeWindow
                });
                if !dup {
                    report.violations.push(Violation {
                        route: Some(ri),
                        visit: Some(vi),
                        kind: ViolationKind::TimeWindow,
                        magnitude: visit.arrival - node.due,
                        detail: format!("claimed arrival {} after due {}", visit.arrival, node.due),
                    });
                }
            }
            match visit.kind {
                VisitKind::Customer => {
                    *customer_count
                        .get_mut(visit.id.as_str())
                        .ok_or_else(|| ValidateError::UnknownId(visit.id.clone()))? += 1;
                }
                VisitKind::Station => {
                    *station_count
                        .get_mut(visit.id.as_str())
                        .ok_or_else(|| ValidateError::UnknownId(visit.id.clone()))? += 1;
                }
                VisitKind::Depot => {}
            }
        }
    }

    for (id, count) in customer_count {
        if count != 1 {
            report.violations.push(Violation {
                route: None,
                visit: None,
                kind: ViolationKind::CustomerMissingOrDuplicated,
                magnitude: (count as f64 - 1.0).abs(),
                detail: format!("customer {id} visited {count} times"),
            });
        }
    }
    for (id, count) in station_count {
        if count > station_clone_budget {
            report.violations.push(Violation {
                route: None,
                visit: None,
                kind: ViolationKind::StationReuse,
                magnitude: (count - station_clone_budget) as f64,
                detail: format!(
                    "station {id} visited {count} times with {station_clone_budget} clones"
                ),
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapMetrics {
    /// Percentage change of total travel distance relative to the baseline.
    pub delta_ttd: f64,
    /// Percentage change of total time outside the depot.
    pub delta_ttod: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum GapError {
    #[error("reference {0} is zero")]
    DivisionByZero(&'static str),
}

/// Percentage gaps of `candidate` relative to `baseline`:
/// `(metric_candidate - metric_baseline) / metric_baseline * 100`.
pub fn gap_metrics(baseline: &RunReport, candidate: &RunReport) -> Result<GapMetrics, GapError> {
    if baseline.ttd == 0.0 {
        return Err(GapError::DivisionByZero("ttd"));
    }
    if baseline.ttod == 0.0 {
        return Err(GapError::DivisionByZero("ttod"));
    }
    Ok(GapMetrics {
        delta_ttd: (candidate.ttd - baseline.ttd) / baseline.ttd * 100.0,
        delta_ttod: (candidate.ttod - baseline.ttod) / baseline.ttod * 100.0,
    })
}
