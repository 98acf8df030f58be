//! Canonical schedule for a fixed stop sequence: depart as late as the
//! windows allow, then run forward. For a fixed sequence and fixed recharge
//! targets this minimizes route duration, so reported times do not depend
//! on which alternative optimum the LP happened to return.

use crate::instance::{Instance, Node, NodeKind};
use crate::solution::{Route, Visit, VisitKind};

/// One interior stop of a planned route.
pub struct PlanItem<'a> {
    pub node: &'a Node,
    pub recharge_to: Option<f64>,
}

/// Build the canonical route through `items` (interior stops only; depot
/// endpoints are added here). Infeasibility is not checked; the validator
/// owns that.
pub fn canonical_route(inst: &Instance, items: &[PlanItem]) -> Route {
    let p = &inst.params;
    let l0 = inst.horizon();
    let depot = &inst.depot;
    let k = items.len();

    let node_at = |i: usize| -> &Node {
        if i == 0 || i == k + 1 {
            depot
        } else {
            items[i - 1].node
        }
    };
    let leg_dist: Vec<f64> = (0..=k)
        .map(|i| node_at(i).distance_to(node_at(i + 1)))
        .collect();
    let leg_time: Vec<f64> = leg_dist.iter().map(|&d| inst.travel_time(d)).collect();

    // Battery and stop durations depend only on distances and targets.
    let mut battery_in = vec![p.battery_capacity; k + 2];
    let mut recharge_to: Vec<Option<f64>> = vec![None; k + 2];
    let mut stop_time = vec![0.0f64; k + 2];
    let mut level = p.battery_capacity;
    for i in 1..=k {
        level -= p.consumption_rate * leg_dist[i - 1];
        battery_in[i] = level;
        let item = &items[i - 1];
        if item.node.kind == NodeKind::Station {
            let target = item
                .recharge_to
                .unwrap_or(p.battery_capacity)
                .clamp(level, p.battery_capacity);
            recharge_to[i] = Some(target);
            stop_time[i] = p.recharge_rate * (target - level);
            level = target;
        } else {
            stop_time[i] = item.node.service;
        }
    }
    battery_in[k + 1] = level - p.consumption_rate * leg_dist[k];

    // Latest feasible service start per stop, walking backwards from the
    // horizon.
    let mut latest = vec![l0; k + 2];
    for i in (1..=k).rev() {
        let cap = if node_at(i).kind == NodeKind::Customer {
            node_at(i).due
        } else {
            l0
        };
        latest[i] = cap.min(latest[i + 1] - stop_time[i] - leg_time[i]);
    }
    let departure = (latest[1] - leg_time[0]).min(l0).max(depot.ready);

    // Forward replay from the latest departure.
    let mut visits = Vec::with_capacity(k + 2);
    visits.push(Visit {
        id: depot.id.clone(),
        kind: VisitKind::Depot,
        arrival: departure,
        departure,
        battery_on_arrival: p.battery_capacity,
        recharge_to: None,
        load_after: 0.0,
    });
    let mut clock = departure;
    let mut load = 0.0f64;
    for i in 1..=k {
        let node = node_at(i);
        let arrival = clock + leg_time[i - 1];
        let (kind, leave) = match node.kind {
            NodeKind::Customer => {
                load += node.demand;
                (VisitKind::Customer, arrival.max(node.ready) + node.service)
            }
            NodeKind::Station => (VisitKind::Station, arrival + stop_time[i]),
            NodeKind::Depot => unreachable!("depot as interior stop"),
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
    let back = clock + leg_time[k];
    visits.push(Visit {
        id: depot.id.clone(),
        kind: VisitKind::Depot,
        arrival: back,
        departure: back,
        battery_on_arrival: battery_in[k + 1],
        recharge_to: None,
        load_after: load,
    });
    Route { vertices: visits }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn min_duration_order_of_worked_example() {
        let inst = fixtures::figure1();
        // depot -> R2 -> R3 -> R4 -> R1 -> depot
        let items: Vec<PlanItem> = [1, 2, 3, 0]
            .iter()
            .map(|&i| PlanItem {
                node: &inst.customers[i],
                recharge_to: None,
            })
            .collect();
        let route = canonical_route(&inst, &items);
        assert_eq!(route.departure(), 480.0);
        assert_eq!(route.arrival(), 780.0);
        assert_eq!(route.duration(), 300.0);
    }

    #[test]
    fn min_distance_order_waits_three_hours() {
        let inst = fixtures::figure1();
        // depot -> R2 -> R1 -> R3 -> R4 -> depot
        let items: Vec<PlanItem> = [1, 0, 2, 3]
            .iter()
            .map(|&i| PlanItem {
                node: &inst.customers[i],
                recharge_to: None,
            })
            .collect();
        let route = canonical_route(&inst, &items);
        assert_eq!(route.duration(), 420.0);
        // 180 minutes of waiting at R1
        let r1 = &route.vertices[2];
        assert_eq!(r1.id, "R1");
        assert_eq!(r1.departure - r1.arrival, 180.0);
    }
}
