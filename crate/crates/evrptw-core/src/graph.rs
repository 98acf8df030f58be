//! Directed routing graph with depot and station clones.
//!
//! Every route runs from a start-depot clone to an end-depot clone; each
//! physical station is replicated so a route set may visit it several times
//! while every clone keeps degree at most one.

use crate::instance::{Instance, Node, NodeKind};

/// Role of a vertex in the expanded graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexRole {
    StartDepot,
    EndDepot,
    Customer,
    StationClone,
}

impl VertexRole {
    pub fn is_depot(self) -> bool {
        matches!(self, VertexRole::StartDepot | VertexRole::EndDepot)
    }
}

/// A vertex of the expanded graph, pointing back at its base node.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexRef {
    pub role: VertexRole,
    /// Id of the underlying instance node.
    pub base_id: String,
    /// Which clone of the base node this is (0-based).
    pub clone_index: usize,
    /// Index into `Instance::customers` / `Instance::stations` for non-depots.
    pub base_index: usize,
}

/// Directed arc with precomputed distance and travel time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub distance: f64,
    pub time: f64,
}

/// The clone-expanded directed graph the MILP is built on.
#[derive(Debug, Clone)]
pub struct ExpandedGraph {
    pub vertices: Vec<VertexRef>,
    pub arcs: Vec<Arc>,
    pub depot_clone_count: usize,
    pub station_clone_count_per_station: usize,
    /// Arcs removed by demand pre-processing (0 before `preprocess_arcs`).
    pub removed_arc_count: usize,
    /// Whether `preprocess_arcs` has run.
    pub preprocessed: bool,
}

impl ExpandedGraph {
    pub fn start_depots(&self) -> impl Iterator<Item = usize> + '_ {
        self.vertices_with_role(VertexRole::StartDepot)
    }

    pub fn end_depots(&self) -> impl Iterator<Item = usize> + '_ {
        self.vertices_with_role(VertexRole::EndDepot)
    }

    pub fn customers(&self) -> impl Iterator<Item = usize> + '_ {
        self.vertices_with_role(VertexRole::Customer)
    }

    pub fn station_clones(&self) -> impl Iterator<Item = usize> + '_ {
        self.vertices_with_role(VertexRole::StationClone)
    }

    fn vertices_with_role(&self, role: VertexRole) -> impl Iterator<Item = usize> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .filter(move |(_, v)| v.role == role)
            .map(|(i, _)| i)
    }

    /// Base instance node of vertex `v`.
    pub fn base_node<'a>(&self, v: usize, inst: &'a Instance) -> &'a Node {
        let vr = &self.vertices[v];
        match vr.role {
            VertexRole::StartDepot | VertexRole::EndDepot => &inst.depot,
            VertexRole::Customer => &inst.customers[vr.base_index],
            VertexRole::StationClone => &inst.stations[vr.base_index],
        }
    }

    pub fn out_arcs(&self, v: usize) -> impl Iterator<Item = (usize, &Arc)> + '_ {
        self.arcs
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.from == v)
    }

    pub fn in_arcs(&self, v: usize) -> impl Iterator<Item = (usize, &Arc)> + '_ {
        self.arcs.iter().enumerate().filter(move |(_, a)| a.to == v)
    }

    pub fn find_arc(&self, from: usize, to: usize) -> Option<usize> {
        self.arcs.iter().position(|a| a.from == from && a.to == to)
    }
}

fn arc_allowed(vs: &[VertexRef], from: usize, to: usize) -> bool {
    if from == to {
        return false;
    }
    let f = &vs[from];
    let t = &vs[to];
    // Start depots only emit arcs, end depots only receive them, and no arc
    // joins two depot clones (routes must visit at least one customer or
    // station).
    match f.role {
        VertexRole::EndDepot => return false,
        VertexRole::StartDepot => {
            if t.role.is_depot() {
                return false;
            }
        }
        _ => {}
    }
    if t.role == VertexRole::StartDepot {
        return false;
    }
    // No hop between clones of the same physical station.
    if f.role == VertexRole::StationClone
        && t.role == VertexRole::StationClone
        && f.base_index == t.base_index
    {
        return false;
    }
    true
}

/// Build the clone-expanded graph: `depot_clones` start/end depot pairs and
/// `station_clones` replicas of every physical station, with all ordered
/// pairs as arcs minus the structural exclusions.
pub fn expand_graph(inst: &Instance, depot_clones: usize, station_clones: usize) -> ExpandedGraph {
    assert!(depot_clones >= 1, "need at least one depot clone pair");
    assert!(station_clones >= 1, "need at least one clone per station");

    let mut vertices = Vec::new();
    for k in 0..depot_clones {
        vertices.push(VertexRef {
            role: VertexRole::StartDepot,
            base_id: inst.depot.id.clone(),
            clone_index: k,
            base_index: 0,
        });
    }
    for k in 0..depot_clones {
        vertices.push(VertexRef {
            role: VertexRole::EndDepot,
            base_id: inst.depot.id.clone(),
            clone_index: k,
            base_index: 0,
        });
    }
    for (ci, c) in inst.customers.iter().enumerate() {
        vertices.push(VertexRef {
            role: VertexRole::Customer,
            base_id: c.id.clone(),
            clone_index: 0,
            base_index: ci,
        });
    }
    for (si, s) in inst.stations.iter().enumerate() {
        for k in 0..station_clones {
            vertices.push(VertexRef {
                role: VertexRole::StationClone,
                base_id: s.id.clone(),
                clone_index: k,
                base_index: si,
            });
        }
    }

    let graph_node = |v: &VertexRef| -> &Node {
        match v.role {
            VertexRole::StartDepot | VertexRole::EndDepot => &inst.depot,
            VertexRole::Customer => &inst.customers[v.base_index],
            VertexRole::StationClone => &inst.stations[v.base_index],
        }
    };

    let mut arcs = Vec::new();
    for from in 0..vertices.len() {
        for to in 0..vertices.len() {
            if !arc_allowed(&vertices, from, to) {
                continue;
            }
            let d = graph_node(&vertices[from]).distance_to(graph_node(&vertices[to]));
            arcs.push(Arc {
                from,
                to,
                distance: d,
                time: inst.travel_time(d),
            });
        }
    }

    ExpandedGraph {
        vertices,
        arcs,
        depot_clone_count: depot_clones,
        station_clone_count_per_station: station_clones,
        removed_arc_count: 0,
        preprocessed: false,
    }
}

/// Drop customer-customer arcs whose combined demand exceeds the vehicle
/// load capacity. Idempotent.
pub fn preprocess_arcs(g: &ExpandedGraph, inst: &Instance) -> ExpandedGraph {
    let cap = inst.params.load_capacity;
    let mut out = g.clone();
    let before = out.arcs.len();
    out.arcs.retain(|a| {
        let f = &g.vertices[a.from];
        let t = &g.vertices[a.to];
        if f.role == VertexRole::Customer && t.role == VertexRole::Customer {
            inst.customers[f.base_index].demand + inst.customers[t.base_index].demand <= cap
        } else {
            true
        }
    });
    out.removed_arc_count = g.removed_arc_count + (before - out.arcs.len());
    out.preprocessed = true;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn five_two() -> Instance {
        fixtures::synthetic(5, 2, 0xC0FFEE)
    }

    #[test]
    fn vertex_count_matches_closed_form() {
        let inst = five_two();
        let g = expand_graph(&inst, 5, 2);
        // 5 start + 5 end depot clones + 5 customers + 2 stations x 2 clones.
        assert_eq!(g.vertices.len(), 5 + 5 + 5 + 2 * 2);
    }

    #[test]
    fn no_arc_between_clones_of_same_station() {
        let inst = five_two();
        let g = expand_graph(&inst, 5, 2);
        let clones: Vec<usize> = g
            .station_clones()
            .filter(|&v| g.vertices[v].base_index == 0)
            .collect();
        assert_eq!(clones.len(), 2);
        assert!(g.find_arc(clones[0], clones[1]).is_none());
        assert!(g.find_arc(clones[1], clones[0]).is_none());
    }

    #[test]
    fn start_depots_have_no_incoming_arcs() {
        let inst = five_two();
        let g = expand_graph(&inst, 5, 2);
        for v in g.start_depots() {
            assert_eq!(g.in_arcs(v).count(), 0);
        }
        for v in g.end_depots() {
            assert_eq!(g.out_arcs(v).count(), 0);
        }
    }

    #[test]
    fn no_depot_to_depot_arcs() {
        let inst = five_two();
        let g = expand_graph(&inst, 3, 1);
        for a in &g.arcs {
            assert!(
                !(g.vertices[a.from].role.is_depot() && g.vertices[a.to].role.is_depot()),
                "arc {:?} joins two depot clones",
                a
            );
        }
    }

    #[test]
    fn time_is_distance_over_speed() {
        let inst = five_two();
        let g = expand_graph(&inst, 2, 1);
        for a in &g.arcs {
            let err = (a.time * inst.params.speed - a.distance).abs();
            assert!(err <= 1e-9 * a.distance.max(1.0));
        }
    }

    #[test]
    fn preprocessing_removes_overweight_pairs_both_ways() {
        let mut inst = five_two();
        inst.params.load_capacity = 200.0;
        for c in &mut inst.customers {
            c.demand = 10.0;
        }
        inst.customers[0].demand = 150.0;
        inst.customers[1].demand = 60.0;
        let g = expand_graph(&inst, 5, 2);
        let gp = preprocess_arcs(&g, &inst);
        let c0 = g.customers().next().unwrap();
        let c1 = g.customers().nth(1).unwrap();
        assert!(g.find_arc(c0, c1).is_some());
        assert!(gp.find_arc(c0, c1).is_none());
        assert!(gp.find_arc(c1, c0).is_none());
        // 150 + 60 > 200 only for the (0, 1) pair.
        assert_eq!(gp.removed_arc_count, 2);
        // Light pairs survive.
        let c2 = g.customers().nth(2).unwrap();
        assert!(gp.find_arc(c1, c2).is_some());
    }

    #[test]
    fn preprocessing_is_idempotent_and_identity_when_light() {
        let mut inst = five_two();
        for c in &mut inst.customers {
            c.demand = 1.0;
        }
        let g = expand_graph(&inst, 5, 2);
        let once = preprocess_arcs(&g, &inst);
        assert_eq!(once.arcs.len(), g.arcs.len());
        assert_eq!(once.removed_arc_count, 0);
        let twice = preprocess_arcs(&once, &inst);
        assert_eq!(once.arcs, twice.arcs);
        assert_eq!(once.removed_arc_count, twice.removed_arc_count);
    }
}
