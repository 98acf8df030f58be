//! Decoded solutions: routes with per-visit schedules, and their JSON form.
//!
//! The JSON schema is fixed: `{ instance_id, variant, vehicles, ttd, ttod,
//! routes: [ { vertices: [ { id, kind, arrival, departure,
//! battery_on_arrival, recharge_to?, load_after } ] } ], solver: { status,
//! wall_time_s, nodes } }`. Times are in the instance's native units and
//! `recharge_to` appears only on station visits.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitKind {
    Depot,
    Customer,
    Station,
}

/// One stop of a route with its simulated schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub id: String,
    pub kind: VisitKind,
    pub arrival: f64,
    pub departure: f64,
    pub battery_on_arrival: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recharge_to: Option<f64>,
    /// Load on board after serving this stop.
    pub load_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub vertices: Vec<Visit>,
}

impl Route {
    /// Departure from the start depot.
    pub fn departure(&self) -> f64 {
        self.vertices.first().map_or(0.0, |v| v.departure)
    }

    /// Arrival back at the end depot.
    pub fn arrival(&self) -> f64 {
        self.vertices.last().map_or(0.0, |v| v.arrival)
    }

    pub fn duration(&self) -> f64 {
        self.arrival() - self.departure()
    }

    /// Ids of the stops between the depot endpoints.
    pub fn interior_ids(&self) -> impl Iterator<Item = &str> {
        self.vertices[1..self.vertices.len().saturating_sub(1)]
            .iter()
            .map(|v| v.id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub status: String,
    pub wall_time_s: f64,
    pub nodes: u64,
}

impl Default for SolverInfo {
    fn default() -> Self {
        SolverInfo {
            status: "none".to_string(),
            wall_time_s: 0.0,
            nodes: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub instance_id: String,
    pub variant: String,
    pub vehicles: usize,
    /// Total travel distance over all traversed arcs.
    pub ttd: f64,
    /// Total time outside the depot: sum of route durations.
    pub ttod: f64,
    pub routes: Vec<Route>,
    pub solver: SolverInfo,
}

impl Solution {
    pub fn empty(instance_id: &str, variant: &str) -> Self {
        Solution {
            instance_id: instance_id.to_string(),
            variant: variant.to_string(),
            vehicles: 0,
            ttd: 0.0,
            ttod: 0.0,
            routes: Vec::new(),
            solver: SolverInfo::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_field_names() {
        let sol = Solution {
            instance_id: "X".into(),
            variant: "partial".into(),
            vehicles: 1,
            ttd: 10.0,
            ttod: 12.5,
            routes: vec![Route {
                vertices: vec![
                    Visit {
                        id: "D0".into(),
                        kind: VisitKind::Depot,
                        arrival: 0.0,
                        departure: 0.0,
                        battery_on_arrival: 100.0,
                        recharge_to: None,
                        load_after: 0.0,
                    },
                    Visit {
                        id: "S1".into(),
                        kind: VisitKind::Station,
                        arrival: 5.0,
                        departure: 6.0,
                        battery_on_arrival: 95.0,
                        recharge_to: Some(100.0),
                        load_after: 0.0,
                    },
                ],
            }],
            solver: SolverInfo {
                status: "optimal".into(),
                wall_time_s: 0.5,
                nodes: 3,
            },
        };
        let text = sol.to_json();
        for key in [
            "instance_id",
            "variant",
            "vehicles",
            "ttd",
            "ttod",
            "routes",
            "vertices",
            "battery_on_arrival",
            "recharge_to",
            "load_after",
            "wall_time_s",
        ] {
            assert!(text.contains(key), "missing key {key}");
        }
        // recharge_to is omitted on non-stations
        let depot_chunk = text.split("\"S1\"").next().unwrap();
        assert!(!depot_chunk.contains("recharge_to"));
        assert_eq!(Solution::from_json(&text).unwrap(), sol);
    }
}
