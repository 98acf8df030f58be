//! Built-in instances: the four-request worked example and seeded synthetic
//! generators for tests and benchmarks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instance::{FleetParams, Instance, Node, NodeKind};

fn customer(id: &str, x: f64, y: f64, demand: f64, ready: f64, due: f64, service: f64) -> Node {
    Node {
        id: id.to_string(),
        kind: NodeKind::Customer,
        x,
        y,
        demand,
        ready,
        due,
        service,
    }
}

fn station(id: &str, x: f64, y: f64, horizon: f64) -> Node {
    Node {
        id: id.to_string(),
        kind: NodeKind::Station,
        x,
        y,
        demand: 0.0,
        ready: 0.0,
        due: horizon,
        service: 0.0,
    }
}

fn depot(x: f64, y: f64, horizon: f64) -> Node {
    Node {
        id: "D0".to_string(),
        kind: NodeKind::Depot,
        x,
        y,
        demand: 0.0,
        ready: 0.0,
        due: horizon,
        service: 0.0,
    }
}

/// The four-request example on a line: requests R1..R4 at -60, -30, +30 and
/// +60 km from the depot, unit speed, battery slack everywhere.
///
/// Minimizing duration yields a 300-minute, 300-km route; minimizing
/// distance yields a 420-minute, 240-km route with 180 minutes of waiting.
pub fn figure1() -> Instance {
    let horizon = 900.0; // 15:00 in minutes-from-midnight
    Instance {
        depot: depot(0.0, 0.0, horizon),
        customers: vec![
            customer("R1", -60.0, 0.0, 0.0, 720.0, 840.0, 0.0),
            customer("R2", -30.0, 0.0, 0.0, 480.0, 510.0, 0.0),
            customer("R3", 30.0, 0.0, 0.0, 540.0, 840.0, 0.0),
            customer("R4", 60.0, 0.0, 0.0, 540.0, 840.0, 0.0),
        ],
        stations: vec![],
        params: FleetParams {
            battery_capacity: 1.0e5,
            load_capacity: 200.0,
            consumption_rate: 1.0,
            recharge_rate: 1.0,
            speed: 1.0,
        },
    }
}

/// Identifier used for the worked example in reports and tests.
pub const FIGURE1_ID: &str = "FIG1";

/// One customer 25 km east of the depot, no stations, generous horizon.
pub fn single_customer() -> Instance {
    let horizon = 1000.0;
    Instance {
        depot: depot(0.0, 0.0, horizon),
        customers: vec![customer("C1", 25.0, 0.0, 5.0, 100.0, 600.0, 10.0)],
        stations: vec![],
        params: FleetParams {
            battery_capacity: 1000.0,
            load_capacity: 100.0,
            consumption_rate: 1.0,
            recharge_rate: 2.0,
            speed: 1.0,
        },
    }
}

/// Two customers, one station halfway out; the battery only covers a direct
/// round trip to the nearer customer, so the far one needs a recharge stop.
pub fn recharge_needed() -> Instance {
    let horizon = 500.0;
    Instance {
        depot: depot(0.0, 0.0, horizon),
        customers: vec![
            customer("C1", 30.0, 0.0, 5.0, 0.0, 400.0, 5.0),
            customer("C2", 80.0, 0.0, 5.0, 0.0, 400.0, 5.0),
        ],
        stations: vec![station("S1", 40.0, 0.0, horizon)],
        params: FleetParams {
            battery_capacity: 100.0,
            load_capacity: 100.0,
            consumption_rate: 1.0,
            recharge_rate: 1.5,
            speed: 1.0,
        },
    }
}

/// One customer out of battery range even through the only station: no
/// feasible route exists.
pub fn unreachable_customer() -> Instance {
    let horizon = 10_000.0;
    Instance {
        depot: depot(0.0, 0.0, horizon),
        customers: vec![customer("C1", 500.0, 0.0, 1.0, 0.0, horizon, 0.0)],
        stations: vec![station("S1", 20.0, 0.0, horizon)],
        params: FleetParams {
            battery_capacity: 100.0,
            load_capacity: 10.0,
            consumption_rate: 1.0,
            recharge_rate: 1.0,
            speed: 1.0,
        },
    }
}

/// Deterministic synthetic instance with `n` customers and `f` stations in a
/// 100x100 box; wide windows, mild demands, battery sized so direct trips
/// usually work but long tours may need a stop.
pub fn synthetic(n: usize, f: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = 1000.0;
    let dep = depot(50.0, 50.0, horizon);
    let mut customers = Vec::with_capacity(n);
    for i in 0..n {
        let x = rng.gen_range(0.0..100.0);
        let y = rng.gen_range(0.0..100.0);
        let ready = rng.gen_range(0.0..500.0);
        let width = rng.gen_range(150.0..400.0);
        customers.push(customer(
            &format!("C{}", i + 1),
            x,
            y,
            rng.gen_range(1.0..30.0),
            ready,
            (ready + width).min(horizon - 100.0),
            rng.gen_range(5.0..15.0),
        ));
    }
    let mut stations = Vec::with_capacity(f);
    for i in 0..f {
        stations.push(station(
            &format!("S{}", i + 1),
            rng.gen_range(20.0..80.0),
            rng.gen_range(20.0..80.0),
            horizon,
        ));
    }
    Instance {
        depot: dep,
        customers,
        stations,
        params: FleetParams {
            battery_capacity: 220.0,
            load_capacity: 200.0,
            consumption_rate: 1.0,
            recharge_rate: 1.2,
            speed: 1.0,
        },
    }
}

/// Small random instance for oracle cross-checks: `n <= 4` customers,
/// `f <= 2` stations, geometry kept tight so exact enumeration stays cheap.
/// Feasibility is not guaranteed; callers filter with the oracle.
pub fn micro(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=4usize);
    let f = rng.gen_range(0..=2usize);
    let horizon = 300.0;
    let dep = depot(0.0, 0.0, horizon);
    let mut customers = Vec::with_capacity(n);
    for i in 0..n {
        let x: f64 = rng.gen_range(-40.0..40.0);
        let y: f64 = rng.gen_range(-40.0..40.0);
        let dist = (x * x + y * y).sqrt();
        let ready = rng.gen_range(0.0..120.0f64).max(0.0);
        let width = rng.gen_range(60.0..180.0);
        customers.push(customer(
            &format!("C{}", i + 1),
            x,
            y,
            rng.gen_range(1.0..10.0),
            ready.max(dist * 0.5),
            (ready + width).min(horizon - dist - 5.0).max(ready + 20.0),
            rng.gen_range(0.0..8.0),
        ));
    }
    let mut stations = Vec::with_capacity(f);
    for i in 0..f {
        stations.push(station(
            &format!("S{}", i + 1),
            rng.gen_range(-30.0..30.0),
            rng.gen_range(-30.0..30.0),
            horizon,
        ));
    }
    // Battery usually covers a round trip but not always two chained far
    // customers, so some instances genuinely need a recharge stop.
    let q = rng.gen_range(90.0..160.0);
    Instance {
        depot: dep,
        customers,
        stations,
        params: FleetParams {
            battery_capacity: q,
            load_capacity: 25.0,
            consumption_rate: 1.0,
            recharge_rate: rng.gen_range(0.5..1.5),
            speed: 1.0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{parse_instance, write_instance};

    #[test]
    fn figure1_distances_match_narrative() {
        let inst = figure1();
        let d = &inst.depot;
        let r: Vec<_> = inst.customers.iter().collect();
        assert_eq!(d.distance_to(r[1]), 30.0); // depot-R2
        assert_eq!(r[1].distance_to(r[0]), 30.0); // R2-R1
        assert_eq!(r[0].distance_to(r[2]), 90.0); // R1-R3
        assert_eq!(r[2].distance_to(r[3]), 30.0); // R3-R4
        assert_eq!(r[3].distance_to(d), 60.0); // R4-depot
        assert_eq!(r[1].distance_to(r[2]), 60.0); // R2-R3
        assert_eq!(r[0].distance_to(d), 60.0); // R1-depot
    }

    #[test]
    fn fixtures_survive_format_round_trip() {
        for inst in [figure1(), single_customer(), recharge_needed(), synthetic(5, 2, 7)] {
            let again = parse_instance(&write_instance(&inst)).unwrap();
            assert_eq!(inst, again);
        }
    }
}
