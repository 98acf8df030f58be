//! Problem instances: vertices, fleet parameters, and the benchmark file
//! format.
//!
//! The on-disk format is the one used by the Schneider et al. E-VRPTW
//! benchmark set: a whitespace-separated vertex table followed by a blank
//! line and five fleet parameter lines of the form
//! `<letter> <free text> /<decimal>/`.

use std::fmt::Write as _;

use thiserror::Error;

/// What a vertex in the raw instance is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Depot,
    Customer,
    Station,
}

impl NodeKind {
    pub fn type_letter(self) -> char {
        match self {
            NodeKind::Depot => 'd',
            NodeKind::Station => 'f',
            NodeKind::Customer => 'c',
        }
    }
}

/// A vertex of the raw instance: depot, customer or recharging station.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub x: f64,
    pub y: f64,
    /// Pickup demand, zero for depot and stations.
    pub demand: f64,
    /// Time window opening.
    pub ready: f64,
    /// Time window closing.
    pub due: f64,
    /// Service duration, zero for depot and stations.
    pub service: f64,
}

impl Node {
    pub fn distance_to(&self, other: &Node) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Homogeneous fleet parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetParams {
    /// Battery capacity Q (energy units).
    pub battery_capacity: f64,
    /// Load capacity C (load units).
    pub load_capacity: f64,
    /// Energy consumed per unit distance (r).
    pub consumption_rate: f64,
    /// Recharging time per unit energy (g).
    pub recharge_rate: f64,
    /// Average speed v (distance per time).
    pub speed: f64,
}

impl FleetParams {
    fn validate(&self) -> Result<(), ParseError> {
        for (name, v) in [
            ("Q", self.battery_capacity),
            ("C", self.load_capacity),
            ("r", self.consumption_rate),
            ("g", self.recharge_rate),
            ("v", self.speed),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ParseError::NonPositiveParameter(name.to_string()));
            }
        }
        Ok(())
    }
}

/// A full problem instance: one depot, customers, stations, fleet.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub depot: Node,
    pub customers: Vec<Node>,
    pub stations: Vec<Node>,
    pub params: FleetParams,
}

impl Instance {
    pub fn num_customers(&self) -> usize {
        self.customers.len()
    }

    pub fn num_stations(&self) -> usize {
        self.stations.len()
    }

    /// Route-duration horizon: the depot due date l_0.
    pub fn horizon(&self) -> f64 {
        self.depot.due
    }

    /// Travel time for a given distance under the fleet speed.
    pub fn travel_time(&self, distance: f64) -> f64 {
        distance / self.params.speed
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("malformed line {0}: {1}")]
    MalformedLine(usize, String),
    #[error("missing parameter {0}")]
    MissingParameter(String),
    #[error("duplicate vertex id {0}")]
    DuplicateId(String),
    #[error("no depot row in instance")]
    NoDepot,
    #[error("parameter {0} must be strictly positive")]
    NonPositiveParameter(String),
}

fn parse_row(line_no: usize, line: &str) -> Result<Node, ParseError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 8 {
        return Err(ParseError::MalformedLine(
            line_no,
            format!("expected 8 columns, got {}", fields.len()),
        ));
    }
    let kind = match fields[1] {
        "d" => NodeKind::Depot,
        "f" => NodeKind::Station,
        "c" => NodeKind::Customer,
        other => {
            return Err(ParseError::MalformedLine(
                line_no,
                format!("unknown vertex type {other:?}"),
            ))
        }
    };
    let mut nums = [0.0f64; 6];
    for (slot, field) in nums.iter_mut().zip(&fields[2..]) {
        *slot = field.parse::<f64>().map_err(|_| {
            ParseError::MalformedLine(line_no, format!("bad number {field:?}"))
        })?;
    }
    let node = Node {
        id: fields[0].to_string(),
        kind,
        x: nums[0],
        y: nums[1],
        demand: nums[2],
        ready: nums[3],
        due: nums[4],
        service: nums[5],
    };
    if node.ready > node.due {
        return Err(ParseError::MalformedLine(
            line_no,
            format!("time window [{}, {}] is empty", node.ready, node.due),
        ));
    }
    if node.kind != NodeKind::Customer && (node.demand != 0.0 || node.service != 0.0) {
        return Err(ParseError::MalformedLine(
            line_no,
            "depot/station rows must have zero demand and service".to_string(),
        ));
    }
    if node.demand < 0.0 {
        return Err(ParseError::MalformedLine(
            line_no,
            "negative demand".to_string(),
        ));
    }
    Ok(node)
}

/// Parse a benchmark instance from its textual form.
///
/// Rows map to vertices by their type column (`d`, `f`, `c`); the trailing
/// block supplies Q, C, r, g and v in any order.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut depot: Option<Node> = None;
    let mut customers = Vec::new();
    let mut stations = Vec::new();
    let mut seen_ids: std::collections::BTreeSet<String> = Default::default();

    let mut q = None;
    let mut c = None;
    let mut r = None;
    let mut g = None;
    let mut v = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if idx == 0 && trimmed.starts_with("StringID") {
            continue;
        }
        // Parameter lines carry their value between slashes.
        if let Some(open) = trimmed.find('/') {
            let close = trimmed.rfind('/').unwrap();
            if close > open {
                let letter = trimmed.split_whitespace().next().unwrap_or("");
                let value: f64 = trimmed[open + 1..close].parse().map_err(|_| {
                    ParseError::MalformedLine(line_no, "bad parameter value".to_string())
                })?;
                match letter {
                    "Q" => q = Some(value),
                    "C" => c = Some(value),
                    "r" => r = Some(value),
                    "g" => g = Some(value),
                    "v" => v = Some(value),
                    other => {
                        return Err(ParseError::MalformedLine(
                            line_no,
                            format!("unknown parameter letter {other:?}"),
                        ))
                    }
                }
                continue;
            }
        }
        let node = parse_row(line_no, trimmed)?;
        if !seen_ids.insert(node.id.clone()) {
            return Err(ParseError::DuplicateId(node.id));
        }
        match node.kind {
            NodeKind::Depot => {
                if depot.is_some() {
                    return Err(ParseError::MalformedLine(
                        line_no,
                        "second depot row".to_string(),
                    ));
                }
                depot = Some(node);
            }
            NodeKind::Customer => customers.push(node),
            NodeKind::Station => stations.push(node),
        }
    }

    let depot = depot.ok_or(ParseError::NoDepot)?;
    if depot.due <= 0.0 {
        return Err(ParseError::MalformedLine(
            0,
            "depot due date must be positive".to_string(),
        ));
    }
    let params = FleetParams {
        battery_capacity: q.ok_or_else(|| ParseError::MissingParameter("Q".into()))?,
        load_capacity: c.ok_or_else(|| ParseError::MissingParameter("C".into()))?,
        consumption_rate: r.ok_or_else(|| ParseError::MissingParameter("r".into()))?,
        recharge_rate: g.ok_or_else(|| ParseError::MissingParameter("g".into()))?,
        speed: v.ok_or_else(|| ParseError::MissingParameter("v".into()))?,
    };
    params.validate()?;
    Ok(Instance {
        depot,
        customers,
        stations,
        params,
    })
}

fn write_row(out: &mut String, n: &Node) {
    writeln!(
        out,
        "{}   {}   {}   {}   {}   {}   {}   {}",
        n.id,
        n.kind.type_letter(),
        n.x,
        n.y,
        n.demand,
        n.ready,
        n.due,
        n.service
    )
    .unwrap();
}

/// Render an instance back into the benchmark file format.
///
/// `parse_instance(&write_instance(inst))` is structurally equal to `inst`.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    out.push_str("StringID   Type   x   y   demand   ReadyTime   DueDate   ServiceTime\n");
    write_row(&mut out, &inst.depot);
    for s in &inst.stations {
        write_row(&mut out, s);
    }
    for c in &inst.customers {
        write_row(&mut out, c);
    }
    out.push('\n');
    let p = &inst.params;
    writeln!(out, "Q Vehicle fuel tank capacity /{}/", p.battery_capacity).unwrap();
    writeln!(out, "C Vehicle load capacity /{}/", p.load_capacity).unwrap();
    writeln!(out, "r fuel consumption rate /{}/", p.consumption_rate).unwrap();
    writeln!(out, "g inverse refueling rate /{}/", p.recharge_rate).unwrap();
    writeln!(out, "v average Velocity /{}/", p.speed).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
StringID   Type   x   y   demand   ReadyTime   DueDate   ServiceTime
D0   d   40.0   50.0   0.0   0.0   1236.0   0.0
S0   f   33.0   44.0   0.0   0.0   1236.0   0.0
S1   f   55.0   60.0   0.0   0.0   1236.0   0.0
C1   c   45.0   68.0   10.0   912.0   967.0   90.0
C2   c   45.0   70.0   30.0   825.0   870.0   90.0
C3   c   42.0   66.0   10.0   65.0   146.0   90.0
C4   c   42.0   68.0   10.0   727.0   782.0   90.0
C5   c   42.0   65.0   10.0   15.0   67.0   90.0

Q Vehicle fuel tank capacity /77.75/
C Vehicle load capacity /200.0/
r fuel consumption rate /1.0/
g inverse refueling rate /3.47/
v average Velocity /1.0/
";

    #[test]
    fn parses_five_customer_shape() {
        let inst = parse_instance(SAMPLE).unwrap();
        assert_eq!(inst.num_customers(), 5);
        assert_eq!(inst.num_stations(), 2);
        assert_eq!(inst.depot.id, "D0");
        assert_eq!(inst.params.battery_capacity, 77.75);
        assert_eq!(inst.params.recharge_rate, 3.47);
        assert_eq!(inst.horizon(), 1236.0);
    }

    #[test]
    fn unit_speed_makes_time_equal_distance() {
        let inst = parse_instance(SAMPLE).unwrap();
        assert_eq!(inst.params.speed, 1.0);
        let d = inst.depot.distance_to(&inst.customers[0]);
        assert_eq!(inst.travel_time(d), d);
    }

    #[test]
    fn missing_load_capacity_is_reported() {
        let text = SAMPLE.replace("C Vehicle load capacity /200.0/\n", "");
        assert_eq!(
            parse_instance(&text),
            Err(ParseError::MissingParameter("C".into()))
        );
    }

    #[test]
    fn duplicate_id_is_reported() {
        let text = SAMPLE.replace("C2   c", "C1   c");
        assert_eq!(parse_instance(&text), Err(ParseError::DuplicateId("C1".into())));
    }

    #[test]
    fn no_depot_is_reported() {
        let text = SAMPLE.replace("D0   d   40.0   50.0   0.0   0.0   1236.0   0.0\n", "");
        assert_eq!(parse_instance(&text), Err(ParseError::NoDepot));
    }

    #[test]
    fn malformed_row_carries_line_number() {
        let text = SAMPLE.replace(
            "C5   c   42.0   65.0   10.0   15.0   67.0   90.0",
            "C5   c   42.0   sixty-five   10.0   15.0   67.0   90.0",
        );
        match parse_instance(&text) {
            Err(ParseError::MalformedLine(n, _)) => assert_eq!(n, 9),
            other => panic!("expected MalformedLine, got {other:?}"),
        }
    }

    #[test]
    fn crlf_accepted() {
        let text = SAMPLE.replace('\n', "\r\n");
        assert_eq!(parse_instance(&text), parse_instance(SAMPLE));
    }

    #[test]
    fn round_trip() {
        let inst = parse_instance(SAMPLE).unwrap();
        let again = parse_instance(&write_instance(&inst)).unwrap();
        assert_eq!(inst, again);
    }
}
