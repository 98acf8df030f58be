//! Solver toolkit for the time-effective electric vehicle routing problem
//! with time windows and partial recharges.
//!
//! The crate provides:
//!
//! * [`instance`] — benchmark file parsing and the raw problem data;
//! * [`graph`] — the clone-expanded routing graph with arc pre-processing;
//! * [`milp`] — a self-contained 0-1 MILP solver (bounded-variable simplex
//!   plus branch-and-bound) that both solution methods run on;
//! * [`formulation`] — the two-index routing MILP in its partial-recharge
//!   time-effective and full-recharge distance-minimizing variants;
//! * [`vnsb`] — a variable neighborhood search branching matheuristic built
//!   from local-branching constraints over the routing binaries;
//! * [`validate`] — an independent route simulator, feasibility checks and
//!   comparison metrics;
//! * [`oracle`] — an exhaustive-enumeration exact solver for tiny instances,
//!   used as ground truth in tests;
//! * [`report`] — run orchestration and per-instance reporting.

pub mod fixtures;
pub mod formulation;
pub mod graph;
pub mod instance;
pub mod milp;
pub mod oracle;
pub mod report;
pub mod solution;
pub mod validate;
pub mod vnsb;

pub use formulation::{build_model, decode_solution, encode_solution, objective_value, BuildOptions, ModelVariant, VariableMap};
pub use graph::{expand_graph, preprocess_arcs, Arc, ExpandedGraph, VertexRef, VertexRole};
pub use instance::{parse_instance, write_instance, FleetParams, Instance, Node, NodeKind, ParseError};
pub use milp::{branch_and_bound, solve_lp, MilpModel, MipResult, MipStatus, SolveConfig, WorkMeter};
pub use oracle::{enumerate_optimum, OracleConfig, OracleError};
pub use report::{Method, RunReport};
pub use solution::{Route, Solution, SolverInfo, Visit};
pub use validate::{gap_metrics, simulate_route, validate_solution, GapError, Violation, ViolationKind, ViolationReport};
pub use vnsb::{hamming_distance, local_branching_rows, vnsb_solve, Incumbent, VnsbConfig};
