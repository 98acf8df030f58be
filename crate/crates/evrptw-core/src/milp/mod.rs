//! Generic 0-1 mixed-integer linear programming: model representation,
//! bounded-variable simplex for the LP relaxation, and branch-and-bound
//! with warm starts, objective cutoffs and deterministic work budgets.

pub mod branch;
pub mod model;
pub mod simplex;
pub mod work;

pub use branch::{branch_and_bound, Mip, MipError, MipResult, MipStatus, SolveConfig};
pub use model::{ColKind, Column, MilpModel, ModelError, Row, RowHandle, Sense};
pub use simplex::{solve_lp, BasisSnapshot, LpError, LpResult, LpStatus, SimplexEngine, Start};
pub use work::{WorkMeter, TICKS_PER_SECOND};
