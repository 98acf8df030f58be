//! Sparse 0-1 mixed-integer linear model: columns, rows, mutation with
//! push/pop row handles, an independent row evaluator, and an LP-format
//! text dump.

use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub kind: ColKind,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// Sparse row: terms are (column index, coefficient) pairs.
#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Handle returned by [`MilpModel::add_row`]; rows are removed in LIFO
/// order, which is what the local-branching push/pop discipline needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowHandle {
    index: usize,
    generation: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("stale row handle")]
    StaleHandle,
    #[error("value {value} outside bounds [{lower}, {upper}] of column {name}")]
    ValueOutOfBounds {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
}

/// A minimization MILP over binary and bounded continuous columns.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    generation: u64,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_binary(&mut self, name: impl Into<String>, objective: f64) -> usize {
        self.columns.push(Column {
            name: name.into(),
            kind: ColKind::Binary,
            lower: 0.0,
            upper: 1.0,
            objective,
        });
        self.columns.len() - 1
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> usize {
        assert!(lower <= upper, "empty bound interval");
        self.columns.push(Column {
            name: name.into(),
            kind: ColKind::Continuous,
            lower,
            upper,
            objective,
        });
        self.columns.len() - 1
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn binary_cols(&self) -> impl Iterator<Item = usize> + '_ {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ColKind::Binary)
            .map(|(i, _)| i)
    }

    pub fn col_by_name(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Append a row. Panics on out-of-range column indices or non-finite
    /// coefficients; those are construction bugs, not runtime conditions.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> RowHandle {
        for &(col, coef) in &terms {
            assert!(col < self.columns.len(), "row references unknown column");
            assert!(coef.is_finite(), "non-finite coefficient");
        }
        assert!(rhs.is_finite(), "non-finite rhs");
        self.rows.push(Row {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
        self.generation += 1;
        RowHandle {
            index: self.rows.len() - 1,
            generation: self.generation,
        }
    }

    /// Remove the row added last. Returns [`ModelError::StaleHandle`] if the
    /// handle does not name the top of the row stack.
    pub fn remove_row(&mut self, handle: RowHandle) -> Result<(), ModelError> {
        if handle.generation != self.generation || handle.index + 1 != self.rows.len() {
            return Err(ModelError::StaleHandle);
        }
        self.rows.pop();
        self.generation += 1;
        Ok(())
    }

    /// Pin a column to a single value by collapsing its bounds.
    pub fn fix_column(&mut self, name: &str, value: f64) -> Result<(), ModelError> {
        let idx = self
            .col_by_name(name)
            .ok_or_else(|| ModelError::UnknownColumn(name.to_string()))?;
        self.fix_column_index(idx, value)
    }

    pub fn fix_column_index(&mut self, idx: usize, value: f64) -> Result<(), ModelError> {
        let col = &mut self.columns[idx];
        if value < col.lower - 1e-12 || value > col.upper + 1e-12 {
            return Err(ModelError::ValueOutOfBounds {
                name: col.name.clone(),
                value,
                lower: col.lower,
                upper: col.upper,
            });
        }
        col.lower = value;
        col.upper = value;
        Ok(())
    }

    pub fn objective_value(&self, assignment: &[f64]) -> f64 {
        self.columns
            .iter()
            .zip(assignment)
            .map(|(c, v)| c.objective * v)
            .sum()
    }

    pub fn row_activity(&self, row: &Row, assignment: &[f64]) -> f64 {
        row.terms.iter().map(|&(c, a)| a * assignment[c]).sum()
    }

    /// Independent feasibility check: recomputes every row activity and all
    /// bounds directly from the assignment, bypassing any solver state.
    /// Returns the largest violation found.
    pub fn max_violation(&self, assignment: &[f64]) -> f64 {
        assert_eq!(assignment.len(), self.columns.len());
        let mut worst = 0.0f64;
        for (col, &v) in self.columns.iter().zip(assignment) {
            worst = worst.max(col.lower - v).max(v - col.upper);
        }
        for row in &self.rows {
            let lhs = self.row_activity(row, assignment);
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Largest distance of any binary column from an integer value.
    pub fn max_integrality_violation(&self, assignment: &[f64]) -> f64 {
        self.binary_cols()
            .map(|c| {
                let v = assignment[c];
                (v - v.round()).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Plain-text dump: minimize line, subject-to rows, bounds, binaries.
    /// The grammar is documented in `docs/lp_format.md`.
    pub fn write_lp(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "minimize")?;
        write!(w, " obj:")?;
        for (i, c) in self.columns.iter().enumerate() {
            if c.objective != 0.0 {
                write!(w, " {} {}", fmt_signed(c.objective, i == 0), c.name)?;
            }
        }
        writeln!(w)?;
        writeln!(w, "subject to")?;
        for row in &self.rows {
            write!(w, " {}:", row.name)?;
            for (k, &(col, coef)) in row.terms.iter().enumerate() {
                write!(w, " {} {}", fmt_signed(coef, k == 0), self.columns[col].name)?;
            }
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            writeln!(w, " {} {}", op, row.rhs)?;
        }
        writeln!(w, "bounds")?;
        for c in &self.columns {
            if c.kind == ColKind::Continuous {
                writeln!(w, " {} <= {} <= {}", c.lower, c.name, c.upper)?;
            }
        }
        writeln!(w, "binaries")?;
        for c in &self.columns {
            if c.kind == ColKind::Binary {
                writeln!(w, " {}", c.name)?;
            }
        }
        writeln!(w, "end")
    }
}

fn fmt_signed(v: f64, first: bool) -> String {
    if first {
        format!("{v}")
    } else if v >= 0.0 {
        format!("+ {v}")
    } else {
        format!("- {}", -v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var_model() -> MilpModel {
        let mut m = MilpModel::new();
        let x = m.add_binary("x", -1.0);
        let y = m.add_binary("y", -1.0);
        m.add_row("cap", vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        m
    }

    #[test]
    fn add_then_remove_restores_row_set() {
        let mut m = two_var_model();
        let before = m.num_rows();
        let h = m.add_row("tmp", vec![(0, 1.0)], Sense::Ge, 1.0);
        assert_eq!(m.num_rows(), before + 1);
        m.remove_row(h).unwrap();
        assert_eq!(m.num_rows(), before);
        assert_eq!(m.rows.last().unwrap().name, "cap");
    }

    #[test]
    fn stale_handle_rejected() {
        let mut m = two_var_model();
        let h1 = m.add_row("a", vec![(0, 1.0)], Sense::Le, 1.0);
        let _h2 = m.add_row("b", vec![(1, 1.0)], Sense::Le, 1.0);
        assert_eq!(m.remove_row(h1), Err(ModelError::StaleHandle));
    }

    #[test]
    fn fix_column_pins_bounds() {
        let mut m = two_var_model();
        m.fix_column("x", 1.0).unwrap();
        assert_eq!(m.columns[0].lower, 1.0);
        assert_eq!(m.columns[0].upper, 1.0);
        assert_eq!(
            m.fix_column("z", 0.0),
            Err(ModelError::UnknownColumn("z".into()))
        );
        assert!(matches!(
            m.fix_column("y", 2.0),
            Err(ModelError::ValueOutOfBounds { .. })
        ));
    }

    #[test]
    fn evaluator_sees_violations() {
        let m = two_var_model();
        assert_eq!(m.max_violation(&[0.0, 0.0]), 0.0);
        assert_eq!(m.max_violation(&[1.0, 1.0]), 1.0); // cap row
        assert_eq!(m.max_violation(&[-0.5, 0.0]), 0.5); // bound
    }

    #[test]
    fn lp_dump_has_all_sections() {
        let m = two_var_model();
        let mut buf = Vec::new();
        m.write_lp(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for part in ["minimize", "subject to", "bounds", "binaries", "end"] {
            assert!(text.contains(part), "missing {part} in:\n{text}");
        }
    }
}
