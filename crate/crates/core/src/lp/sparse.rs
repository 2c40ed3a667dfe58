use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    /// Sorted by column, duplicates merged, no explicit zeros.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min cᵀx  s.t.  rows (≤ or =),  lower <= x <= upper`. Columns are free
/// unless bounded explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLp {
    n_cols: usize,
    objective: Vec<f64>,
    rows: Vec<LpRow>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SparseLp {
    pub fn new(n_cols: usize) -> Self {
        SparseLp {
            n_cols,
            objective: vec![0.0; n_cols],
            rows: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n_cols],
            upper: vec![f64::INFINITY; n_cols],
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[LpRow] {
        &self.rows
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    /// Append a column and return its index.
    pub fn add_col(&mut self) -> usize {
        self.n_cols += 1;
        self.objective.push(0.0);
        self.lower.push(f64::NEG_INFINITY);
        self.upper.push(f64::INFINITY);
        self.n_cols - 1
    }

    /// Append a row; duplicate columns are summed and zeros dropped.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Result<usize> {
        if !rhs.is_finite() {
            return Err(Error::Assembly(format!("non-finite rhs in row {}", self.rows.len())));
        }
        let mut coeffs = coeffs;
        for &(j, v) in &coeffs {
            if j >= self.n_cols {
                return Err(Error::Assembly(format!(
                    "column {j} out of range ({} columns)",
                    self.n_cols
                )));
            }
            if !v.is_finite() {
                return Err(Error::Assembly(format!("non-finite coefficient in column {j}")));
            }
        }
        coeffs.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (j, v) in coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        self.rows.push(LpRow {
            coeffs: merged,
            relation,
            rhs,
        });
        Ok(self.rows.len() - 1)
    }

    pub fn set_cost(&mut self, col: usize, value: f64) {
        self.objective[col] = value;
    }

    pub fn add_cost(&mut self, col: usize, value: f64) {
        self.objective[col] += value;
    }

    pub fn clear_objective(&mut self) {
        self.objective.iter_mut().for_each(|c| *c = 0.0);
    }

    pub fn set_bounds(&mut self, col: usize, lower: f64, upper: f64) -> Result<()> {
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(Error::Assembly(format!("invalid bounds [{lower}, {upper}] on column {col}")));
        }
        self.lower[col] = lower;
        self.upper[col] = upper;
        Ok(())
    }

    pub fn fix(&mut self, col: usize, value: f64) -> Result<()> {
        self.set_bounds(col, value, value)
    }

    /// Keep only the rows for which `keep(row_index)` holds.
    pub fn retain_rows(&mut self, mut keep: impl FnMut(usize) -> bool) {
        let mut idx = 0;
        self.rows.retain(|_| {
            let k = keep(idx);
            idx += 1;
            k
        });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.rows[row].coeffs.iter().map(|&(j, v)| v * x[j]).sum()
    }

    /// Largest absolute violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (i, row) in self.rows.iter().enumerate() {
            let act = self.row_activity(i, x);
            let v = match row.relation {
                Relation::Le => act - row.rhs,
                Relation::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for j in 0..self.n_cols {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    /// Columns as `(row, value)` lists.
    pub(crate) fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.n_cols];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                cols[j].push((i, v));
            }
        }
        cols
    }

    /// All `(row, col, value)` triplets in row order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.coeffs.iter().map(move |&(j, v)| (i, j, v)))
    }
}

/// JSON dump of an LP; infinite bounds are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpDump {
    pub n_cols: usize,
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

impl From<&SparseLp> for LpDump {
    fn from(lp: &SparseLp) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        LpDump {
            n_cols: lp.n_cols,
            objective: lp
                .objective
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(j, &c)| (j, c))
                .collect(),
            rows: lp.rows.clone(),
            lower: lp.lower.iter().map(|&v| finite(v)).collect(),
            upper: lp.upper.iter().map(|&v| finite(v)).collect(),
        }
    }
}

impl TryFrom<LpDump> for SparseLp {
    type Error = Error;

    fn try_from(dump: LpDump) -> Result<Self> {
        let mut lp = SparseLp::new(dump.n_cols);
        for (j, c) in dump.objective {
            if j >= lp.n_cols {
                return Err(Error::Assembly(format!("objective column {j} out of range")));
            }
            lp.set_cost(j, c);
        }
        for row in dump.rows {
            lp.add_row(row.coeffs, row.relation, row.rhs)?;
        }
        if dump.lower.len() != lp.n_cols || dump.upper.len() != lp.n_cols {
            return Err(Error::Assembly("bound vectors do not match column count".into()));
        }
        for j in 0..lp.n_cols {
            lp.set_bounds(
                j,
                dump.lower[j].unwrap_or(f64::NEG_INFINITY),
                dump.upper[j].unwrap_or(f64::INFINITY),
            )?;
        }
        Ok(lp)
    }
}
