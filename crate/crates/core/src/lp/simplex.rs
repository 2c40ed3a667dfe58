//! Two-phase bounded primal revised simplex.
//!
//! Every row gets a logical column (`[0, ∞)` for `≤`, `[0, 0]` for `=`). Rows
//! the logical cannot make feasible at the starting point get an artificial
//! column; phase one drives those to zero and phase two fixes them at zero.
//! Pricing is Devex with a Harris two-pass ratio test, falling back to Bland's
//! rule after a run of degenerate pivots. Reduced costs are updated from the
//! pivot row and recomputed at every refactorization. The basis inverse is kept
//! as a sparse LU factorization followed by product-form eta updates.

use serde::{Deserialize, Serialize};

use super::lu::LuFactors;
use super::sparse::{Relation, SparseLp};
use crate::error::{Error, Result};

const NONBASIC: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_switch: usize,
    /// `None` means a limit proportional to the problem size.
    pub max_iterations: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            pivot_tol: 1e-11,
            refactor_interval: 64,
            degenerate_switch: 50,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: LpStatus,
    /// Objective at `x`; meaningful only when optimal.
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Rows still carrying infeasibility at the end of phase one.
    pub infeasible_rows: Vec<usize>,
}

struct Eta {
    pos: usize,
    pivot: f64,
    others: Vec<(usize, f64)>,
}

enum Step {
    Flip,
    Pivot { pos: usize, to_upper: bool },
}

struct Simplex {
    opts: SolverOptions,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    /// Reduced costs; zero on basic columns.
    d: Vec<f64>,
    /// Devex reference weights.
    weight: Vec<f64>,
    row_acc: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<usize>,
    x: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    lu: LuFactors,
    etas: Vec<Eta>,
    rhs: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    degenerate_run: usize,
    bland: bool,
    n_struct: usize,
    artificial_rows: Vec<usize>,
}

/// Solve `lp` with the reference simplex.
pub fn solve(lp: &SparseLp, opts: &SolverOptions) -> Result<SolveResult> {
    let mut s = Simplex::new(lp, *opts)?;
    let art_start = s.n_struct + s.m;
    let n_art = s.artificial_rows.len();

    if n_art > 0 {
        s.cost = vec![0.0; s.cols.len()];
        for k in 0..n_art {
            s.cost[art_start + k] = 1.0;
        }
        s.run()?;
        let mut infeasible_rows: Vec<usize> = (0..n_art)
            .filter(|&k| s.x[art_start + k] > s.opts.feasibility_tol)
            .map(|k| s.artificial_rows[k])
            .collect();
        if !infeasible_rows.is_empty() {
            infeasible_rows.sort_unstable();
            return Ok(SolveResult {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                x: s.x[..s.n_struct].to_vec(),
                iterations: s.iterations,
                infeasible_rows,
            });
        }
        for k in 0..n_art {
            s.upper[art_start + k] = 0.0;
            if s.pos[art_start + k] == NONBASIC {
                s.x[art_start + k] = 0.0;
            }
        }
    }

    s.cost = vec![0.0; s.cols.len()];
    s.cost[..s.n_struct].copy_from_slice(lp.objective());
    let unbounded = !s.run()?;
    let x = s.x[..s.n_struct].to_vec();
    if unbounded {
        return Ok(SolveResult {
            status: LpStatus::Unbounded,
            objective: f64::NEG_INFINITY,
            x,
            iterations: s.iterations,
            infeasible_rows: Vec::new(),
        });
    }

    let scale = 1.0
        + lp.rows()
            .iter()
            .map(|r| r.rhs.abs())
            .chain(lp.lower().iter().chain(lp.upper()).filter(|v| v.is_finite()).map(|v| v.abs()))
            .fold(0.0f64, f64::max);
    let violation = lp.max_violation(&x);
    if !(violation <= 10.0 * opts.feasibility_tol * scale) {
        return Err(Error::NumericalBreakdown(format!(
            "certified residual {violation:.3e} exceeds tolerance"
        )));
    }
    Ok(SolveResult {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&x),
        x,
        iterations: s.iterations,
        infeasible_rows: Vec::new(),
    })
}

impl Simplex {
    fn new(lp: &SparseLp, opts: SolverOptions) -> Result<Self> {
        let n = lp.n_cols();
        let m = lp.n_rows();
        let mut cols = lp.columns();
        let mut lower = lp.lower().to_vec();
        let mut upper = lp.upper().to_vec();
        let mut x: Vec<f64> = (0..n)
            .map(|j| {
                if lower[j].is_finite() {
                    lower[j]
                } else if upper[j].is_finite() {
                    upper[j]
                } else {
                    0.0
                }
            })
            .collect();

        for (i, row) in lp.rows().iter().enumerate() {
            cols.push(vec![(i, 1.0)]);
            lower.push(0.0);
            upper.push(match row.relation {
                Relation::Le => f64::INFINITY,
                Relation::Eq => 0.0,
            });
            x.push(0.0);
        }

        let mut basis = Vec::with_capacity(m);
        let mut artificial_rows = Vec::new();
        for (i, row) in lp.rows().iter().enumerate() {
            let r = row.rhs - lp.row_activity(i, &x[..n]);
            let slack_ok = match row.relation {
                Relation::Le => r >= 0.0,
                Relation::Eq => r == 0.0,
            };
            if slack_ok {
                x[n + i] = r.max(0.0);
                basis.push(n + i);
            } else {
                // logical stays nonbasic at zero
                let sign = if r > 0.0 { 1.0 } else { -1.0 };
                cols.push(vec![(i, sign)]);
                lower.push(0.0);
                upper.push(f64::INFINITY);
                x.push(r.abs());
                artificial_rows.push(i);
            }
        }
        let art_start = n + m;
        let mut k = 0;
        // splice artificials into the basis in row order
        let mut full_basis = Vec::with_capacity(m);
        let mut bi = 0;
        for i in 0..m {
            if k < artificial_rows.len() && artificial_rows[k] == i {
                full_basis.push(art_start + k);
                k += 1;
            } else {
                full_basis.push(basis[bi]);
                bi += 1;
            }
        }
        let mut pos = vec![NONBASIC; cols.len()];
        for (p, &j) in full_basis.iter().enumerate() {
            pos[j] = p;
        }
        let rhs: Vec<f64> = lp.rows().iter().map(|r| r.rhs).collect();
        let max_iterations = opts
            .max_iterations
            .unwrap_or(50 * (cols.len() + m) + 10_000);

        let basis_cols: Vec<Vec<(usize, f64)>> = full_basis.iter().map(|&j| cols[j].clone()).collect();
        let lu = LuFactors::factorize(&basis_cols, opts.pivot_tol)
            .map_err(|e| Error::NumericalBreakdown(format!("initial basis singular at step {}", e.step)))?;
        let mut rows = vec![Vec::new(); m];
        for (j, col) in cols.iter().enumerate() {
            for &(i, a) in col {
                rows[i].push((j, a));
            }
        }

        Ok(Simplex {
            opts,
            m,
            d: vec![0.0; cols.len()],
            weight: vec![1.0; cols.len()],
            row_acc: vec![0.0; cols.len()],
            seen: vec![false; cols.len()],
            touched: Vec::new(),
            cols,
            rows,
            lower,
            upper,
            cost: Vec::new(),
            x,
            basis: full_basis,
            pos,
            lu,
            etas: Vec::new(),
            rhs,
            iterations: 0,
            max_iterations,
            degenerate_run: 0,
            bland: false,
            n_struct: n,
            artificial_rows,
        })
    }

    fn refactor(&mut self) -> Result<()> {
        let basis_cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&j| self.cols[j].clone()).collect();
        self.lu = LuFactors::factorize(&basis_cols, self.opts.pivot_tol).map_err(|e| {
            Error::NumericalBreakdown(format!(
                "basis became singular (step {}, magnitude {:.3e})",
                e.step, e.magnitude
            ))
        })?;
        self.etas.clear();
        self.recompute_basics();
        self.recompute_reduced_costs();
        Ok(())
    }

    fn recompute_reduced_costs(&mut self) {
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        let y = self.btran(cb);
        for j in 0..self.cols.len() {
            self.d[j] = if self.pos[j] == NONBASIC {
                self.cost[j] - self.cols[j].iter().map(|&(i, a)| a * y[i]).sum::<f64>()
            } else {
                0.0
            };
        }
    }

    /// Start pricing afresh for the current costs.
    fn reset_pricing(&mut self) {
        self.recompute_reduced_costs();
        self.weight.iter_mut().for_each(|w| *w = 1.0);
        self.bland = false;
        self.degenerate_run = 0;
    }

    /// Row `r` of `B⁻¹A` restricted to nonbasic columns, left in
    /// `row_acc` with the touched columns listed in `touched`.
    fn pivot_row(&mut self, r: usize) {
        let mut e = vec![0.0; self.m];
        e[r] = 1.0;
        let rho = self.btran(e);
        self.touched.clear();
        for (i, &ri) in rho.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            for &(j, a) in &self.rows[i] {
                if self.pos[j] != NONBASIC {
                    continue;
                }
                if !self.seen[j] {
                    self.seen[j] = true;
                    self.touched.push(j);
                }
                self.row_acc[j] += ri * a;
            }
        }
    }

    fn recompute_basics(&mut self) {
        let mut r = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.pos[j] != NONBASIC {
                continue;
            }
            let v = self.x[j];
            if v != 0.0 {
                for &(i, a) in col {
                    r[i] -= a * v;
                }
            }
        }
        let xb = self.ftran_dense(r);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    fn ftran_dense(&self, mut b: Vec<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.lu.solve(&mut b, &mut out);
        for eta in &self.etas {
            let xp = out[eta.pos] / eta.pivot;
            if xp != 0.0 {
                for &(i, a) in &eta.others {
                    out[i] -= a * xp;
                }
            }
            out[eta.pos] = xp;
        }
        out
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.m];
        for &(i, a) in &self.cols[j] {
            b[i] = a;
        }
        self.ftran_dense(b)
    }

    fn btran(&self, mut c: Vec<f64>) -> Vec<f64> {
        for eta in self.etas.iter().rev() {
            let mut v = c[eta.pos];
            for &(i, a) in &eta.others {
                v -= a * c[i];
            }
            c[eta.pos] = v / eta.pivot;
        }
        let mut y = vec![0.0; self.m];
        self.lu.solve_transpose(&mut c, &mut y);
        y
    }

    /// Entering column and direction (+1 increase, -1 decrease).
    fn price(&self) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.cols.len() {
            if self.pos[j] != NONBASIC || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.d[j];
            let dir = if d < -tol && self.x[j] < self.upper[j] {
                1.0
            } else if d > tol && self.x[j] > self.lower[j] {
                -1.0
            } else {
                continue;
            };
            if self.bland {
                return Some((j, dir));
            }
            let score = d * d / self.weight[j];
            if best.is_none_or(|b| score > b.2) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Returns `None` when the direction is unbounded.
    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64]) -> Option<(Step, f64)> {
        let ftol = self.opts.feasibility_tol;
        let range = self.upper[q] - self.lower[q];
        // (position, exact ratio, |alpha|, to_upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        let mut relaxed_min = f64::INFINITY;
        for (p, &a) in alpha.iter().enumerate() {
            if a.abs() <= self.opts.pivot_tol {
                continue;
            }
            let j = self.basis[p];
            let rate = -dir * a;
            let (room, to_upper) = if rate < 0.0 {
                if self.lower[j] == f64::NEG_INFINITY {
                    continue;
                }
                (self.x[j] - self.lower[j], false)
            } else {
                if self.upper[j] == f64::INFINITY {
                    continue;
                }
                (self.upper[j] - self.x[j], true)
            };
            let relaxed = (room + ftol) / rate.abs();
            relaxed_min = relaxed_min.min(relaxed);
            cands.push((p, room.max(0.0) / rate.abs(), a.abs(), to_upper));
        }

        if self.bland {
            let exact_min = cands.iter().fold(f64::INFINITY, |acc, c| acc.min(c.1));
            if range <= exact_min {
                return range.is_finite().then_some((Step::Flip, range));
            }
            let tie = exact_min + 1e-12 * (1.0 + exact_min);
            let chosen = cands
                .iter()
                .filter(|c| c.1 <= tie)
                .min_by_key(|c| self.basis[c.0])?;
            return Some((Step::Pivot { pos: chosen.0, to_upper: chosen.3 }, chosen.1));
        }

        if range <= relaxed_min {
            return range.is_finite().then_some((Step::Flip, range));
        }
        let chosen = cands
            .iter()
            .filter(|c| c.1 <= relaxed_min)
            .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))?;
        Some((Step::Pivot { pos: chosen.0, to_upper: chosen.3 }, chosen.1))
    }

    /// Iterate to optimality for the current costs. Returns false on an
    /// unbounded ray.
    fn run(&mut self) -> Result<bool> {
        self.reset_pricing();
        let mut verified = false;
        loop {
            if self.etas.len() >= self.opts.refactor_interval {
                self.refactor()?;
            }
            let Some((q, dir)) = self.price() else {
                if verified {
                    return Ok(true);
                }
                // confirm on a fresh factorization before declaring optimality
                self.refactor()?;
                verified = true;
                continue;
            };
            if self.iterations >= self.max_iterations {
                return Err(Error::IterationLimit(self.iterations));
            }
            self.iterations += 1;
            verified = false;

            let alpha = self.ftran(q);
            let Some((step, theta)) = self.ratio_test(q, dir, &alpha) else {
                if self.etas.is_empty() {
                    return Ok(false);
                }
                self.refactor()?;
                let alpha = self.ftran(q);
                if self.ratio_test(q, dir, &alpha).is_none() {
                    return Ok(false);
                }
                continue;
            };

            if theta > 0.0 {
                self.x[q] += dir * theta;
                for (p, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        self.x[self.basis[p]] -= dir * theta * a;
                    }
                }
                self.degenerate_run = 0;
                self.bland = false;
            } else {
                self.degenerate_run += 1;
                if self.degenerate_run >= self.opts.degenerate_switch {
                    self.bland = true;
                }
            }

            match step {
                Step::Flip => {
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Step::Pivot { pos, to_upper } => {
                    self.update_pricing(q, pos, alpha[pos]);
                    let leaving = self.basis[pos];
                    self.x[leaving] = if to_upper { self.upper[leaving] } else { self.lower[leaving] };
                    self.pos[leaving] = NONBASIC;
                    self.basis[pos] = q;
                    self.pos[q] = pos;
                    let others = alpha
                        .iter()
                        .enumerate()
                        .filter(|&(p, &a)| p != pos && a != 0.0)
                        .map(|(p, &a)| (p, a))
                        .collect();
                    self.etas.push(Eta {
                        pos,
                        pivot: alpha[pos],
                        others,
                    });
                }
            }
        }
    }
}

impl Simplex {
    /// Reduced-cost and Devex weight updates for `q` entering at position `r`.
    fn update_pricing(&mut self, q: usize, r: usize, alpha_q: f64) {
        self.pivot_row(r);
        let leaving = self.basis[r];
        let theta_d = self.d[q] / alpha_q;
        let wq = self.weight[q];
        for k in 0..self.touched.len() {
            let j = self.touched[k];
            let a = self.row_acc[j];
            self.row_acc[j] = 0.0;
            self.seen[j] = false;
            if j == q {
                continue;
            }
            self.d[j] -= theta_d * a;
            let ratio = a / alpha_q;
            self.weight[j] = self.weight[j].max(ratio * ratio * wq);
        }
        self.d[q] = 0.0;
        self.d[leaving] = -theta_d;
        self.weight[leaving] = (wq / (alpha_q * alpha_q)).max(1.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp_from(c: &[f64], rows: &[(&[f64], Relation, f64)], bounds: &[(f64, f64)]) -> SparseLp {
        let mut lp = SparseLp::new(c.len());
        for (j, &v) in c.iter().enumerate() {
            lp.set_cost(j, v);
        }
        for (coeffs, rel, rhs) in rows {
            let entries = coeffs.iter().enumerate().map(|(j, &v)| (j, v)).collect();
            lp.add_row(entries, *rel, *rhs).unwrap();
        }
        for (j, &(l, u)) in bounds.iter().enumerate() {
            lp.set_bounds(j, l, u).unwrap();
        }
        lp
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let lp = lp_from(
            &[-3.0, -5.0],
            &[
                (&[1.0, 0.0], Relation::Le, 4.0),
                (&[0.0, 2.0], Relation::Le, 12.0),
                (&[3.0, 2.0], Relation::Le, 18.0),
            ],
            &[(0.0, f64::INFINITY), (0.0, f64::INFINITY)],
        );
        let r = solve(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 36.0).abs() < 1e-9);
        assert!((r.x[0] - 2.0).abs() < 1e-9 && (r.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_rows_and_free_columns() {
        // min x + y, x - y = 1, x + y >= 3 (as -x - y <= -3), both free
        let lp = lp_from(
            &[1.0, 1.0],
            &[(&[1.0, -1.0], Relation::Eq, 1.0), (&[-1.0, -1.0], Relation::Le, -3.0)],
            &[(f64::NEG_INFINITY, f64::INFINITY); 2],
        );
        let r = solve(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-9);
        assert!((r.x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasibility() {
        let lp = lp_from(
            &[0.0],
            &[(&[1.0], Relation::Le, 1.0), (&[-1.0], Relation::Le, -2.0)],
            &[(f64::NEG_INFINITY, f64::INFINITY)],
        );
        let r = solve(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
        assert!(!r.infeasible_rows.is_empty());
    }

    #[test]
    fn detects_unboundedness() {
        let lp = lp_from(
            &[-1.0, 0.0],
            &[(&[1.0, -1.0], Relation::Le, 1.0)],
            &[(0.0, f64::INFINITY), (0.0, f64::INFINITY)],
        );
        let r = solve(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
    }

    #[test]
    fn bound_flips_without_rows() {
        let lp = lp_from(&[-1.0, 2.0], &[], &[(0.0, 3.0), (-1.0, 5.0)]);
        let r = solve(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(r.x, vec![3.0, -1.0]);
        assert_eq!(r.objective, -5.0);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example, which cycles under naive Dantzig pricing.
        let lp = lp_from(
            &[-0.75, 150.0, -0.02, 6.0],
            &[
                (&[0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0),
                (&[0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0),
                (&[0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0),
            ],
            &[(0.0, f64::INFINITY); 4],
        );
        let r = solve(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 0.05).abs() < 1e-9);
    }
}
