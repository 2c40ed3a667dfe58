//! Sparse LU factorization of simplex bases.
//!
//! Right-looking Gaussian elimination with a Markowitz pivot choice restricted
//! to a few sparsest columns and threshold partial pivoting. The factors are
//! stored as the elimination sequence: for step `k`, pivot row `r_k`, pivot
//! column `c_k` (a basis position), the column multipliers of `L` and the
//! eliminated pivot row of `U`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

const THRESHOLD: f64 = 0.1;
const SEARCH_COLUMNS: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    pivot_rows: Vec<usize>,
    pivot_cols: Vec<usize>,
    l_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    u_rows: Vec<Vec<(usize, f64)>>,
    // scatter forms: L by row, U by basis position, both keyed to pivot rows
    l_by_row: Vec<Vec<(usize, f64)>>,
    u_by_col: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Singular {
    pub step: usize,
    pub magnitude: f64,
}

impl LuFactors {
    /// Factor the square matrix whose column `c` holds `(row, value)` entries.
    pub(crate) fn factorize(columns: &[Vec<(usize, f64)>], pivot_tol: f64) -> Result<Self, Singular> {
        let m = columns.len();
        let mut cols: Vec<Vec<(usize, f64)>> = columns.to_vec();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (c, col) in cols.iter().enumerate() {
            for &(i, _) in col {
                rows[i].push(c);
            }
        }
        let mut col_active = vec![true; m];
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
            cols.iter().enumerate().map(|(c, col)| Reverse((col.len(), c))).collect();

        let mut lu = LuFactors {
            pivot_rows: Vec::with_capacity(m),
            pivot_cols: Vec::with_capacity(m),
            l_cols: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
            u_rows: Vec::with_capacity(m),
            l_by_row: vec![Vec::new(); m],
            u_by_col: vec![Vec::new(); m],
        };
        let mut marker = vec![usize::MAX; m];

        for step in 0..m {
            // Gather up to SEARCH_COLUMNS live candidates with the fewest entries.
            let mut candidates = Vec::with_capacity(SEARCH_COLUMNS);
            while candidates.len() < SEARCH_COLUMNS {
                match heap.pop() {
                    Some(Reverse((len, c))) => {
                        if col_active[c] && cols[c].len() == len && !candidates.contains(&c) {
                            candidates.push(c);
                            if len <= 1 {
                                break;
                            }
                        }
                    }
                    None => break,
                }
            }
            if candidates.is_empty() {
                return Err(Singular { step, magnitude: 0.0 });
            }
            // (markowitz cost, |v|, row, col)
            let mut best: Option<(usize, f64, usize, usize)> = None;
            for &c in &candidates {
                let col = &cols[c];
                let col_max = col.iter().fold(0.0f64, |acc, e| acc.max(e.1.abs()));
                if col_max <= pivot_tol {
                    continue;
                }
                for &(i, v) in col {
                    if v.abs() < THRESHOLD * col_max {
                        continue;
                    }
                    let cost = (rows[i].len() - 1) * (col.len() - 1);
                    let better = match best {
                        None => true,
                        Some((bc, bv, bi, bcol)) => {
                            cost < bc
                                || (cost == bc
                                    && (v.abs() > bv || (v.abs() == bv && (i, c) < (bi, bcol))))
                        }
                    };
                    if better {
                        best = Some((cost, v.abs(), i, c));
                    }
                }
            }
            for &c in &candidates {
                heap.push(Reverse((cols[c].len(), c)));
            }
            let (r, c) = match best {
                Some((_, _, r, c)) => (r, c),
                None => {
                    let magnitude = candidates
                        .iter()
                        .flat_map(|&c| cols[c].iter())
                        .fold(0.0f64, |acc, e| acc.max(e.1.abs()));
                    return Err(Singular { step, magnitude });
                }
            };

            // Pivot column -> L multipliers.
            let pivot_col = std::mem::take(&mut cols[c]);
            col_active[c] = false;
            let pivot = pivot_col
                .iter()
                .find(|e| e.0 == r)
                .map(|e| e.1)
                .expect("pivot entry present");
            let mut l = Vec::with_capacity(pivot_col.len().saturating_sub(1));
            for &(i, v) in &pivot_col {
                if let Some(pos) = rows[i].iter().position(|&j| j == c) {
                    rows[i].swap_remove(pos);
                }
                if i != r {
                    l.push((i, v / pivot));
                }
            }

            // Pivot row -> U, and the Schur complement update.
            let row_cols = std::mem::take(&mut rows[r]);
            let mut u = Vec::with_capacity(row_cols.len());
            for &j in &row_cols {
                let col = &mut cols[j];
                let pos = col.iter().position(|e| e.0 == r).expect("row pattern in sync");
                let a_rj = col.swap_remove(pos).1;
                u.push((j, a_rj));
                if l.is_empty() || a_rj == 0.0 {
                    heap.push(Reverse((col.len(), j)));
                    continue;
                }
                for (p, &(i, _)) in col.iter().enumerate() {
                    marker[i] = p;
                }
                for &(i, li) in &l {
                    let delta = li * a_rj;
                    if marker[i] != usize::MAX {
                        col[marker[i]].1 -= delta;
                    } else {
                        col.push((i, -delta));
                        rows[i].push(j);
                    }
                }
                for &(i, _) in col.iter() {
                    marker[i] = usize::MAX;
                }
                heap.push(Reverse((col.len(), j)));
            }

            lu.pivot_rows.push(r);
            lu.pivot_cols.push(c);
            lu.l_cols.push(l);
            lu.u_diag.push(pivot);
            lu.u_rows.push(u);
        }
        for k in 0..m {
            let r = lu.pivot_rows[k];
            for &(i, li) in &lu.l_cols[k] {
                lu.l_by_row[i].push((r, li));
            }
            for &(j, u) in &lu.u_rows[k] {
                lu.u_by_col[j].push((r, u));
            }
        }
        Ok(lu)
    }

    /// Solve `B x = b`; `b` is indexed by row and consumed, `x` by basis position.
    pub(crate) fn solve(&self, b: &mut [f64], x: &mut [f64]) {
        for (k, l) in self.l_cols.iter().enumerate() {
            let v = b[self.pivot_rows[k]];
            if v != 0.0 {
                for &(i, li) in l {
                    b[i] -= li * v;
                }
            }
        }
        for k in (0..self.pivot_rows.len()).rev() {
            let c = self.pivot_cols[k];
            let v = b[self.pivot_rows[k]] / self.u_diag[k];
            x[c] = v;
            if v != 0.0 {
                for &(i, u) in &self.u_by_col[c] {
                    b[i] -= u * v;
                }
            }
        }
    }

    /// Solve `Bᵀ y = c`; `c` is indexed by basis position and consumed, `y` by row.
    pub(crate) fn solve_transpose(&self, c: &mut [f64], y: &mut [f64]) {
        for k in 0..self.pivot_rows.len() {
            let w = c[self.pivot_cols[k]] / self.u_diag[k];
            y[self.pivot_rows[k]] = w;
            if w != 0.0 {
                for &(j, u) in &self.u_rows[k] {
                    c[j] -= u * w;
                }
            }
        }
        for k in (0..self.pivot_rows.len()).rev() {
            let r = self.pivot_rows[k];
            let w = y[r];
            if w != 0.0 {
                for &(i, li) in &self.l_by_row[r] {
                    y[i] -= li * w;
                }
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn nnz(&self) -> usize {
        self.l_cols.iter().map(Vec::len).sum::<usize>()
            + self.u_rows.iter().map(Vec::len).sum::<usize>()
            + self.u_diag.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_mul(cols: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; cols.len()];
        for (c, col) in cols.iter().enumerate() {
            for &(i, v) in col {
                out[i] += v * x[c];
            }
        }
        out
    }

    fn dense_mul_t(cols: &[Vec<(usize, f64)>], y: &[f64]) -> Vec<f64> {
        cols.iter()
            .map(|col| col.iter().map(|&(i, v)| v * y[i]).sum())
            .collect()
    }

    fn random_sparse(rng: &mut ChaCha8Rng, m: usize, density: f64) -> Vec<Vec<(usize, f64)>> {
        // diagonally shifted so it is nonsingular with overwhelming probability
        (0..m)
            .map(|c| {
                let mut col = vec![(c, 4.0 + rng.gen::<f64>())];
                for i in 0..m {
                    if i != c && rng.gen::<f64>() < density {
                        col.push((i, rng.gen_range(-1.0..1.0)));
                    }
                }
                col
            })
            .collect()
    }

    #[test]
    fn solves_random_sparse_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let m = 1 + trial % 25;
            let mut cols = random_sparse(&mut rng, m, 0.2);
            // shuffle the columns so the factorization has to permute
            for c in (1..m).rev() {
                let k = rng.gen_range(0..=c);
                cols.swap(c, k);
            }
            let lu = LuFactors::factorize(&cols, 1e-11).unwrap();
            let truth: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let mut b = dense_mul(&cols, &truth);
            let mut x = vec![0.0; m];
            lu.solve(&mut b, &mut x);
            for (a, e) in x.iter().zip(&truth) {
                assert!((a - e).abs() < 1e-10, "{a} vs {e}");
            }
            let mut c = dense_mul_t(&cols, &truth);
            let mut y = vec![0.0; m];
            lu.solve_transpose(&mut c, &mut y);
            for (a, e) in y.iter().zip(&truth) {
                assert!((a - e).abs() < 1e-10, "{a} vs {e}");
            }
        }
    }

    #[test]
    fn detects_singular_matrix() {
        let cols = vec![vec![(0, 1.0), (1, 2.0)], vec![(0, 2.0), (1, 4.0)]];
        assert!(LuFactors::factorize(&cols, 1e-11).is_err());
        let empty = vec![vec![(0, 1.0)], vec![]];
        assert!(LuFactors::factorize(&empty, 1e-11).is_err());
    }

    #[test]
    fn permutation_matrix_needs_no_fill() {
        let cols = vec![vec![(2, 1.0)], vec![(0, -1.0)], vec![(1, 2.0)]];
        let lu = LuFactors::factorize(&cols, 1e-11).unwrap();
        assert_eq!(lu.nnz(), 3);
        let mut b = vec![1.0, 2.0, 3.0];
        let mut x = vec![0.0; 3];
        lu.solve(&mut b, &mut x);
        assert_eq!(x, vec![3.0, -1.0, 1.0]);
    }
}
