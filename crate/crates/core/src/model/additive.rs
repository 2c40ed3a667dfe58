use serde::{Deserialize, Serialize};

use super::fragment::FragmentSpace;
use crate::error::{Error, Result};

/// Coefficient table of a vector-valued function that is additive with memory
/// `depth`: for stage `t`, the value on a trajectory is the sum over `s <= t`
/// of the coefficient `c^t_{s, ξ_{s-depth+1:s}}`.
///
/// The same layout stores right-hand sides `β` (width `m_t`), decision rule
/// coefficients `u` (width `n_t`) and, with vertex counts in place of
/// cardinalities, poly-affine coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveTable {
    depth: usize,
    radices: Vec<usize>,
    widths: Vec<usize>,
    blocks: Vec<Vec<f64>>,
}

/// Right-hand side coefficients `β^t_{sξ}`.
pub type AdditiveRhs = AdditiveTable;

/// Decision rule coefficients `u^t_{τξ}`.
pub type RuleCoefficients = AdditiveTable;

#[inline]
pub(crate) fn pair_index(t: usize, s: usize) -> usize {
    t * (t + 1) / 2 + s
}

impl AdditiveTable {
    /// All-zero table. `radices[t]` is the per-stage cardinality and
    /// `widths[t]` the vector width of stage-`t` values.
    pub fn zeros(radices: &[usize], widths: &[usize], depth: usize) -> Result<Self> {
        if radices.len() != widths.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} radices but {} widths",
                radices.len(),
                widths.len()
            )));
        }
        if depth == 0 {
            return Err(Error::InvalidProblem("memory depth must be >= 1".into()));
        }
        if radices.contains(&0) {
            return Err(Error::InvalidProblem("stage cardinalities must be >= 1".into()));
        }
        let n = radices.len();
        let mut blocks = Vec::with_capacity(n * (n + 1) / 2);
        for t in 0..n {
            for s in 0..=t {
                let size = FragmentSpace::anchored(radices, s, depth).size();
                blocks.push(vec![0.0; size * widths[t]]);
            }
        }
        Ok(AdditiveTable {
            depth,
            radices: radices.to_vec(),
            widths: widths.to_vec(),
            blocks,
        })
    }

    pub fn stages(&self) -> usize {
        self.radices.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn width(&self, t: usize) -> usize {
        self.widths[t]
    }

    /// Fragment space indexing the coefficients anchored at stage `s`.
    pub fn space(&self, s: usize) -> FragmentSpace {
        FragmentSpace::anchored(&self.radices, s, self.depth)
    }

    /// All coefficients `c^t_{s,·}` laid out fragment-major.
    pub fn block(&self, t: usize, s: usize) -> &[f64] {
        debug_assert!(s <= t);
        &self.blocks[pair_index(t, s)]
    }

    pub fn block_mut(&mut self, t: usize, s: usize) -> &mut [f64] {
        debug_assert!(s <= t);
        &mut self.blocks[pair_index(t, s)]
    }

    pub fn coeff(&self, t: usize, s: usize, flat: usize) -> &[f64] {
        let w = self.widths[t];
        &self.block(t, s)[flat * w..(flat + 1) * w]
    }

    pub fn coeff_mut(&mut self, t: usize, s: usize, flat: usize) -> &mut [f64] {
        let w = self.widths[t];
        &mut self.block_mut(t, s)[flat * w..(flat + 1) * w]
    }

    /// Set a coefficient addressed by a full-depth fragment tuple.
    pub fn set(&mut self, t: usize, s: usize, fragment: &[usize], values: &[f64]) -> Result<()> {
        self.check_pair(t, s)?;
        if values.len() != self.widths[t] {
            return Err(Error::DimensionMismatch(format!(
                "coefficient for stage {t} needs {} values, got {}",
                self.widths[t],
                values.len()
            )));
        }
        let flat = self.space(s).index(fragment)?;
        self.coeff_mut(t, s, flat).copy_from_slice(values);
        Ok(())
    }

    fn check_pair(&self, t: usize, s: usize) -> Result<()> {
        if t >= self.stages() || s > t {
            return Err(Error::IndexOutOfRange(format!(
                "coefficient pair (t={t}, s={s}) outside 0 <= s <= t < {}",
                self.stages()
            )));
        }
        Ok(())
    }

    fn check_trajectory(&self, t: usize, trajectory: &[usize]) -> Result<()> {
        if t >= self.stages() {
            return Err(Error::IndexOutOfRange(format!(
                "stage {t} beyond horizon {}",
                self.stages()
            )));
        }
        if trajectory.len() <= t || trajectory.len() > self.stages() {
            return Err(Error::IndexOutOfRange(format!(
                "trajectory of length {} cannot be evaluated at stage {t}",
                trajectory.len()
            )));
        }
        for (s, (&v, &r)) in trajectory.iter().zip(&self.radices).enumerate() {
            if v >= r {
                return Err(Error::IndexOutOfRange(format!(
                    "trajectory value {v} at stage {s} exceeds cardinality {r}"
                )));
            }
        }
        Ok(())
    }

    /// Value at stage `t` along a trajectory, summed in increasing `s`.
    pub fn evaluate(&self, t: usize, trajectory: &[usize]) -> Result<Vec<f64>> {
        self.check_trajectory(t, trajectory)?;
        Ok(self.evaluate_unchecked(t, trajectory))
    }

    pub(crate) fn evaluate_unchecked(&self, t: usize, trajectory: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.widths[t]];
        for s in 0..=t {
            let flat = self.space(s).index_in(trajectory);
            for (o, c) in out.iter_mut().zip(self.coeff(t, s, flat)) {
                *o += c;
            }
        }
        out
    }

    /// Re-express the table at a larger memory depth: every new coefficient
    /// copies the old coefficient of its trailing-`depth` suffix.
    pub fn widen(&self, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::InvalidWidening {
                from: self.depth,
                to: depth,
            });
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        let mut wide = AdditiveTable::zeros(&self.radices, &self.widths, depth)?;
        for t in 0..self.stages() {
            let w = self.widths[t];
            for s in 0..=t {
                let space = wide.space(s);
                for flat in 0..space.size() {
                    let old = space.suffix_index(flat, self.depth);
                    let src = &self.block(t, s)[old * w..(old + 1) * w];
                    wide.block_mut(t, s)[flat * w..(flat + 1) * w].copy_from_slice(src);
                }
            }
        }
        Ok(wide)
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Iterate over `(t, s, flat, coefficient)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize, &[f64])> + '_ {
        (0..self.stages()).flat_map(move |t| {
            (0..=t).flat_map(move |s| {
                let w = self.widths[t];
                let block = self.block(t, s);
                (0..block.len().checked_div(w).unwrap_or(0))
                    .map(move |flat| (t, s, flat, &block[flat * w..(flat + 1) * w]))
            })
        })
    }
}
