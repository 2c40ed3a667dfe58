//! Mixed-radix indexing of trajectory fragments.
//!
//! A fragment is the slice `(ξ_{e-k}, ..., ξ_{e-1})` of a trajectory, `k` being
//! the depth. Stages are 0-based here; a fragment coordinate whose stage is
//! negative is padding, has radix 1 and always holds the value 0. Flat indices
//! are 0-based with the most recent stage varying fastest.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentSpace {
    end: usize,
    radices: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl FragmentSpace {
    /// Fragments over the `depth` stages immediately before `end` (exclusive).
    ///
    /// `d[s]` is the cardinality of stage `s`; padded coordinates get radix 1.
    pub fn new(d: &[usize], end: usize, depth: usize) -> Self {
        let radices: Vec<usize> = (0..depth)
            .map(|k| {
                let stage = end as isize - depth as isize + k as isize;
                if stage < 0 {
                    1
                } else {
                    d[stage as usize]
                }
            })
            .collect();
        let mut strides = vec![0; depth];
        let mut size = 1usize;
        for k in (0..depth).rev() {
            strides[k] = size;
            size *= radices[k];
        }
        FragmentSpace {
            end,
            radices,
            strides,
            size,
        }
    }

    /// The space `D_{τ-μ+1:τ}` anchored at stage `tau`.
    pub fn anchored(d: &[usize], tau: usize, depth: usize) -> Self {
        Self::new(d, tau + 1, depth)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn depth(&self) -> usize {
        self.radices.len()
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// Stage (possibly negative) of coordinate `k`.
    pub fn stage_of(&self, k: usize) -> isize {
        self.end as isize - self.depth() as isize + k as isize
    }

    /// Encode a full-depth fragment tuple (padding entries must be 0).
    pub fn index(&self, fragment: &[usize]) -> Result<usize> {
        if fragment.len() != self.depth() {
            return Err(Error::IndexOutOfRange(format!(
                "fragment has {} entries, space depth is {}",
                fragment.len(),
                self.depth()
            )));
        }
        let mut flat = 0;
        for (k, (&v, &r)) in fragment.iter().zip(&self.radices).enumerate() {
            if v >= r {
                return Err(Error::IndexOutOfRange(format!(
                    "entry {v} for stage {} exceeds radix {r}",
                    self.stage_of(k)
                )));
            }
            flat += v * self.strides[k];
        }
        Ok(flat)
    }

    /// Decode a flat index into the full-depth tuple.
    pub fn unindex(&self, flat: usize) -> Result<Vec<usize>> {
        if flat >= self.size {
            return Err(Error::IndexOutOfRange(format!(
                "flat index {flat} >= space size {}",
                self.size
            )));
        }
        Ok(self
            .radices
            .iter()
            .zip(&self.strides)
            .map(|(&r, &s)| (flat / s) % r)
            .collect())
    }

    /// Index of the fragment read off a trajectory. The trajectory must cover
    /// every non-padded stage of the space.
    pub fn index_in(&self, trajectory: &[usize]) -> usize {
        debug_assert!(trajectory.len() >= self.end);
        let mut flat = 0;
        for k in 0..self.depth() {
            let stage = self.stage_of(k);
            if stage >= 0 {
                flat += trajectory[stage as usize] * self.strides[k];
            }
        }
        flat
    }

    /// Checked variant of [`FragmentSpace::index_in`].
    pub fn try_index_in(&self, trajectory: &[usize]) -> Result<usize> {
        if trajectory.len() < self.end {
            return Err(Error::IndexOutOfRange(format!(
                "trajectory of length {} does not reach stage {}",
                trajectory.len(),
                self.end
            )));
        }
        for k in 0..self.depth() {
            let stage = self.stage_of(k);
            if stage >= 0 && trajectory[stage as usize] >= self.radices[k] {
                return Err(Error::IndexOutOfRange(format!(
                    "trajectory value {} at stage {stage} exceeds radix {}",
                    trajectory[stage as usize], self.radices[k]
                )));
            }
        }
        Ok(self.index_in(trajectory))
    }

    /// Flat index of the trailing `depth` coordinates of fragment `flat`, in the
    /// space with the same end and the shorter depth.
    pub fn suffix_index(&self, flat: usize, depth: usize) -> usize {
        debug_assert!(depth <= self.depth());
        let suffix_size: usize = self.radices[self.depth() - depth..].iter().product();
        flat % suffix_size
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padded_stage_one_fragment() {
        // tau = stage 1 (0-based 0), mu = 2, d_1 = 3: (pad, 2nd value) -> 1
        let space = FragmentSpace::anchored(&[3], 0, 2);
        assert_eq!(space.size(), 3);
        assert_eq!(space.radices(), &[1, 3]);
        assert_eq!(space.index(&[0, 1]).unwrap(), 1);
    }

    #[test]
    fn two_stage_fragments_enumerate_in_order() {
        let space = FragmentSpace::anchored(&[2, 3], 1, 2);
        assert_eq!(space.size(), 6);
        assert_eq!(space.index(&[0, 0]).unwrap(), 0);
        // enumerate every fragment in mixed-radix order, last coordinate fastest
        let mut expected = 0;
        for a in 0..2 {
            for b in 0..3 {
                assert_eq!(space.index(&[a, b]).unwrap(), expected);
                expected += 1;
            }
        }
        assert_eq!(space.index(&[1, 2]).unwrap(), 5);
    }

    #[test]
    fn out_of_range_entries_are_rejected() {
        let space = FragmentSpace::anchored(&[2, 3], 1, 2);
        assert!(matches!(space.index(&[2, 0]), Err(Error::IndexOutOfRange(_))));
        assert!(space.index(&[0]).is_err());
        let padded = FragmentSpace::anchored(&[3], 0, 2);
        assert!(padded.index(&[1, 0]).is_err());
        assert!(space.unindex(6).is_err());
    }

    #[test]
    fn depth_zero_space_has_one_element() {
        let space = FragmentSpace::new(&[4, 4], 1, 0);
        assert_eq!(space.size(), 1);
        assert_eq!(space.index(&[]).unwrap(), 0);
        assert_eq!(space.index_in(&[3, 2]), 0);
    }

    #[test]
    fn suffix_drops_leading_coordinates() {
        let d = [2, 3, 4];
        let wide = FragmentSpace::anchored(&d, 2, 3);
        let narrow = FragmentSpace::anchored(&d, 2, 1);
        for flat in 0..wide.size() {
            let frag = wide.unindex(flat).unwrap();
            let expect = narrow.index(&frag[2..]).unwrap();
            assert_eq!(wide.suffix_index(flat, 1), expect);
        }
    }

    #[test]
    fn exhaustive_round_trip_below_bound() {
        let d = [7, 5, 9, 11, 3];
        for tau in 0..d.len() {
            for depth in 0..=4 {
                let space = FragmentSpace::anchored(&d, tau, depth);
                assert!(space.size() <= 100_000);
                for flat in 0..space.size() {
                    let frag = space.unindex(flat).unwrap();
                    assert_eq!(space.index(&frag).unwrap(), flat);
                }
            }
        }
    }
}
