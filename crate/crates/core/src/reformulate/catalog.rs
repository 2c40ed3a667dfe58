//! Column and row catalogs mapping LP indices back to semantic variables.

use serde::{Deserialize, Serialize};

use crate::model::{pair_index, FragmentSpace};

const ABSENT: usize = usize::MAX;

/// Dimensions that drive the LP layout. `m` already includes any rows added
/// for a worst-case objective.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub d: Vec<usize>,
    pub mu: usize,
    /// Only the `τ = t` rule blocks exist.
    pub memoryless: bool,
    pub worst_case: bool,
}

impl Layout {
    pub fn stages(&self) -> usize {
        self.n.len()
    }

    /// `D_{s-μ+1:s}`: fragments indexing `u^·_{s·}`, `β^·_{s·}` and `y^·_{s·}`.
    pub fn fragments(&self, s: usize) -> FragmentSpace {
        FragmentSpace::anchored(&self.d, s, self.mu)
    }

    /// `D_{s-μ+1:s-1}`: fragments indexing `z^·_{s·}`.
    pub fn z_fragments(&self, s: usize) -> FragmentSpace {
        FragmentSpace::new(&self.d, s, self.mu - 1)
    }

    pub fn has_u(&self, t: usize, tau: usize) -> bool {
        tau <= t && (!self.memoryless || tau == t)
    }
}

/// Semantic identity of an LP column. Stages and summand indices are 0-based;
/// `xi`/`eta` are flat fragment indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variable {
    U { t: usize, tau: usize, xi: usize, j: usize },
    Y { t: usize, s: usize, xi: usize, i: usize },
    Z { t: usize, s: usize, eta: usize, i: usize },
    W,
}

impl Variable {
    /// MPS-safe name with 1-based stages and components and 0-based fragment
    /// indices, e.g. `U_t2_tau1_x003_j1`.
    pub fn name(&self) -> String {
        match *self {
            Variable::U { t, tau, xi, j } => format!("U_t{}_tau{}_x{xi:03}_j{}", t + 1, tau + 1, j + 1),
            Variable::Y { t, s, xi, i } => format!("Y_t{}_s{}_x{xi:03}_i{}", t + 1, s + 1, i + 1),
            Variable::Z { t, s, eta, i } => format!("Z_t{}_s{}_e{eta:03}_i{}", t + 1, s + 1, i + 1),
            Variable::W => "W".to_string(),
        }
    }
}

/// Semantic identity of an LP row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    /// `y^t_{sξ} = Σ_τ A^{tτ} u^τ_{sξ} − β^t_{sξ}`, component `i`.
    Link { t: usize, s: usize, xi: usize, i: usize },
    /// `y^t_{s,ξ} + z^t_{s+1,·} ≤ z^t_{s,η}` where `η` is the head of `ξ`.
    Dp { t: usize, s: usize, xi: usize, i: usize },
    /// `z^t_{0,η₀} ≤ 0`.
    Root { t: usize, i: usize },
}

impl Constraint {
    pub fn stage(&self) -> usize {
        match *self {
            Constraint::Link { t, .. } | Constraint::Dp { t, .. } | Constraint::Root { t, .. } => t,
        }
    }

    /// Row of the original stage-`t` system this constraint comes from.
    pub fn original_row(&self) -> usize {
        match *self {
            Constraint::Link { i, .. } | Constraint::Dp { i, .. } | Constraint::Root { i, .. } => i,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Constraint::Link { t, s, xi, i } => format!("L_t{}_s{}_x{xi:03}_i{}", t + 1, s + 1, i + 1),
            Constraint::Dp { t, s, xi, i } => format!("D_t{}_s{}_x{xi:03}_i{}", t + 1, s + 1, i + 1),
            Constraint::Root { t, i } => format!("R_t{}_i{}", t + 1, i + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Family {
    U,
    Y,
    Z,
    W,
    Link,
    Dp,
    Root,
}

/// A contiguous run of columns or rows: `count` fragments of `width` entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Segment {
    start: usize,
    family: Family,
    t: usize,
    s: usize,
    width: usize,
    count: usize,
}

impl Segment {
    fn end(&self) -> usize {
        self.start + self.width * self.count
    }
}

fn locate(segments: &[Segment], k: usize) -> Option<(Segment, usize, usize)> {
    let p = segments.partition_point(|seg| seg.end() <= k);
    let seg = *segments.get(p)?;
    if k < seg.start {
        return None;
    }
    let off = k - seg.start;
    Some((seg, off / seg.width.max(1), off % seg.width.max(1)))
}

/// Column layout, ordered by stage `t` and then family `U, Y, Z`, with the
/// optional `W` column last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableCatalog {
    layout: Layout,
    u_start: Vec<usize>,
    y_start: Vec<usize>,
    z_start: Vec<usize>,
    w: Option<usize>,
    segments: Vec<Segment>,
    n_cols: usize,
}

impl VariableCatalog {
    pub fn new(layout: Layout) -> Self {
        let stages = layout.stages();
        let pairs = stages * (stages + 1) / 2;
        let mut u_start = vec![ABSENT; pairs];
        let mut y_start = vec![ABSENT; pairs];
        let mut z_start = vec![ABSENT; pairs];
        let mut segments = Vec::new();
        let mut next = 0;
        let mut push = |family, t, s, width, count, next: &mut usize| {
            segments.push(Segment {
                start: *next,
                family,
                t,
                s,
                width,
                count,
            });
            let start = *next;
            *next += width * count;
            start
        };
        for t in 0..stages {
            for tau in 0..=t {
                if layout.has_u(t, tau) {
                    u_start[pair_index(t, tau)] =
                        push(Family::U, t, tau, layout.n[t], layout.fragments(tau).size(), &mut next);
                }
            }
            for s in 0..=t {
                y_start[pair_index(t, s)] =
                    push(Family::Y, t, s, layout.m[t], layout.fragments(s).size(), &mut next);
            }
            for s in 0..=t {
                z_start[pair_index(t, s)] =
                    push(Family::Z, t, s, layout.m[t], layout.z_fragments(s).size(), &mut next);
            }
        }
        let w = layout
            .worst_case
            .then(|| push(Family::W, 0, 0, 1, 1, &mut next));
        VariableCatalog {
            layout,
            u_start,
            y_start,
            z_start,
            w,
            segments,
            n_cols: next,
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Column of `[u^t_{τ,ξ}]_j`, if that block exists.
    pub fn u(&self, t: usize, tau: usize, xi: usize, j: usize) -> Option<usize> {
        let start = *self.u_start.get(pair_index(t, tau))?;
        (tau <= t && start != ABSENT).then(|| start + xi * self.layout.n[t] + j)
    }

    pub fn y(&self, t: usize, s: usize, xi: usize, i: usize) -> usize {
        self.y_start[pair_index(t, s)] + xi * self.layout.m[t] + i
    }

    pub fn z(&self, t: usize, s: usize, eta: usize, i: usize) -> usize {
        self.z_start[pair_index(t, s)] + eta * self.layout.m[t] + i
    }

    pub fn w(&self) -> Option<usize> {
        self.w
    }

    pub fn describe(&self, col: usize) -> Option<Variable> {
        let (seg, frag, k) = locate(&self.segments, col)?;
        Some(match seg.family {
            Family::U => Variable::U {
                t: seg.t,
                tau: seg.s,
                xi: frag,
                j: k,
            },
            Family::Y => Variable::Y {
                t: seg.t,
                s: seg.s,
                xi: frag,
                i: k,
            },
            Family::Z => Variable::Z {
                t: seg.t,
                s: seg.s,
                eta: frag,
                i: k,
            },
            _ => Variable::W,
        })
    }

    pub fn names(&self) -> Vec<String> {
        (0..self.n_cols)
            .map(|c| self.describe(c).expect("column in range").name())
            .collect()
    }

    /// Scalar column counts `(U, Y, Z, W)`.
    pub fn family_counts(&self) -> [usize; 4] {
        let mut out = [0; 4];
        for seg in &self.segments {
            let k = match seg.family {
                Family::U => 0,
                Family::Y => 1,
                Family::Z => 2,
                _ => 3,
            };
            out[k] += seg.width * seg.count;
        }
        out
    }
}

/// Row layout, ordered by stage `t`: linking rows by `(s, ξ, i)`, then DP rows
/// by `(s, ξ, i)` and finally the root rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowCatalog {
    link_start: Vec<usize>,
    dp_start: Vec<usize>,
    root_start: Vec<usize>,
    m: Vec<usize>,
    segments: Vec<Segment>,
    n_rows: usize,
    n_eq: usize,
}

impl RowCatalog {
    pub fn new(layout: &Layout) -> Self {
        let stages = layout.stages();
        let pairs = stages * (stages + 1) / 2;
        let mut link_start = vec![0; pairs];
        let mut dp_start = vec![0; pairs];
        let mut root_start = vec![0; stages];
        let mut segments = Vec::new();
        let mut next = 0;
        let mut n_eq = 0;
        for t in 0..stages {
            let m = layout.m[t];
            for (family, starts) in [(Family::Link, &mut link_start), (Family::Dp, &mut dp_start)] {
                for s in 0..=t {
                    let count = layout.fragments(s).size();
                    starts[pair_index(t, s)] = next;
                    segments.push(Segment {
                        start: next,
                        family,
                        t,
                        s,
                        width: m,
                        count,
                    });
                    next += m * count;
                    if family == Family::Link {
                        n_eq += m * count;
                    }
                }
            }
            root_start[t] = next;
            segments.push(Segment {
                start: next,
                family: Family::Root,
                t,
                s: 0,
                width: m,
                count: 1,
            });
            next += m;
        }
        RowCatalog {
            link_start,
            dp_start,
            root_start,
            m: layout.m.clone(),
            segments,
            n_rows: next,
            n_eq,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_eq(&self) -> usize {
        self.n_eq
    }

    pub fn n_ineq(&self) -> usize {
        self.n_rows - self.n_eq
    }

    pub fn link(&self, t: usize, s: usize, xi: usize, i: usize) -> usize {
        self.link_start[pair_index(t, s)] + xi * self.m[t] + i
    }

    pub fn dp(&self, t: usize, s: usize, xi: usize, i: usize) -> usize {
        self.dp_start[pair_index(t, s)] + xi * self.m[t] + i
    }

    pub fn root(&self, t: usize, i: usize) -> usize {
        self.root_start[t] + i
    }

    pub fn is_root(&self, row: usize) -> bool {
        matches!(self.describe(row), Some(Constraint::Root { .. }))
    }

    pub fn describe(&self, row: usize) -> Option<Constraint> {
        let (seg, frag, i) = locate(&self.segments, row)?;
        Some(match seg.family {
            Family::Link => Constraint::Link {
                t: seg.t,
                s: seg.s,
                xi: frag,
                i,
            },
            Family::Dp => Constraint::Dp {
                t: seg.t,
                s: seg.s,
                xi: frag,
                i,
            },
            _ => Constraint::Root { t: seg.t, i },
        })
    }

    pub fn names(&self) -> Vec<String> {
        (0..self.n_rows)
            .map(|r| self.describe(r).expect("row in range").name())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(mu: usize, memoryless: bool) -> Layout {
        Layout {
            n: vec![2, 1, 3],
            m: vec![1, 2, 2],
            d: vec![2, 3, 2],
            mu,
            memoryless,
            worst_case: true,
        }
    }

    #[test]
    fn columns_are_contiguous_and_describe_round_trips() {
        for mu in 1..=3 {
            for memoryless in [false, true] {
                let cat = VariableCatalog::new(layout(mu, memoryless));
                let mut seen = vec![false; cat.n_cols()];
                let lay = cat.layout().clone();
                for t in 0..3 {
                    for s in 0..=t {
                        for xi in 0..lay.fragments(s).size() {
                            for j in 0..lay.n[t] {
                                if let Some(c) = cat.u(t, s, xi, j) {
                                    assert!(!seen[c]);
                                    seen[c] = true;
                                    assert_eq!(cat.describe(c), Some(Variable::U { t, tau: s, xi, j }));
                                }
                            }
                            for i in 0..lay.m[t] {
                                let c = cat.y(t, s, xi, i);
                                assert!(!seen[c]);
                                seen[c] = true;
                                assert_eq!(cat.describe(c), Some(Variable::Y { t, s, xi, i }));
                            }
                        }
                        for eta in 0..lay.z_fragments(s).size() {
                            for i in 0..lay.m[t] {
                                let c = cat.z(t, s, eta, i);
                                assert!(!seen[c]);
                                seen[c] = true;
                                assert_eq!(cat.describe(c), Some(Variable::Z { t, s, eta, i }));
                            }
                        }
                    }
                }
                let w = cat.w().unwrap();
                assert!(!seen[w]);
                seen[w] = true;
                assert!(seen.iter().all(|&b| b));
                assert_eq!(cat.describe(cat.n_cols()), None);
            }
        }
    }

    #[test]
    fn rows_round_trip() {
        let lay = layout(2, false);
        let rows = RowCatalog::new(&lay);
        let mut seen = vec![false; rows.n_rows()];
        for t in 0..3 {
            for s in 0..=t {
                for xi in 0..lay.fragments(s).size() {
                    for i in 0..lay.m[t] {
                        for (r, c) in [
                            (rows.link(t, s, xi, i), Constraint::Link { t, s, xi, i }),
                            (rows.dp(t, s, xi, i), Constraint::Dp { t, s, xi, i }),
                        ] {
                            assert!(!seen[r]);
                            seen[r] = true;
                            assert_eq!(rows.describe(r), Some(c));
                        }
                    }
                }
            }
            for i in 0..lay.m[t] {
                let r = rows.root(t, i);
                seen[r] = true;
                assert!(rows.is_root(r));
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn names_are_unique() {
        let cat = VariableCatalog::new(layout(2, false));
        let mut names = cat.names();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), cat.n_cols());
        assert_eq!(
            Variable::U { t: 1, tau: 0, xi: 3, j: 0 }.name(),
            "U_t2_tau1_x003_j1"
        );
    }
}
