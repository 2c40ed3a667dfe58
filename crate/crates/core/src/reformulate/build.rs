use serde::{Deserialize, Serialize};

use super::catalog::{Constraint, Layout, RowCatalog, Variable, VariableCatalog};
use crate::error::{Error, Result};
use crate::lp::mps::LpNames;
use crate::lp::{Relation, SparseLp};
use crate::model::{pair_index, AdditiveRhs, FragmentSpace, ObjectiveSpec, ProblemSpec, RuleCoefficients, SparseBlock};

/// Refuse to assemble LPs with more scalar variables than this.
pub const MAX_ASSEMBLED_VARIABLES: u128 = 20_000_000;

/// Exact scalar variable and constraint counts of an assembled LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeReport {
    pub n_u: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub n_w: usize,
    pub n_eq: usize,
    pub n_ineq: usize,
}

impl SizeReport {
    pub fn variables(&self) -> usize {
        self.n_u + self.n_y + self.n_z + self.n_w
    }

    pub fn constraints(&self) -> usize {
        self.n_eq + self.n_ineq
    }

    /// Closed-form counts for a layout.
    pub fn for_layout(layout: &Layout) -> Self {
        let stages = layout.stages();
        let mut r = SizeReport {
            n_u: 0,
            n_y: 0,
            n_z: 0,
            n_w: usize::from(layout.worst_case),
            n_eq: 0,
            n_ineq: 0,
        };
        for t in 0..stages {
            for s in 0..=t {
                let frag = layout.fragments(s).size();
                if layout.has_u(t, s) {
                    r.n_u += layout.n[t] * frag;
                }
                r.n_y += layout.m[t] * frag;
                r.n_z += layout.m[t] * layout.z_fragments(s).size();
            }
            r.n_ineq += layout.m[t];
        }
        r.n_eq = r.n_y;
        r.n_ineq += r.n_y;
        r
    }

    /// `20 (max m + max n) N² (max d)^μ`.
    pub fn bound(layout: &Layout) -> u128 {
        let max = |v: &[usize]| v.iter().copied().max().unwrap_or(0) as u128;
        let stages = layout.stages() as u128;
        20 * (max(&layout.m) + max(&layout.n))
            * stages
            * stages
            * max(&layout.d).saturating_pow(layout.mu as u32)
    }
}

fn layout_of(spec: &ProblemSpec, memoryless: bool) -> Layout {
    let mut m = spec.m().to_vec();
    let worst_case = match spec.objective() {
        ObjectiveSpec::WorstCase { functionals } => {
            *m.last_mut().expect("at least one stage") += functionals.len();
            true
        }
        _ => false,
    };
    Layout {
        n: spec.n().to_vec(),
        m,
        d: spec.d().to_vec(),
        mu: spec.mu(),
        memoryless,
        worst_case,
    }
}

/// Closed-form sizes of the LP `build_lp(spec)` would assemble.
pub fn count_sizes(spec: &ProblemSpec) -> SizeReport {
    SizeReport::for_layout(&layout_of(spec, false))
}

/// A problem whose technology matrices depend on the current uncertainty
/// fragment, solved over memoryless rules `x_t(ξ^t) = u^t_{ξ_{t-μ+1:t}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainMatrixSpec {
    base: ProblemSpec,
    matrices: Vec<Option<Vec<SparseBlock>>>,
}

impl UncertainMatrixSpec {
    /// `matrices` lists `(t, s, A^{ts}(ξ) for every ξ ∈ D_{s-μ+1:s})`. Pairs
    /// not listed use the base problem's constant `A^{ts}` (or zero).
    pub fn new(base: ProblemSpec, matrices: Vec<(usize, usize, Vec<SparseBlock>)>) -> Result<Self> {
        let stages = base.stages();
        let mut table: Vec<Option<Vec<SparseBlock>>> = vec![None; stages * (stages + 1) / 2];
        for (t, s, blocks) in matrices {
            if t >= stages || s > t {
                return Err(Error::Assembly(format!(
                    "matrix family ({t},{s}) is not lower block-triangular"
                )));
            }
            let size = FragmentSpace::anchored(base.d(), s, base.mu()).size();
            if blocks.len() != size {
                return Err(Error::Assembly(format!(
                    "matrix family ({t},{s}) has {} members, one per fragment ({size}) is required",
                    blocks.len()
                )));
            }
            for b in &blocks {
                if b.rows() != base.m()[t] || b.cols() != base.n()[s] {
                    return Err(Error::DimensionMismatch(format!(
                        "matrix in family ({t},{s}) is {}x{}, expected {}x{}",
                        b.rows(),
                        b.cols(),
                        base.m()[t],
                        base.n()[s]
                    )));
                }
            }
            table[pair_index(t, s)] = Some(blocks);
        }
        Ok(UncertainMatrixSpec {
            base,
            matrices: table,
        })
    }

    pub fn base(&self) -> &ProblemSpec {
        &self.base
    }

    /// `A^{ts}(ξ)`, or `None` for a zero matrix.
    pub fn matrix(&self, t: usize, s: usize, xi: usize) -> Option<&SparseBlock> {
        match &self.matrices[pair_index(t, s)] {
            Some(blocks) => Some(&blocks[xi]),
            None => self.base.block(t, s),
        }
    }

    fn with_objective(&self, objective: ObjectiveSpec) -> Result<Self> {
        Ok(UncertainMatrixSpec {
            base: self.base.with_objective(objective)?,
            matrices: self.matrices.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Discrete(ProblemSpec),
    Memoryless(UncertainMatrixSpec),
}

/// The explicit LP over rule coefficients `u`, linking variables `y` and DP
/// variables `z` (plus `w` for worst-case objectives).
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledLp {
    lp: SparseLp,
    catalog: VariableCatalog,
    rows: RowCatalog,
    sizes: SizeReport,
    source: Source,
}

/// Per-pair constraint matrices applied in the linking rows.
enum Links {
    /// `A^{tτ}` by `pair_index(t, τ)`.
    Discrete(Vec<Option<SparseBlock>>),
    /// `A^{ts}(ξ)` by `pair_index(t, s)`, then fragment.
    Memoryless(Vec<Vec<Option<SparseBlock>>>),
}

fn functionals_of(objective: &ObjectiveSpec) -> Option<&[Vec<Vec<f64>>]> {
    match objective {
        ObjectiveSpec::WorstCase { functionals } => Some(functionals),
        _ => None,
    }
}

/// Rows `h_{τℓ}ᵀ` appended under an existing (possibly absent) block.
fn extended(block: Option<&SparseBlock>, m: usize, n: usize, functionals: &[Vec<Vec<f64>>], tau: usize) -> SparseBlock {
    let mut b = block.cloned().unwrap_or_else(|| SparseBlock::zeros(m, n));
    let extra = functionals
        .iter()
        .map(|h| {
            h[tau]
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(j, &v)| (j, v))
                .collect()
        })
        .collect();
    b.extend_rows(extra);
    b
}

fn fragment_probability(probabilities: &[Vec<f64>], space: &FragmentSpace, xi: usize) -> f64 {
    let tuple = space.unindex(xi).expect("flat index in range");
    let mut p = 1.0;
    for (k, v) in tuple.into_iter().enumerate() {
        let stage = space.stage_of(k);
        if stage >= 0 {
            p *= probabilities[stage as usize][v];
        }
    }
    p
}

fn assemble(layout: Layout, links: &Links, rhs: &AdditiveRhs, objective: &ObjectiveSpec) -> Result<(SparseLp, VariableCatalog, RowCatalog, SizeReport)> {
    let sizes = SizeReport::for_layout(&layout);
    let total = sizes.variables() as u128;
    if total > MAX_ASSEMBLED_VARIABLES {
        return Err(Error::SizeGuard {
            what: "assembled variables",
            size: total,
            limit: MAX_ASSEMBLED_VARIABLES,
        });
    }
    let cat = VariableCatalog::new(layout.clone());
    let rows = RowCatalog::new(&layout);
    let mut lp = SparseLp::new(cat.n_cols());
    let stages = layout.stages();

    for t in 0..stages {
        let m = layout.m[t];
        let m0 = rhs.width(t);
        for s in 0..=t {
            for xi in 0..layout.fragments(s).size() {
                let beta = rhs.coeff(t, s, xi);
                for i in 0..m {
                    let mut coeffs = vec![(cat.y(t, s, xi, i), 1.0)];
                    match links {
                        Links::Discrete(blocks) => {
                            for tau in s..=t {
                                if let Some(b) = &blocks[pair_index(t, tau)] {
                                    for &(j, a) in b.row(i) {
                                        coeffs.push((cat.u(tau, s, xi, j).expect("u block exists"), -a));
                                    }
                                }
                            }
                        }
                        Links::Memoryless(families) => {
                            if let Some(b) = &families[pair_index(t, s)][xi] {
                                for &(j, a) in b.row(i) {
                                    coeffs.push((cat.u(s, s, xi, j).expect("u block exists"), -a));
                                }
                            }
                        }
                    }
                    let b = if i < m0 { beta[i] } else { 0.0 };
                    if i >= m0 && s == 0 {
                        coeffs.push((cat.w().expect("worst-case layout"), 1.0));
                    }
                    let r = lp.add_row(coeffs, Relation::Eq, 0.0 - b)?;
                    debug_assert_eq!(r, rows.link(t, s, xi, i));
                }
            }
        }
        for s in 0..=t {
            let frag = layout.fragments(s);
            let ds = layout.d[s];
            for xi in 0..frag.size() {
                let eta = xi / ds;
                let next = frag.suffix_index(xi, layout.mu - 1);
                for i in 0..m {
                    let mut coeffs = vec![(cat.y(t, s, xi, i), 1.0), (cat.z(t, s, eta, i), -1.0)];
                    if s < t {
                        coeffs.push((cat.z(t, s + 1, next, i), 1.0));
                    }
                    let r = lp.add_row(coeffs, Relation::Le, 0.0)?;
                    debug_assert_eq!(r, rows.dp(t, s, xi, i));
                }
            }
        }
        for i in 0..m {
            let r = lp.add_row(vec![(cat.z(t, 0, 0, i), 1.0)], Relation::Le, 0.0)?;
            debug_assert_eq!(r, rows.root(t, i));
        }
    }

    match objective {
        ObjectiveSpec::Expected {
            costs,
            probabilities,
        } => {
            for t in 0..stages {
                for tau in 0..=t {
                    if !layout.has_u(t, tau) {
                        continue;
                    }
                    let space = layout.fragments(tau);
                    for xi in 0..space.size() {
                        let p = fragment_probability(probabilities, &space, xi);
                        for (j, &f) in costs[t].iter().enumerate() {
                            if f != 0.0 {
                                lp.add_cost(cat.u(t, tau, xi, j).expect("u block exists"), f * p);
                            }
                        }
                    }
                }
            }
        }
        ObjectiveSpec::Saa { costs, scenarios } => {
            for sc in scenarios {
                for t in 0..stages {
                    for tau in 0..=t {
                        if !layout.has_u(t, tau) {
                            continue;
                        }
                        let xi = layout.fragments(tau).index_in(&sc.xi);
                        for (j, &f) in costs[t].iter().enumerate() {
                            if f != 0.0 {
                                lp.add_cost(cat.u(t, tau, xi, j).expect("u block exists"), sc.weight * f);
                            }
                        }
                    }
                }
            }
        }
        ObjectiveSpec::WorstCase { .. } => {
            lp.set_cost(cat.w().expect("worst-case layout"), 1.0);
        }
    }
    Ok((lp, cat, rows, sizes))
}

fn build_from_spec(spec: &ProblemSpec) -> Result<AssembledLp> {
    let layout = layout_of(spec, false);
    let stages = spec.stages();
    let mut blocks: Vec<Option<SparseBlock>> = (0..stages)
        .flat_map(|t| (0..=t).map(move |tau| (t, tau)))
        .map(|(t, tau)| spec.block(t, tau).cloned())
        .collect();
    if let Some(functionals) = functionals_of(spec.objective()) {
        let last = stages - 1;
        for tau in 0..=last {
            let slot = &mut blocks[pair_index(last, tau)];
            *slot = Some(extended(slot.as_ref(), spec.m()[last], spec.n()[tau], functionals, tau));
        }
    }
    let (lp, catalog, rows, sizes) = assemble(layout, &Links::Discrete(blocks), spec.rhs(), spec.objective())?;
    Ok(AssembledLp {
        lp,
        catalog,
        rows,
        sizes,
        source: Source::Discrete(spec.clone()),
    })
}

fn build_from_uncertain(spec: &UncertainMatrixSpec) -> Result<AssembledLp> {
    let base = &spec.base;
    let layout = layout_of(base, true);
    let stages = base.stages();
    let functionals = functionals_of(base.objective());
    let mut families = Vec::with_capacity(stages * (stages + 1) / 2);
    for t in 0..stages {
        for s in 0..=t {
            let size = layout.fragments(s).size();
            let family: Vec<Option<SparseBlock>> = (0..size)
                .map(|xi| match functionals {
                    Some(h) if t == stages - 1 => {
                        Some(extended(spec.matrix(t, s, xi), base.m()[t], base.n()[s], h, s))
                    }
                    _ => spec.matrix(t, s, xi).cloned(),
                })
                .collect();
            families.push(family);
        }
    }
    let (lp, catalog, rows, sizes) = assemble(layout, &Links::Memoryless(families), base.rhs(), base.objective())?;
    Ok(AssembledLp {
        lp,
        catalog,
        rows,
        sizes,
        source: Source::Memoryless(spec.clone()),
    })
}

/// LP whose feasible `u`-projections are exactly the rules satisfying every
/// stage constraint on every trajectory. Worst-case objectives must go through
/// [`add_worstcase`] or [`build_lp`].
pub fn build_discrete_lp(spec: &ProblemSpec) -> Result<AssembledLp> {
    if functionals_of(spec.objective()).is_some() {
        return Err(Error::WorstCaseNotAugmented);
    }
    build_from_spec(spec)
}

/// Replace the objective by `min w` subject to `Σ_t h_{tℓ}ᵀ x_t(ξ^t) ≤ w` for
/// every `ℓ` and every trajectory.
pub fn add_worstcase(lp: AssembledLp, functionals: &[Vec<Vec<f64>>]) -> Result<AssembledLp> {
    if lp.catalog.w().is_some() {
        return Err(Error::WorstCaseAlreadyAdded);
    }
    let objective = ObjectiveSpec::WorstCase {
        functionals: functionals.to_vec(),
    };
    match &lp.source {
        Source::Discrete(spec) => build_from_spec(&spec.with_objective(objective)?),
        Source::Memoryless(spec) => build_from_uncertain(&spec.with_objective(objective)?),
    }
}

/// The memoryless variant with fragment-dependent technology matrices.
pub fn build_memoryless_uncertain_matrix_lp(spec: &UncertainMatrixSpec) -> Result<AssembledLp> {
    if functionals_of(spec.base.objective()).is_some() {
        return Err(Error::WorstCaseNotAugmented);
    }
    build_from_uncertain(spec)
}

/// Assemble for any objective kind.
pub fn build_lp(spec: &ProblemSpec) -> Result<AssembledLp> {
    build_from_spec(spec)
}

impl AssembledLp {
    pub fn lp(&self) -> &SparseLp {
        &self.lp
    }

    pub fn catalog(&self) -> &VariableCatalog {
        &self.catalog
    }

    pub fn rows(&self) -> &RowCatalog {
        &self.rows
    }

    pub fn sizes(&self) -> SizeReport {
        self.sizes
    }

    /// The problem the LP was built from (the base problem for the
    /// uncertain-matrix variant).
    pub fn spec(&self) -> &ProblemSpec {
        match &self.source {
            Source::Discrete(spec) => spec,
            Source::Memoryless(spec) => &spec.base,
        }
    }

    pub fn is_memoryless(&self) -> bool {
        matches!(self.source, Source::Memoryless(_))
    }

    pub fn names(&self) -> LpNames {
        LpNames {
            problem: "CDDR".into(),
            objective: "COST".into(),
            rows: self.rows.names(),
            cols: self.catalog.names(),
        }
    }

    /// Copy of the LP with every `u` column fixed to `rule`.
    pub fn with_rule_fixed(&self, rule: &RuleCoefficients) -> Result<SparseLp> {
        let spec = self.spec();
        if rule.radices() != spec.d() || rule.widths() != spec.n() || rule.depth() != spec.mu() {
            return Err(Error::DimensionMismatch("rule shape does not match the problem".into()));
        }
        let mut lp = self.lp.clone();
        for (t, tau, xi, values) in rule.iter() {
            for (j, &v) in values.iter().enumerate() {
                match self.catalog.u(t, tau, xi, j) {
                    Some(col) => lp.fix(col, v)?,
                    None if v != 0.0 => {
                        return Err(Error::InvalidProblem(format!(
                            "rule has a nonzero summand {tau} at stage {t}, which memoryless rules cannot carry"
                        )))
                    }
                    None => {}
                }
            }
        }
        Ok(lp)
    }

    /// With `u` fixed and the root rows dropped, minimize the sum of the root
    /// values `z^t_{0,η₀}`. Returns the LP and the root columns by stage.
    pub fn z_root_lp(&self, rule: &RuleCoefficients) -> Result<(SparseLp, Vec<Vec<usize>>)> {
        let mut lp = self.with_rule_fixed(rule)?;
        let rows = &self.rows;
        lp.retain_rows(|r| !rows.is_root(r));
        lp.clear_objective();
        let layout = self.catalog.layout();
        let roots: Vec<Vec<usize>> = (0..layout.stages())
            .map(|t| (0..layout.m[t]).map(|i| self.catalog.z(t, 0, 0, i)).collect())
            .collect();
        for &c in roots.iter().flatten() {
            lp.set_cost(c, 1.0);
        }
        Ok((lp, roots))
    }

    /// Rule coefficients read off an LP solution.
    pub fn extract_rule(&self, x: &[f64]) -> RuleCoefficients {
        let mut rule = self.spec().zero_rule();
        let layout = self.catalog.layout();
        for t in 0..layout.stages() {
            for tau in 0..=t {
                if !layout.has_u(t, tau) {
                    continue;
                }
                for xi in 0..layout.fragments(tau).size() {
                    let out = rule.coeff_mut(t, tau, xi);
                    for (j, v) in out.iter_mut().enumerate() {
                        *v = x[self.catalog.u(t, tau, xi, j).expect("u block exists")];
                    }
                }
            }
        }
        rule
    }

    pub fn worst_case_value(&self, x: &[f64]) -> Option<f64> {
        self.catalog.w().map(|c| x[c])
    }

    /// Infeasibility report for the earliest stage among `rows`. Stage and
    /// row are 1-based.
    pub fn diagnose(&self, rows: &[usize]) -> Error {
        let first = rows
            .iter()
            .filter_map(|&r| self.rows.describe(r))
            .map(|c| (c.stage(), c.original_row()))
            .min();
        match first {
            Some((t, i)) => Error::Infeasible {
                stage: t + 1,
                row: i + 1,
            },
            None => Error::Infeasible { stage: 0, row: 0 },
        }
    }

    pub fn describe_column(&self, col: usize) -> Option<Variable> {
        self.catalog.describe(col)
    }

    pub fn describe_row(&self, row: usize) -> Option<Constraint> {
        self.rows.describe(row)
    }
}
