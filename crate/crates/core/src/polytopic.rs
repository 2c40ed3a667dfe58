//! Polytopic uncertainty: affine coordinates, poly-affine functions and their
//! reduction to the discrete problem over vertex trajectories.
//!
//! A poly-affine table is an [`AdditiveTable`] whose radices are the basis
//! sizes `ν_t = dim_t + 1` instead of vertex counts; the fragment index `κ`
//! picks one affine coordinate per stage of the memory window.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::mps::LpNames;
use crate::lp::{LpStatus, Relation};
use crate::model::io::{
    blocks_from_entries, entries_from_blocks, entries_from_table, table_from_entries, CoefficientEntry,
    ObjectiveFile,
};
use crate::model::{pair_index, AdditiveTable, FragmentSpace, ObjectiveSpec, ProblemSpec, RuleCoefficients, StageBlock};
use crate::reformulate::build_lp;
use crate::solve::Backend;

pub type PolyAffineCoefficients = AdditiveTable;

const RANK_TOL: f64 = 1e-9;

/// Support `Δ_t` of one stage's disturbance, given by its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeStage {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    basis: Option<Vec<Vec<f64>>>,
    // inverse of [b_1 .. b_ν; 1 .. 1] for a custom basis
    inverse: Option<DMatrix<f64>>,
}

fn affine_rank(points: &[Vec<f64>], dim: usize) -> usize {
    if dim == 0 || points.len() < 2 {
        return 0;
    }
    let diffs = DMatrix::from_fn(points.len() - 1, dim, |r, c| points[r + 1][c] - points[0][c]);
    let scale = diffs.amax().max(1.0);
    diffs.rank(RANK_TOL * scale)
}

impl PolytopeStage {
    /// Stage with the default basis (unit vectors, then the origin).
    pub fn new(dim: usize, vertices: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_basis(dim, vertices, None)
    }

    pub fn with_basis(dim: usize, vertices: Vec<Vec<f64>>, basis: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidProblem("a stage needs at least one vertex".into()));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "vertex of length {} in a stage of dimension {dim}",
                v.len()
            )));
        }
        if !vertices.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::InvalidProblem("vertex coordinates must be finite".into()));
        }
        let rank = affine_rank(&vertices, dim);
        if rank < dim {
            return Err(Error::RankDeficient { stage: 0, dim });
        }
        let inverse = match &basis {
            None => None,
            Some(b) => {
                if b.len() != dim + 1 || b.iter().any(|p| p.len() != dim) {
                    return Err(Error::DimensionMismatch(format!(
                        "an affine basis of R^{dim} needs {} points of length {dim}",
                        dim + 1
                    )));
                }
                let m = DMatrix::from_fn(dim + 1, dim + 1, |r, c| if r < dim { b[c][r] } else { 1.0 });
                if affine_rank(b, dim) < dim {
                    return Err(Error::RankDeficient { stage: 0, dim });
                }
                Some(m.try_inverse().ok_or(Error::RankDeficient { stage: 0, dim })?)
            }
        };
        Ok(PolytopeStage {
            dim,
            vertices,
            basis,
            inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `ν_t`, the number of affine coordinates.
    pub fn nu(&self) -> usize {
        self.dim + 1
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Number of vertices, which becomes `d_t` of the discrete problem.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn basis(&self) -> Option<&[Vec<f64>]> {
        self.basis.as_deref()
    }

    /// The basis points in coordinate order.
    pub fn basis_points(&self) -> Vec<Vec<f64>> {
        match &self.basis {
            Some(b) => b.clone(),
            None => (0..=self.dim)
                .map(|k| (0..self.dim).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    /// Affine coordinates of `zeta`; they always sum to one.
    pub fn lambda(&self, zeta: &[f64]) -> Result<Vec<f64>> {
        if zeta.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "point of length {} in a stage of dimension {}",
                zeta.len(),
                self.dim
            )));
        }
        Ok(match &self.inverse {
            None => {
                let mut lam = zeta.to_vec();
                lam.push(1.0 - zeta.iter().sum::<f64>());
                lam
            }
            Some(inv) => {
                let rhs = DVector::from_iterator(self.dim + 1, zeta.iter().copied().chain([1.0]));
                (inv * rhs).iter().copied().collect()
            }
        })
    }
}

pub fn lambda_coords(stage: &PolytopeStage, zeta: &[f64]) -> Result<Vec<f64>> {
    stage.lambda(zeta)
}

/// `ν_t` for every stage.
pub fn nus(stages: &[PolytopeStage]) -> Vec<usize> {
    stages.iter().map(PolytopeStage::nu).collect()
}

/// `Π_k λ_{κ_k}` over the coordinates of one fragment; padded coordinates
/// contribute nothing. `lam[k]` holds the coordinates for window slot `k`.
fn weight(kappa_space: &FragmentSpace, kappa: usize, lam: &[Option<&[f64]>]) -> f64 {
    let tuple = kappa_space.unindex(kappa).expect("kappa within its space");
    let mut w = 1.0;
    for (k, &c) in tuple.iter().enumerate() {
        if let Some(l) = lam[k] {
            w *= l[c];
        }
    }
    w
}

fn check_shape(coeffs: &PolyAffineCoefficients, stages: &[PolytopeStage]) -> Result<()> {
    if coeffs.radices() != nus(stages).as_slice() {
        return Err(Error::DimensionMismatch(
            "poly-affine table radices do not match the stage dimensions".into(),
        ));
    }
    Ok(())
}

/// `g(ζ^t)`; `zeta` holds `ζ_0..ζ_t` (or more).
pub fn eval_polyaffine(
    coeffs: &PolyAffineCoefficients,
    stages: &[PolytopeStage],
    t: usize,
    zeta: &[Vec<f64>],
) -> Result<Vec<f64>> {
    check_shape(coeffs, stages)?;
    if t >= coeffs.stages() || zeta.len() <= t {
        return Err(Error::IndexOutOfRange(format!(
            "stage {t} with a trajectory of length {}",
            zeta.len()
        )));
    }
    let lam: Vec<Vec<f64>> = (0..=t).map(|s| stages[s].lambda(&zeta[s])).collect::<Result<_>>()?;
    let depth = coeffs.depth();
    let mut out = vec![0.0; coeffs.width(t)];
    for tau in 0..=t {
        let space = coeffs.space(tau);
        let window: Vec<Option<&[f64]>> = (0..depth)
            .map(|k| usize::try_from(space.stage_of(k)).ok().map(|s| lam[s].as_slice()))
            .collect();
        let mut partial = vec![0.0; coeffs.width(t)];
        for kappa in 0..space.size() {
            let w = weight(&space, kappa, &window);
            for (p, g) in partial.iter_mut().zip(coeffs.coeff(t, tau, kappa)) {
                *p += w * g;
            }
        }
        for (o, p) in out.iter_mut().zip(&partial) {
            *o += p;
        }
    }
    Ok(out)
}

/// `ζ^t[ξ^t]`: the vertex trajectory picked by `xi`.
pub fn scenario_trajectory(stages: &[PolytopeStage], xi: &[usize]) -> Result<Vec<Vec<f64>>> {
    xi.iter()
        .zip(stages)
        .map(|(&v, st)| {
            st.vertices.get(v).cloned().ok_or_else(|| {
                Error::IndexOutOfRange(format!("vertex {v} of a stage with {}", st.vertices.len()))
            })
        })
        .collect()
}

/// Weights `Π_s λ_{κ_s}(χ_{s, ξ_s})` for every vertex fragment `ξ` (rows) and
/// coordinate fragment `κ` (columns) anchored at `tau`.
fn vertex_weights(stages: &[PolytopeStage], lam: &[Vec<Vec<f64>>], tau: usize, depth: usize) -> Vec<Vec<f64>> {
    let d: Vec<usize> = stages.iter().map(PolytopeStage::vertex_count).collect();
    let nu = nus(stages);
    let xi_space = FragmentSpace::anchored(&d, tau, depth);
    let kappa_space = FragmentSpace::anchored(&nu, tau, depth);
    (0..xi_space.size())
        .map(|xi| {
            let tuple = xi_space.unindex(xi).expect("xi within its space");
            let window: Vec<Option<&[f64]>> = (0..depth)
                .map(|k| usize::try_from(xi_space.stage_of(k)).ok().map(|s| lam[s][tuple[k]].as_slice()))
                .collect();
            (0..kappa_space.size()).map(|kappa| weight(&kappa_space, kappa, &window)).collect()
        })
        .collect()
}

fn vertex_lambdas(stages: &[PolytopeStage]) -> Vec<Vec<Vec<f64>>> {
    stages
        .iter()
        .map(|st| st.vertices.iter().map(|v| st.lambda(v).expect("vertex has the stage dimension")).collect())
        .collect()
}

/// The linear map `v ↦ u` onto vertex-indexed coefficients. With it,
/// evaluating `u` at `ξ^t` reproduces `v` at `ζ^t[ξ^t]` bit for bit.
pub fn v_to_u(coeffs: &PolyAffineCoefficients, stages: &[PolytopeStage]) -> Result<RuleCoefficients> {
    check_shape(coeffs, stages)?;
    let d: Vec<usize> = stages.iter().map(PolytopeStage::vertex_count).collect();
    let depth = coeffs.depth();
    let mut out = AdditiveTable::zeros(&d, coeffs.widths(), depth)?;
    let lam = vertex_lambdas(stages);
    for tau in 0..coeffs.stages() {
        let weights = vertex_weights(stages, &lam, tau, depth);
        for t in tau..coeffs.stages() {
            for (xi, row) in weights.iter().enumerate() {
                let mut acc = vec![0.0; coeffs.width(t)];
                for (kappa, &w) in row.iter().enumerate() {
                    for (a, g) in acc.iter_mut().zip(coeffs.coeff(t, tau, kappa)) {
                        *a += w * g;
                    }
                }
                out.coeff_mut(t, tau, xi).copy_from_slice(&acc);
            }
        }
    }
    Ok(out)
}

/// Poly-affine coefficients of `b_t(ζ) = p_t + Σ_τ P_{tτ} ζ_τ` with memory 1.
/// `linear` lists `(t, τ, P_{tτ})` with `P` dense, `m_t × dim_τ`.
pub fn from_affine(
    stages: &[PolytopeStage],
    constant: &[Vec<f64>],
    linear: &[(usize, usize, Vec<Vec<f64>>)],
) -> Result<PolyAffineCoefficients> {
    if constant.len() != stages.len() {
        return Err(Error::DimensionMismatch("one constant vector per stage is required".into()));
    }
    let widths: Vec<usize> = constant.iter().map(Vec::len).collect();
    let mut g = AdditiveTable::zeros(&nus(stages), &widths, 1)?;
    // Σ_κ λ_κ = 1 lets the constant ride on the first stage's coordinates.
    for (t, p) in constant.iter().enumerate() {
        for kappa in 0..stages[0].nu() {
            for (c, v) in g.coeff_mut(t, 0, kappa).iter_mut().zip(p) {
                *c += v;
            }
        }
    }
    for (t, tau, p) in linear {
        let (t, tau) = (*t, *tau);
        if t >= stages.len() || tau > t {
            return Err(Error::IndexOutOfRange(format!("affine block ({t}, {tau})")));
        }
        if p.len() != widths[t] || p.iter().any(|r| r.len() != stages[tau].dim) {
            return Err(Error::DimensionMismatch(format!("affine block ({t}, {tau}) has the wrong shape")));
        }
        for (kappa, b) in stages[tau].basis_points().iter().enumerate() {
            for (c, row) in g.coeff_mut(t, tau, kappa).iter_mut().zip(p) {
                *c += row.iter().zip(b).map(|(a, x)| a * x).sum::<f64>();
            }
        }
    }
    Ok(g)
}

/// A multistage problem with polytopic supports and a poly-affine right-hand
/// side. The objective is stated over vertex indices, as in the discrete case.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyProblem {
    stages: Vec<PolytopeStage>,
    n: Vec<usize>,
    m: Vec<usize>,
    mu: usize,
    blocks: Vec<StageBlock>,
    rhs: PolyAffineCoefficients,
    objective: ObjectiveSpec,
}

impl PolyProblem {
    pub fn new(
        stages: Vec<PolytopeStage>,
        n: Vec<usize>,
        mu: usize,
        blocks: Vec<StageBlock>,
        rhs: PolyAffineCoefficients,
        objective: ObjectiveSpec,
    ) -> Result<Self> {
        check_shape(&rhs, &stages)?;
        let problem = PolyProblem {
            m: rhs.widths().to_vec(),
            stages,
            n,
            mu,
            blocks,
            rhs,
            objective,
        };
        discretize(&problem, mu)?;
        Ok(problem)
    }

    pub fn stages(&self) -> &[PolytopeStage] {
        &self.stages
    }

    pub fn n(&self) -> &[usize] {
        &self.n
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn rhs(&self) -> &PolyAffineCoefficients {
        &self.rhs
    }

    pub fn objective(&self) -> &ObjectiveSpec {
        &self.objective
    }

    pub fn blocks(&self) -> &[StageBlock] {
        &self.blocks
    }

    /// Largest excess `Σ_τ A^{tτ} x_τ − b_t(ζ^t)` of the poly-affine policy
    /// `v` along a full trajectory `ζ^N` (0 when every row holds).
    pub fn max_excess(&self, v: &PolyAffineCoefficients, zeta: &[Vec<f64>]) -> Result<f64> {
        let x: Vec<Vec<f64>> = (0..self.stages.len())
            .map(|t| eval_polyaffine(v, &self.stages, t, zeta))
            .collect::<Result<_>>()?;
        let mut worst = 0.0f64;
        for t in 0..self.stages.len() {
            let mut lhs = vec![0.0; self.m[t]];
            for b in self.blocks.iter().filter(|b| b.t == t) {
                b.block.mul_add(&x[b.tau], &mut lhs);
            }
            let rhs = eval_polyaffine(&self.rhs, &self.stages, t, zeta)?;
            for (l, r) in lhs.iter().zip(&rhs) {
                worst = worst.max(l - r);
            }
        }
        Ok(worst)
    }
}

/// The discrete problem over vertex trajectories, with rule memory `mu`.
pub fn discretize(problem: &PolyProblem, mu: usize) -> Result<ProblemSpec> {
    let d: Vec<usize> = problem.stages.iter().map(PolytopeStage::vertex_count).collect();
    if problem.n.len() != d.len() {
        return Err(Error::DimensionMismatch("one n_t per stage is required".into()));
    }
    let rhs = v_to_u(&problem.rhs, &problem.stages)?;
    ProblemSpec::new(
        problem.n.clone(),
        problem.m.clone(),
        d,
        mu,
        problem.blocks.clone(),
        rhs,
        problem.objective.clone(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolySolution {
    pub v: PolyAffineCoefficients,
    /// The vertex-indexed rule `v_to_u(v)`.
    pub rule: RuleCoefficients,
    pub value: f64,
    pub worst_case: Option<f64>,
}

/// Optimal poly-affine rule of memory `mu`: the discrete LP plus `v` columns
/// and the equalities `u = V(v)`.
pub fn solve_polytopic(problem: &PolyProblem, mu: usize, backend: &Backend) -> Result<PolySolution> {
    let spec = discretize(problem, mu)?;
    let asm = build_lp(&spec)?;
    let mut lp = asm.lp().clone();
    let stages = &problem.stages;
    let horizon = stages.len();
    let nu = nus(stages);
    let kappa_sizes: Vec<usize> = (0..horizon).map(|tau| FragmentSpace::anchored(&nu, tau, mu).size()).collect();

    let mut v_start = vec![0; horizon * (horizon + 1) / 2];
    let mut extra_cols = Vec::new();
    for t in 0..horizon {
        for tau in 0..=t {
            v_start[pair_index(t, tau)] = lp.n_cols();
            for kappa in 0..kappa_sizes[tau] {
                for j in 0..problem.n[t] {
                    lp.add_col();
                    extra_cols.push(format!("V_t{}_tau{}_k{kappa:03}_j{}", t + 1, tau + 1, j + 1));
                }
            }
        }
    }

    let lam = vertex_lambdas(stages);
    let mut extra_rows = Vec::new();
    for tau in 0..horizon {
        let weights = vertex_weights(stages, &lam, tau, mu);
        for t in tau..horizon {
            let nt = problem.n[t];
            let base = v_start[pair_index(t, tau)];
            for (xi, row) in weights.iter().enumerate() {
                for j in 0..nt {
                    let u = asm.catalog().u(t, tau, xi, j).expect("full-memory layout has every u block");
                    let mut coeffs = vec![(u, 1.0)];
                    coeffs.extend(row.iter().enumerate().map(|(kappa, &w)| (base + kappa * nt + j, -w)));
                    lp.add_row(coeffs, Relation::Eq, 0.0)?;
                    extra_rows.push(format!("M_t{}_tau{}_x{xi:03}_j{}", t + 1, tau + 1, j + 1));
                }
            }
        }
    }

    let result = backend.solve(&lp, || {
        let mut names: LpNames = asm.names();
        names.cols.extend(extra_cols);
        names.rows.extend(extra_rows);
        names
    })?;
    match result.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(asm.diagnose(&result.infeasible_rows)),
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }
    let mut v = AdditiveTable::zeros(&nu, &problem.n, mu)?;
    for t in 0..horizon {
        for tau in 0..=t {
            let base = v_start[pair_index(t, tau)];
            let len = kappa_sizes[tau] * problem.n[t];
            v.block_mut(t, tau).copy_from_slice(&result.x[base..base + len]);
        }
    }
    Ok(PolySolution {
        rule: asm.extract_rule(&result.x),
        worst_case: asm.worst_case_value(&result.x),
        value: result.objective,
        v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFile {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<f64>>>,
}

/// Poly-affine coefficient entry; `kappa` is 1-based like every file index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaEntry {
    pub t: usize,
    pub s: usize,
    pub kappa: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyProblemFile {
    #[serde(rename = "N")]
    pub horizon: usize,
    pub mu: usize,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub stages: Vec<StageFile>,
    #[serde(rename = "A", default)]
    pub a: Vec<crate::model::io::BlockEntry>,
    #[serde(default)]
    pub rhs_poly: Vec<KappaEntry>,
    pub objective: ObjectiveFile,
}

/// Stored poly-affine rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyRuleFile {
    #[serde(rename = "N")]
    pub horizon: usize,
    pub mu: usize,
    pub n: Vec<usize>,
    pub nu: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_value: Option<f64>,
    pub v: Vec<KappaEntry>,
}

fn to_kappa(entries: Vec<CoefficientEntry>) -> Vec<KappaEntry> {
    entries
        .into_iter()
        .map(|e| KappaEntry {
            t: e.t,
            s: e.s,
            kappa: e.xi,
            values: e.values,
        })
        .collect()
}

fn from_kappa(entries: &[KappaEntry]) -> Vec<CoefficientEntry> {
    entries
        .iter()
        .map(|e| CoefficientEntry {
            t: e.t,
            s: e.s,
            xi: e.kappa.clone(),
            values: e.values.clone(),
        })
        .collect()
}

impl PolyProblemFile {
    pub fn into_problem(self) -> Result<PolyProblem> {
        if self.n.len() != self.horizon || self.m.len() != self.horizon || self.stages.len() != self.horizon {
            return Err(Error::DimensionMismatch(format!(
                "N = {} but n, m, stages have lengths {}, {}, {}",
                self.horizon,
                self.n.len(),
                self.m.len(),
                self.stages.len()
            )));
        }
        if self.mu == 0 {
            return Err(Error::InvalidProblem("mu must be >= 1".into()));
        }
        let stages = self
            .stages
            .into_iter()
            .enumerate()
            .map(|(t, s)| {
                PolytopeStage::with_basis(s.dim, s.vertices, s.basis).map_err(|e| match e {
                    Error::RankDeficient { dim, .. } => Error::RankDeficient { stage: t + 1, dim },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let rhs = table_from_entries(&nus(&stages), &self.m, self.mu, &from_kappa(&self.rhs_poly))?;
        let blocks = blocks_from_entries(&self.n, &self.m, &self.a)?;
        PolyProblem::new(stages, self.n, self.mu, blocks, rhs, self.objective.into_spec()?)
    }

    pub fn from_problem(p: &PolyProblem) -> Self {
        PolyProblemFile {
            horizon: p.stages.len(),
            mu: p.mu,
            n: p.n.clone(),
            m: p.m.clone(),
            stages: p
                .stages
                .iter()
                .map(|s| StageFile {
                    dim: s.dim,
                    vertices: s.vertices.clone(),
                    basis: s.basis.clone(),
                })
                .collect(),
            a: entries_from_blocks(p.blocks.iter().map(|b| (b.t, b.tau, &b.block))),
            rhs_poly: to_kappa(entries_from_table(&p.rhs, true)),
            objective: ObjectiveFile::from_spec(&p.objective),
        }
    }
}

impl PolyRuleFile {
    pub fn from_coefficients(v: &PolyAffineCoefficients, objective_value: Option<f64>) -> Self {
        PolyRuleFile {
            horizon: v.stages(),
            mu: v.depth(),
            n: v.widths().to_vec(),
            nu: v.radices().to_vec(),
            objective_value,
            v: to_kappa(entries_from_table(v, false)),
        }
    }

    pub fn into_coefficients(self) -> Result<PolyAffineCoefficients> {
        if self.n.len() != self.horizon || self.nu.len() != self.horizon {
            return Err(Error::DimensionMismatch("rule file shape does not match N".into()));
        }
        table_from_entries(&self.nu, &self.n, self.mu, &from_kappa(&self.v))
    }
}

pub fn read_poly_problem(path: impl AsRef<Path>) -> Result<PolyProblem> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str::<PolyProblemFile>(&text)?.into_problem()
}

pub fn write_poly_problem(path: impl AsRef<Path>, problem: &PolyProblem) -> Result<()> {
    let text = serde_json::to_string_pretty(&PolyProblemFile::from_problem(problem))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_poly_rule(path: impl AsRef<Path>, v: &PolyAffineCoefficients, value: Option<f64>) -> Result<()> {
    let text = serde_json::to_string_pretty(&PolyRuleFile::from_coefficients(v, value))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
