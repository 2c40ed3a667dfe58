//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use cddr::lp::{LpStatus, Relation, SparseLp};
use cddr::model::{AdditiveRhs, ObjectiveSpec, ProblemSpec, RuleCoefficients, SparseBlock, StageBlock};
use cddr::polytopic::{PolyAffineCoefficients, PolyProblem, PolytopeStage};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn probabilities(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|p| p / total).collect()
}

pub fn dense_block(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64, density: f64) -> SparseBlock {
    let mut triplets = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.gen::<f64>() < density {
                triplets.push((i, j, rng.gen_range(lo..hi)));
            }
        }
    }
    SparseBlock::from_triplets(rows, cols, &triplets).unwrap()
}

pub fn random_table(rng: &mut ChaCha8Rng, d: &[usize], widths: &[usize], depth: usize, lo: f64, hi: f64) -> AdditiveRhs {
    let mut table = AdditiveRhs::zeros(d, widths, depth).unwrap();
    for t in 0..d.len() {
        for s in 0..=t {
            for v in table.block_mut(t, s) {
                *v = rng.gen_range(lo..hi);
            }
        }
    }
    table
}

/// Arbitrary signs everywhere; feasibility of a random rule is a coin flip.
pub fn random_instance(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let stages = rng.gen_range(1..=4);
    let mu = rng.gen_range(1..=3);
    let n: Vec<usize> = (0..stages).map(|_| rng.gen_range(1..=3)).collect();
    let m: Vec<usize> = (0..stages).map(|_| rng.gen_range(1..=3)).collect();
    let d: Vec<usize> = (0..stages).map(|_| rng.gen_range(1..=3)).collect();
    let mut blocks = Vec::new();
    for t in 0..stages {
        for tau in 0..=t {
            if rng.gen::<f64>() < 0.7 {
                blocks.push(StageBlock {
                    t,
                    tau,
                    block: dense_block(rng, m[t], n[tau], -1.0, 1.0, 0.8),
                });
            }
        }
    }
    let shift = rng.gen_range(0.0..2.0);
    let rhs_depth = rng.gen_range(1..=mu);
    let rhs = random_table(rng, &d, &m, rhs_depth, -1.0 + shift, 1.0 + shift);
    let objective = ObjectiveSpec::Expected {
        costs: n.iter().map(|&k| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
        probabilities: d.iter().map(|&k| probabilities(rng, k)).collect(),
    };
    ProblemSpec::new(n, m, d, mu, blocks, rhs, objective).unwrap()
}

pub fn random_rule(rng: &mut ChaCha8Rng, spec: &ProblemSpec) -> RuleCoefficients {
    let mut rule = spec.zero_rule();
    for t in 0..spec.stages() {
        for s in 0..=t {
            for v in rule.block_mut(t, s) {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
    }
    rule
}

/// Covering instance: `x_t >= 0` and `Σ_τ A^{tτ} x_τ >= β_t(ξ)` with
/// nonnegative `A` and positive costs, hence feasible and bounded for every μ.
pub fn covering_instance(rng: &mut ChaCha8Rng, stages: usize, d: usize, mu: usize) -> ProblemSpec {
    let n = vec![2; stages];
    let cover = 2;
    let m = vec![2 + cover; stages];
    let mut blocks = Vec::new();
    for t in 0..stages {
        let mut tr = vec![(0, 0, -1.0), (1, 1, -1.0)];
        for i in 0..cover {
            for j in 0..2 {
                tr.push((2 + i, j, -rng.gen_range(0.1..1.0)));
            }
        }
        blocks.push(StageBlock {
            t,
            tau: t,
            block: SparseBlock::from_triplets(m[t], n[t], &tr).unwrap(),
        });
        for tau in 0..t {
            if rng.gen::<f64>() < 0.5 {
                let tr: Vec<_> = (0..cover)
                    .flat_map(|i| (0..2).map(move |j| (2 + i, j)))
                    .map(|(i, j)| (i, j, -rng.gen_range(0.0..0.5)))
                    .collect();
                blocks.push(StageBlock {
                    t,
                    tau,
                    block: SparseBlock::from_triplets(m[t], n[tau], &tr).unwrap(),
                });
            }
        }
    }
    let d = vec![d; stages];
    let mut rhs = AdditiveRhs::zeros(&d, &m, 1).unwrap();
    for t in 0..stages {
        for s in 0..=t {
            let w = m[t];
            for (k, v) in rhs.block_mut(t, s).iter_mut().enumerate() {
                if k % w >= 2 {
                    *v = -rng.gen_range(0.0..2.0);
                }
            }
        }
    }
    let objective = ObjectiveSpec::Expected {
        costs: (0..stages).map(|_| vec![rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)]).collect(),
        probabilities: d.iter().map(|&k| probabilities(rng, k)).collect(),
    };
    ProblemSpec::new(n, m, d, mu, blocks, rhs, objective).unwrap()
}

/// A polytope of dimension `dim` with `dim + 1 + extra` points that affinely
/// span the space.
pub fn random_polytope(rng: &mut ChaCha8Rng, dim: usize, extra: usize) -> PolytopeStage {
    loop {
        let count = if dim == 0 { 1 + extra } else { dim + 1 + extra };
        let pts: Vec<Vec<f64>> = (0..count).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        if let Ok(st) = PolytopeStage::new(dim, pts) {
            return st;
        }
    }
}

/// Covering structure over polytopic stages with a random poly-affine rhs.
pub fn random_poly_problem(rng: &mut ChaCha8Rng, stages: usize, rhs_mu: usize) -> PolyProblem {
    let poly: Vec<PolytopeStage> = (0..stages)
        .map(|_| {
            let dim = rng.gen_range(0..=2);
            let extra = rng.gen_range(0..=1);
            random_polytope(rng, dim, extra)
        })
        .collect();
    let nu: Vec<usize> = poly.iter().map(PolytopeStage::nu).collect();
    let n = vec![2; stages];
    let m = vec![4; stages];
    let mut blocks = Vec::new();
    for t in 0..stages {
        let mut tr = vec![(0, 0, -1.0), (1, 1, -1.0)];
        for i in 2..4 {
            for j in 0..2 {
                tr.push((i, j, -rng.gen_range(0.2..1.0)));
            }
        }
        blocks.push(StageBlock {
            t,
            tau: t,
            block: SparseBlock::from_triplets(4, 2, &tr).unwrap(),
        });
        if t > 0 {
            let tr: Vec<_> = (2..4).map(|i| (i, 0, rng.gen_range(-0.3..0.3))).collect();
            blocks.push(StageBlock {
                t,
                tau: t - 1,
                block: SparseBlock::from_triplets(4, 2, &tr).unwrap(),
            });
        }
    }
    let mut rhs: PolyAffineCoefficients = AdditiveRhs::zeros(&nu, &m, rhs_mu).unwrap();
    for t in 0..stages {
        for s in 0..=t {
            for (k, v) in rhs.block_mut(t, s).iter_mut().enumerate() {
                if k % 4 >= 2 {
                    *v = rng.gen_range(-2.0..1.0);
                }
            }
        }
    }
    let d: Vec<usize> = poly.iter().map(PolytopeStage::vertex_count).collect();
    let objective = ObjectiveSpec::Expected {
        costs: (0..stages).map(|_| vec![rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)]).collect(),
        probabilities: d.iter().map(|&k| probabilities(rng, k)).collect(),
    };
    PolyProblem::new(poly, n, rhs_mu, blocks, rhs, objective).unwrap()
}

/// A random point of the convex hull of `stage`'s vertices.
pub fn interior_point(rng: &mut ChaCha8Rng, stage: &PolytopeStage) -> Vec<f64> {
    let w: Vec<f64> = stage.vertices().iter().map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
    let total: f64 = w.iter().sum();
    (0..stage.dim())
        .map(|i| stage.vertices().iter().zip(&w).map(|(v, wk)| v[i] * wk / total).sum())
        .collect()
}

/// Small LP `min cᵀx` over rows `Ax (<=|=) b` and finite boxes on every column.
pub struct SmallLp {
    pub lp: SparseLp,
    pub a: Vec<Vec<f64>>,
    pub rel: Vec<Relation>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

pub fn random_small_lp(rng: &mut ChaCha8Rng) -> SmallLp {
    let n = rng.gen_range(1..=5);
    let m = rng.gen_range(1..=6);
    let lo: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 0.0 } else { -rng.gen_range(1.0..5.0) }).collect();
    let hi: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..5.0)).collect();
    // rows built around a box point so most instances are feasible
    let x0: Vec<f64> = (0..n).map(|j| rng.gen_range(lo[j]..hi[j])).collect();
    let mut a = Vec::new();
    let mut rel = Vec::new();
    let mut b = Vec::new();
    for _ in 0..m {
        let row: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < 0.7 { rng.gen_range(-3.0..3.0) } else { 0.0 })
            .collect();
        let act: f64 = row.iter().zip(&x0).map(|(p, q)| p * q).sum();
        if rng.gen::<f64>() < 0.2 {
            rel.push(Relation::Eq);
            b.push(act);
        } else {
            rel.push(Relation::Le);
            b.push(act + rng.gen_range(-1.0..2.0));
        }
        a.push(row);
    }
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut lp = SparseLp::new(n);
    for j in 0..n {
        lp.set_cost(j, c[j]);
        lp.set_bounds(j, lo[j], hi[j]).unwrap();
    }
    for i in 0..m {
        lp.add_row(a[i].iter().copied().enumerate().collect(), rel[i], b[i]).unwrap();
    }
    SmallLp { lp, a, rel, b, c, lo, hi }
}

/// Brute-force optimum over all basic solutions: every choice of `n` active
/// constraints among rows and bounds, solved densely and filtered for
/// feasibility. `None` means infeasible.
pub fn vertex_enumeration(p: &SmallLp) -> Option<f64> {
    let n = p.c.len();
    let mut cons: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for i in 0..p.a.len() {
        cons.push((p.a[i].clone(), p.b[i], p.rel[i] == Relation::Eq));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cons.push((e.clone(), p.hi[j], false));
        cons.push((e.iter().map(|v| -v).collect(), -p.lo[j], false));
    }
    let eqs: Vec<usize> = (0..cons.len()).filter(|&k| cons[k].2).collect();
    let ineqs: Vec<usize> = (0..cons.len()).filter(|&k| !cons[k].2).collect();
    if eqs.len() > n {
        // over-determined: still enumerate subsets that include as many as fit
    }
    let feasible = |x: &DVector<f64>| {
        cons.iter().all(|(row, rhs, eq)| {
            let act: f64 = row.iter().zip(x.iter()).map(|(a, v)| a * v).sum();
            if *eq {
                (act - rhs).abs() <= 1e-9 * (1.0 + rhs.abs())
            } else {
                act <= rhs + 1e-9 * (1.0 + rhs.abs())
            }
        })
    };
    let mut best: Option<f64> = None;
    let all: Vec<usize> = eqs.iter().chain(&ineqs).copied().collect();
    let mut choose = vec![0usize; n];
    fn subsets(k: usize, start: usize, len: usize, cur: &mut Vec<usize>, out: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            out(cur);
            return;
        }
        for i in start..len {
            cur.push(i);
            subsets(k, i + 1, len, cur, out);
            cur.pop();
        }
    }
    let mut cur = Vec::new();
    subsets(n, 0, all.len(), &mut cur, &mut |sel| {
        for (k, &s) in sel.iter().enumerate() {
            choose[k] = all[s];
        }
        let mat = DMatrix::from_fn(n, n, |r, c| cons[choose[r]].0[c]);
        let rhs = DVector::from_fn(n, |r, _| cons[choose[r]].1);
        if let Some(x) = mat.lu().solve(&rhs) {
            if x.iter().all(|v| v.is_finite()) && feasible(&x) {
                let val: f64 = p.c.iter().zip(x.iter()).map(|(c, v)| c * v).sum();
                if best.is_none_or(|b| val < b) {
                    best = Some(val);
                }
            }
        }
    });
    best
}

pub fn status_of(value: Option<f64>) -> LpStatus {
    if value.is_some() {
        LpStatus::Optimal
    } else {
        LpStatus::Infeasible
    }
}
