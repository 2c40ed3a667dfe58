//! Hydro-thermal planning instances with periodic autoregressive inflows.
//!
//! Stage 0 is deterministic (`d_0 = 1`); the inflow noise `ζ_t` of every later
//! stage ranges over a finite support. Per stage and region the decisions are
//! hydro generation `h`, reservoir level `v`, unmet demand `r` and thermal
//! generation `w`, plus the slack `α` when the lower reservoir bound is relaxed.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AdditiveRhs, ObjectiveSpec, ProblemSpec, SparseBlock, StageBlock};
use crate::policy::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSupport {
    pub points: Vec<Vec<f64>>,
    pub probabilities: Vec<f64>,
}

/// `I_t = θ_t + η_t` with `η_t = Σ_j B_t^j η_{t−j} + C_t ζ_t` for `t >= 1`.
///
/// `lags`, `noise` and `supports` hold one entry per stochastic stage, so
/// index `t − 1` describes stage `t`. `history[k]` is the known `η_{−k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParModel {
    pub theta: Vec<Vec<f64>>,
    /// `lags[t−1][j−1]` is `B_t^j`.
    pub lags: Vec<Vec<Vec<Vec<f64>>>>,
    /// `noise[t−1]` is `C_t`.
    pub noise: Vec<Vec<Vec<f64>>>,
    pub supports: Vec<NoiseSupport>,
    pub history: Vec<Vec<f64>>,
}

fn dense(rows: &[Vec<f64>], k: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
        return Err(Error::DimensionMismatch(format!("{what} must be {k}x{k}")));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

fn vector(v: &[f64], k: usize, what: &str) -> Result<DVector<f64>> {
    if v.len() != k {
        return Err(Error::DimensionMismatch(format!("{what} must have length {k}")));
    }
    Ok(DVector::from_column_slice(v))
}

impl ParModel {
    pub fn stages(&self) -> usize {
        self.theta.len()
    }

    pub fn regions(&self) -> usize {
        self.theta.first().map_or(0, Vec::len)
    }
}

/// `I_t = ν_t + Σ_{s=1..t} R^t_s ζ_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineInflows {
    intercept: Vec<DVector<f64>>,
    // coefficient[t][s − 1] = R^t_s
    coefficient: Vec<Vec<DMatrix<f64>>>,
}

impl AffineInflows {
    pub fn stages(&self) -> usize {
        self.intercept.len()
    }

    pub fn intercept(&self, t: usize) -> &DVector<f64> {
        &self.intercept[t]
    }

    /// `R^t_s` for `1 <= s <= t`.
    pub fn coefficient(&self, t: usize, s: usize) -> &DMatrix<f64> {
        &self.coefficient[t][s - 1]
    }

    /// Inflow at stage `t`; `zeta[s]` is the noise of stage `s` (`zeta[0]` is ignored).
    pub fn evaluate(&self, t: usize, zeta: &[Vec<f64>]) -> DVector<f64> {
        let mut out = self.intercept[t].clone();
        for s in 1..=t {
            out += self.coefficient(t, s) * DVector::from_column_slice(&zeta[s]);
        }
        out
    }
}

/// Forward substitution of the autoregression into affine form.
pub fn unroll_par(model: &ParModel) -> Result<AffineInflows> {
    let n = model.stages();
    let k = model.regions();
    if n == 0 || k == 0 {
        return Err(Error::InvalidProblem("the inflow model needs at least one stage and region".into()));
    }
    if model.lags.len() != n - 1 || model.noise.len() != n - 1 || model.supports.len() != n - 1 {
        return Err(Error::DimensionMismatch(format!(
            "lags, noise and supports need {} entries, one per stochastic stage",
            n - 1
        )));
    }
    let needed = (1..n).map(|t| (model.lags[t - 1].len() + 1).saturating_sub(t)).max().unwrap_or(0).max(1);
    if model.history.len() < needed {
        return Err(Error::InsufficientHistory {
            needed,
            got: model.history.len(),
        });
    }
    let theta: Vec<DVector<f64>> = model.theta.iter().map(|v| vector(v, k, "theta")).collect::<Result<_>>()?;
    let history: Vec<DVector<f64>> = model.history.iter().map(|v| vector(v, k, "history")).collect::<Result<_>>()?;

    // η_t = c[t] + Σ_s r[t][s−1] ζ_s
    let mut c: Vec<DVector<f64>> = vec![history[0].clone()];
    let mut r: Vec<Vec<DMatrix<f64>>> = vec![vec![]];
    for t in 1..n {
        let mut ct = DVector::zeros(k);
        let mut rt = vec![DMatrix::zeros(k, k); t];
        for (j, b) in model.lags[t - 1].iter().enumerate() {
            let b = dense(b, k, "lag matrix")?;
            let j = j + 1;
            if j <= t {
                ct += &b * &c[t - j];
                for (s, m) in r[t - j].iter().enumerate() {
                    rt[s] += &b * m;
                }
            } else {
                ct += &b * &history[j - t];
            }
        }
        rt[t - 1] = dense(&model.noise[t - 1], k, "noise matrix")?;
        c.push(ct);
        r.push(rt);
    }
    Ok(AffineInflows {
        intercept: theta.iter().zip(&c).map(|(th, ct)| th + ct).collect(),
        coefficient: r,
    })
}

/// Physical data of the planning problem, one entry per stage where indexed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroParams {
    pub demand: Vec<Vec<f64>>,
    pub thermal_cost: Vec<Vec<f64>>,
    pub deficit_penalty: Vec<Vec<f64>>,
    /// Diagonal of `G_t`: the share of inflow reaching the reservoir.
    pub run_of_river: Vec<Vec<f64>>,
    pub v_min: Vec<Vec<f64>>,
    pub v_max: Vec<Vec<f64>>,
    pub h_max: Vec<Vec<f64>>,
    pub w_max: Vec<Vec<f64>>,
    pub v0: Vec<f64>,
    /// Final level must reach `rho · v0`.
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Penalty on relaxing the lower reservoir bound; `None` keeps it hard.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation_penalty: Option<Vec<Vec<f64>>>,
}

fn default_rho() -> f64 {
    0.8
}

impl HydroParams {
    pub fn stages(&self) -> usize {
        self.demand.len()
    }

    pub fn regions(&self) -> usize {
        self.v0.len()
    }

    pub fn relaxed(&self) -> bool {
        self.relaxation_penalty.is_some()
    }

    fn validate(&self) -> Result<()> {
        let (n, k) = (self.stages(), self.regions());
        if n == 0 || k == 0 {
            return Err(Error::InvalidProblem("at least one stage and one region are required".into()));
        }
        let mut fields: Vec<(&str, &Vec<Vec<f64>>)> = vec![
            ("demand", &self.demand),
            ("thermal_cost", &self.thermal_cost),
            ("deficit_penalty", &self.deficit_penalty),
            ("run_of_river", &self.run_of_river),
            ("v_min", &self.v_min),
            ("v_max", &self.v_max),
            ("h_max", &self.h_max),
            ("w_max", &self.w_max),
        ];
        if let Some(p) = &self.relaxation_penalty {
            fields.push(("relaxation_penalty", p));
        }
        for (name, f) in fields {
            if f.len() != n || f.iter().any(|v| v.len() != k) {
                return Err(Error::DimensionMismatch(format!("{name} must be {n} vectors of length {k}")));
            }
        }
        let all = |f: &Vec<Vec<f64>>, ok: &dyn Fn(f64) -> bool| f.iter().flatten().all(|&v| ok(v));
        if !all(&self.run_of_river, &|g| (0.0..=1.0).contains(&g)) {
            return Err(Error::InvalidProblem("run-of-river shares must lie in [0, 1]".into()));
        }
        for f in [&self.v_min, &self.v_max, &self.h_max, &self.w_max] {
            if !all(f, &|v| v >= 0.0) {
                return Err(Error::InvalidProblem("bounds must be nonnegative".into()));
            }
        }
        if self.v_min.iter().flatten().zip(self.v_max.iter().flatten()).any(|(lo, hi)| lo > hi) {
            return Err(Error::InvalidProblem("v_min exceeds v_max".into()));
        }
        if !self.rho.is_finite() || self.rho < 0.0 {
            return Err(Error::InvalidProblem("rho must be a nonnegative number".into()));
        }
        Ok(())
    }
}

/// Column offsets of the stage decision blocks.
pub const H: usize = 0;
pub const V: usize = 1;
pub const R: usize = 2;
pub const W: usize = 3;
pub const ALPHA: usize = 4;

/// Row blocks of a stage, in storage order.
pub const ROW_BLOCKS: [&str; 10] = [
    "water_balance",
    "demand",
    "v_upper",
    "v_lower",
    "h_upper",
    "h_lower",
    "w_upper",
    "w_lower",
    "r_lower",
    "alpha_lower",
];

/// The planning problem as a [`ProblemSpec`] with memory 1.
pub fn generate(params: &HydroParams, model: &ParModel) -> Result<ProblemSpec> {
    params.validate()?;
    let (n, k) = (params.stages(), params.regions());
    if model.stages() != n || model.regions() != k {
        return Err(Error::DimensionMismatch(format!(
            "inflow model has {} stages and {} regions, parameters {n} and {k}",
            model.stages(),
            model.regions()
        )));
    }
    let inflows = unroll_par(model)?;
    let relaxed = params.relaxed();
    let nb = if relaxed { 5 } else { 4 };
    let mb = if relaxed { 10 } else { 9 };
    let nt = nb * k;
    let mt = mb * k;

    let mut d = vec![1];
    for (s, sup) in model.supports.iter().enumerate() {
        if sup.points.is_empty() || sup.points.iter().any(|p| p.len() != k) {
            return Err(Error::DimensionMismatch(format!(
                "noise support of stage {} needs points of length {k}",
                s + 2
            )));
        }
        d.push(sup.points.len());
    }

    let mut diag = Vec::new();
    let mut push = |block: usize, var: usize, v: f64| {
        for i in 0..k {
            diag.push((block * k + i, var * k + i, v));
        }
    };
    push(0, H, 1.0);
    push(0, V, 1.0);
    push(1, H, -1.0);
    push(1, W, -1.0);
    push(1, R, -1.0);
    push(2, V, 1.0);
    push(3, V, -1.0);
    if relaxed {
        push(3, ALPHA, -1.0);
    }
    push(4, H, 1.0);
    push(5, H, -1.0);
    push(6, W, 1.0);
    push(7, W, -1.0);
    push(8, R, -1.0);
    if relaxed {
        push(9, ALPHA, -1.0);
    }
    let a_tt = SparseBlock::from_triplets(mt, nt, &diag)?;
    let coupling: Vec<(usize, usize, f64)> = (0..k).map(|i| (i, V * k + i, -1.0)).collect();
    let a_prev = SparseBlock::from_triplets(mt, nt, &coupling)?;
    let mut blocks = Vec::with_capacity(2 * n);
    for t in 0..n {
        blocks.push(StageBlock {
            t,
            tau: t,
            block: a_tt.clone(),
        });
        if t > 0 {
            blocks.push(StageBlock {
                t,
                tau: t - 1,
                block: a_prev.clone(),
            });
        }
    }

    let mut rhs = AdditiveRhs::zeros(&d, &vec![mt; n], 1)?;
    for t in 0..n {
        let g = &params.run_of_river[t];
        let nu = inflows.intercept(t);
        let base = rhs.coeff_mut(t, 0, 0);
        for i in 0..k {
            base[i] = g[i] * nu[i] + if t == 0 { params.v0[i] } else { 0.0 };
            base[k + i] = -params.demand[t][i] + (1.0 - g[i]) * nu[i];
            base[2 * k + i] = params.v_max[t][i];
            let floor = params.v_min[t][i];
            base[3 * k + i] = -if t + 1 == n { floor.max(params.rho * params.v0[i]) } else { floor };
            base[4 * k + i] = params.h_max[t][i];
            base[6 * k + i] = params.w_max[t][i];
        }
        for s in 1..=t {
            let rts = inflows.coefficient(t, s);
            for (xi, chi) in model.supports[s - 1].points.iter().enumerate() {
                let flow = rts * DVector::from_column_slice(chi);
                let beta = rhs.coeff_mut(t, s, xi);
                for i in 0..k {
                    beta[i] = g[i] * flow[i];
                    beta[k + i] = (1.0 - g[i]) * flow[i];
                }
            }
        }
    }

    let costs: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            let mut f = vec![0.0; nt];
            f[R * k..(R + 1) * k].copy_from_slice(&params.deficit_penalty[t]);
            f[W * k..(W + 1) * k].copy_from_slice(&params.thermal_cost[t]);
            if let Some(pen) = &params.relaxation_penalty {
                f[ALPHA * k..].copy_from_slice(&pen[t]);
            }
            f
        })
        .collect();
    let mut probabilities = vec![vec![1.0]];
    probabilities.extend(model.supports.iter().map(|s| s.probabilities.clone()));
    ProblemSpec::new(
        vec![nt; n],
        vec![mt; n],
        d,
        1,
        blocks,
        rhs,
        ObjectiveSpec::Expected { costs, probabilities },
    )
}

/// Parameters of [`default_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefaultShape {
    pub regions: usize,
    pub stages: usize,
    pub support: usize,
    pub seed: u64,
    pub relaxed: bool,
}

/// A reproducible instance that is feasible for every noise trajectory:
/// inflows stay positive, thermal capacity covers demand on its own and the
/// reservoirs can sit at `v0` throughout.
pub fn default_instance(shape: &DefaultShape) -> (HydroParams, ParModel) {
    let DefaultShape {
        regions: k,
        stages: n,
        support: d,
        seed,
        relaxed,
    } = *shape;
    let mut rng = SplitMix64::new(seed);
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * rng.next_f64();
    let mut per_stage = |lo: f64, hi: f64| -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..k).map(|_| uniform(lo, hi)).collect()).collect()
    };
    let demand = per_stage(40.0, 60.0);
    let thermal_cost = per_stage(1.0, 3.0);
    let deficit_penalty = per_stage(10.0, 20.0);
    let run_of_river = per_stage(0.6, 0.9);
    let h_max = per_stage(30.0, 50.0);
    let theta = per_stage(30.0, 50.0);
    let w_max: Vec<Vec<f64>> = demand.iter().map(|v| v.iter().map(|x| x + 10.0).collect()).collect();
    let params = HydroParams {
        demand,
        thermal_cost,
        relaxation_penalty: relaxed.then(|| deficit_penalty.iter().map(|v| v.iter().map(|x| 2.0 * x).collect()).collect()),
        deficit_penalty,
        run_of_river,
        v_min: vec![vec![10.0; k]; n],
        v_max: vec![vec![100.0; k]; n],
        h_max,
        w_max,
        v0: vec![50.0; k],
        rho: default_rho(),
    };

    // Lag-1 coefficients with row sums <= 0.5 and |C ζ| <= 0.2 θ <= 10 keep
    // |η| <= 20 < min θ, so inflows stay positive.
    let mut rng = SplitMix64::new(seed ^ 0x5DEE_CE66_D1CE_4E5B);
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * rng.next_f64();
    let mut lags = Vec::with_capacity(n.saturating_sub(1));
    let mut noise = Vec::with_capacity(n.saturating_sub(1));
    let mut supports = Vec::with_capacity(n.saturating_sub(1));
    for t in 1..n {
        let b: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| if i == j { uniform(0.0, 0.4) } else { uniform(0.0, 0.1 / k as f64) })
                    .collect()
            })
            .collect();
        lags.push(vec![b]);
        noise.push(
            (0..k)
                .map(|i| (0..k).map(|j| if i == j { 0.2 * theta[t][i] } else { 0.0 }).collect())
                .collect(),
        );
        supports.push(NoiseSupport {
            points: (0..d).map(|_| (0..k).map(|_| uniform(-1.0, 1.0)).collect()).collect(),
            probabilities: vec![1.0 / d as f64; d],
        });
    }
    let history = vec![(0..k).map(|_| uniform(-2.0, 2.0)).collect()];
    let model = ParModel {
        theta,
        lags,
        noise,
        supports,
        history,
    };
    (params, model)
}

/// Parameter file: the physical data and the inflow model side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroFile {
    pub params: HydroParams,
    pub model: ParModel,
}

pub fn read_hydro(path: impl AsRef<Path>) -> Result<HydroFile> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_hydro(path: impl AsRef<Path>, file: &HydroFile) -> Result<()> {
    let text = serde_json::to_string_pretty(file)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
