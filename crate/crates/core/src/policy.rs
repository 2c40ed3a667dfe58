//! Policy evaluation, Monte Carlo simulation and the closed-form expected cost.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{all_trajectories, ObjectiveSpec, ProblemSpec, RuleCoefficients, WeightedScenario};

/// SplitMix64 (Steele, Lea and Flood). Documented so other implementations
/// can regenerate identical scenario sets from a seed.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn from a probability vector by inverting its CDF.
    pub fn sample(&mut self, probabilities: &[f64]) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        for (k, &p) in probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Which trajectories to simulate.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenarios {
    Explicit(Vec<WeightedScenario>),
    /// Every trajectory, weighted by its probability under the stage
    /// marginals (uniformly if the objective has none).
    Exhaustive,
    /// `count` i.i.d. draws from the stage marginals with unit weights.
    Sampled { count: usize, seed: u64 },
}

/// Largest exhaustive scenario set [`simulate`] will enumerate.
pub const MAX_EXHAUSTIVE: u128 = 1_000_000;

impl Scenarios {
    pub fn materialize(&self, spec: &ProblemSpec) -> Result<Vec<WeightedScenario>> {
        match self {
            Scenarios::Explicit(list) => {
                for sc in list {
                    if sc.xi.len() != spec.stages() || sc.xi.iter().zip(spec.d()).any(|(&v, &r)| v >= r) {
                        return Err(Error::IndexOutOfRange(format!(
                            "scenario {:?} is not a trajectory of this problem",
                            sc.xi
                        )));
                    }
                }
                Ok(list.clone())
            }
            Scenarios::Exhaustive => {
                let count = spec.trajectory_count();
                if count > MAX_EXHAUSTIVE {
                    return Err(Error::SizeGuard {
                        what: "exhaustive scenarios",
                        size: count,
                        limit: MAX_EXHAUSTIVE,
                    });
                }
                let probs = spec.objective().probabilities();
                Ok(all_trajectories(spec.d())
                    .map(|xi| {
                        let weight = match probs {
                            Some(p) => xi.iter().enumerate().map(|(t, &v)| p[t][v]).product(),
                            None => 1.0 / count as f64,
                        };
                        WeightedScenario { xi, weight }
                    })
                    .collect())
            }
            Scenarios::Sampled { count, seed } => {
                let probs = spec.objective().probabilities().ok_or_else(|| {
                    Error::UnsupportedObjective("sampling needs stage marginals (expected objective)")
                })?;
                let mut rng = SplitMix64::new(*seed);
                Ok((0..*count)
                    .map(|_| WeightedScenario {
                        xi: probs.iter().map(|p| rng.sample(p)).collect(),
                        weight: 1.0,
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    /// Absolute excess above which a row counts as violated.
    pub tolerance: f64,
    /// Keep per-stage decisions for every scenario.
    pub traces: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            tolerance: 1e-7,
            traces: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenarios: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
    pub costs: Vec<f64>,
    /// Weighted mean; the plain arithmetic mean when all weights are equal.
    pub mean_cost: f64,
    pub std_cost: f64,
    /// `mean_violation[t][i]`: weighted mean of the relative violation of row
    /// `i` at stage `t`.
    pub mean_violation: Vec<Vec<f64>>,
    /// Largest absolute excess of each row over all scenarios.
    pub max_excess: Vec<Vec<f64>>,
    /// Weight share of scenarios with every excess within tolerance.
    pub feasibility_rate: f64,
    pub tolerance: f64,
    pub traces: Option<Vec<Vec<Vec<f64>>>>,
}

/// Decisions `x_0..x_{N-1}` of `rule` along a trajectory.
pub fn controls(rule: &RuleCoefficients, xi: &[usize]) -> Result<Vec<Vec<f64>>> {
    (0..rule.stages()).map(|t| rule.evaluate(t, xi)).collect()
}

/// `max(0, (lhs − rhs)/|rhs|)`, or the absolute excess when `rhs = 0`.
pub fn relative_violation(lhs: f64, rhs: f64) -> f64 {
    let excess = lhs - rhs;
    if rhs != 0.0 {
        (excess / rhs.abs()).max(0.0)
    } else {
        excess.max(0.0)
    }
}

pub fn simulate(
    spec: &ProblemSpec,
    rule: &RuleCoefficients,
    scenarios: &Scenarios,
    options: &SimulationOptions,
) -> Result<SimulationReport> {
    if rule.radices() != spec.d() || rule.widths() != spec.n() {
        return Err(Error::DimensionMismatch("rule shape does not match the problem".into()));
    }
    let list = scenarios.materialize(spec)?;
    let stages = spec.stages();
    let mut viol_acc: Vec<Vec<Compensated>> = spec.m().iter().map(|&m| vec![Compensated::default(); m]).collect();
    let mut max_excess: Vec<Vec<f64>> = spec.m().iter().map(|&m| vec![0.0; m]).collect();
    let mut costs = Vec::with_capacity(list.len());
    let mut traces = options.traces.then(Vec::new);
    let mut feasible_weight = Compensated::default();

    for sc in &list {
        let x = controls(rule, &sc.xi)?;
        costs.push(spec.objective().stage_cost(&x));
        let mut ok = true;
        for t in 0..stages {
            let lhs = spec.lhs(t, &x);
            let rhs = spec.rhs().evaluate(t, &sc.xi)?;
            for i in 0..spec.m()[t] {
                let excess = lhs[i] - rhs[i];
                if excess > options.tolerance {
                    ok = false;
                }
                max_excess[t][i] = max_excess[t][i].max(excess);
                viol_acc[t][i].add(sc.weight * relative_violation(lhs[i], rhs[i]));
            }
        }
        if ok {
            feasible_weight.add(sc.weight);
        }
        if let Some(tr) = traces.as_mut() {
            tr.push(x);
        }
    }

    let mut total_weight = Compensated::default();
    let mut weighted_cost = Compensated::default();
    for (c, sc) in costs.iter().zip(&list) {
        total_weight.add(sc.weight);
        weighted_cost.add(sc.weight * c);
    }
    let total = total_weight.value();
    let norm = if total > 0.0 { total } else { 1.0 };
    let mean_cost = weighted_cost.value() / norm;
    let mut spread = Compensated::default();
    for (c, sc) in costs.iter().zip(&list) {
        spread.add(sc.weight * (c - mean_cost) * (c - mean_cost));
    }
    Ok(SimulationReport {
        scenarios: list.iter().map(|sc| sc.xi.clone()).collect(),
        weights: list.iter().map(|sc| sc.weight).collect(),
        costs,
        mean_cost,
        std_cost: (spread.value() / norm).max(0.0).sqrt(),
        mean_violation: viol_acc
            .iter()
            .map(|row| row.iter().map(|a| a.value() / norm).collect())
            .collect(),
        max_excess,
        feasibility_rate: feasible_weight.value() / norm,
        tolerance: options.tolerance,
        traces,
    })
}

impl SimulationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Largest mean relative violation over all rows.
    pub fn worst_mean_violation(&self) -> f64 {
        self.mean_violation.iter().flatten().fold(0.0, |a, &b| a.max(b))
    }

    /// Largest absolute excess over all rows (0 when nothing is violated).
    pub fn worst_excess(&self) -> f64 {
        self.max_excess.iter().flatten().fold(0.0, |a, &b| a.max(b))
    }

    /// Fixed-width summary; only rows violated beyond the tolerance are listed.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<28}{:>16}", "scenarios", self.costs.len());
        let _ = writeln!(out, "{:<28}{:>16.6}", "mean cost", self.mean_cost);
        let _ = writeln!(out, "{:<28}{:>16.6}", "std cost", self.std_cost);
        let _ = writeln!(out, "{:<28}{:>16.4}", "feasibility rate", self.feasibility_rate);
        let _ = writeln!(out, "{:<28}{:>16.3e}", "max mean rel. violation", self.worst_mean_violation());
        let _ = writeln!(out, "{:<28}{:>16.3e}", "max abs. excess", self.worst_excess());
        let rows: Vec<(usize, usize, f64, f64)> = self
            .mean_violation
            .iter()
            .enumerate()
            .flat_map(|(t, r)| r.iter().enumerate().map(move |(i, &v)| (t, i, v)))
            .map(|(t, i, v)| (t, i, v, self.max_excess[t][i]))
            .filter(|&(_, _, _, e)| e > self.tolerance)
            .collect();
        if !rows.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "{:>6}{:>6}{:>18}{:>14}", "stage", "row", "mean rel. viol.", "max excess");
            for (t, i, v, e) in rows {
                let _ = writeln!(out, "{:>6}{:>6}{:>18.6e}{:>14.6e}", t + 1, i + 1, v, e);
            }
        }
        out
    }
}

/// Closed-form `Σ_t f_tᵀ Σ_{s<=t} Σ_ξ P(ξ) u^t_{sξ}` for an expected-cost
/// objective with independent stage marginals.
pub fn expected_cost(spec: &ProblemSpec, rule: &RuleCoefficients) -> Result<f64> {
    let ObjectiveSpec::Expected {
        costs,
        probabilities,
    } = spec.objective()
    else {
        return Err(Error::UnsupportedObjective(spec.objective().name()));
    };
    if rule.radices() != spec.d() || rule.widths() != spec.n() {
        return Err(Error::DimensionMismatch("rule shape does not match the problem".into()));
    }
    let mut total = Compensated::default();
    for t in 0..spec.stages() {
        for s in 0..=t {
            let space = rule.space(s);
            for xi in 0..space.size() {
                let tuple = space.unindex(xi)?;
                let p: f64 = tuple
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| space.stage_of(*k) >= 0)
                    .map(|(k, &v)| probabilities[space.stage_of(k) as usize][v])
                    .product();
                if p == 0.0 {
                    continue;
                }
                let u = rule.coeff(t, s, xi);
                let dot: f64 = costs[t].iter().zip(u).map(|(f, v)| f * v).sum();
                total.add(p * dot);
            }
        }
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AdditiveRhs, SparseBlock, StageBlock};

    #[test]
    fn splitmix_reference_values() {
        // first outputs for seed 1234567, as published with the generator
        let mut rng = SplitMix64::new(1234567);
        assert_eq!(rng.next_u64(), 6457827717110365317);
        assert_eq!(rng.next_u64(), 3203168211198807973);
        assert_eq!(rng.next_u64(), 9817491932198370423);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut c = Compensated::default();
        for v in [1.0, 1e100, 1.0, -1e100] {
            c.add(v);
        }
        assert_eq!(c.value(), 2.0);
    }

    fn forced() -> ProblemSpec {
        let mut rhs = AdditiveRhs::zeros(&[2], &[1], 1).unwrap();
        rhs.set(0, 0, &[0], &[-1.0]).unwrap();
        rhs.set(0, 0, &[1], &[-2.0]).unwrap();
        ProblemSpec::new(
            vec![1],
            vec![1],
            vec![2],
            1,
            vec![StageBlock {
                t: 0,
                tau: 0,
                block: SparseBlock::from_dense(&[vec![-1.0]]).unwrap(),
            }],
            rhs,
            ObjectiveSpec::Expected {
                costs: vec![vec![1.0]],
                probabilities: vec![vec![0.5, 0.5]],
            },
        )
        .unwrap()
    }

    #[test]
    fn forced_rule_simulation() {
        let spec = forced();
        let mut rule = spec.zero_rule();
        rule.coeff_mut(0, 0, 0)[0] = 1.0;
        rule.coeff_mut(0, 0, 1)[0] = 2.0;
        let r = simulate(&spec, &rule, &Scenarios::Exhaustive, &Default::default()).unwrap();
        assert_eq!(r.mean_cost, 1.5);
        assert_eq!(r.worst_excess(), 0.0);
        assert_eq!(r.feasibility_rate, 1.0);
        assert_eq!(expected_cost(&spec, &rule).unwrap(), 1.5);

        // the zero rule violates −x ≤ −β by β, relative violation 1
        let r = simulate(&spec, &spec.zero_rule(), &Scenarios::Exhaustive, &Default::default()).unwrap();
        assert_eq!(r.mean_violation[0][0], 1.0);
        assert_eq!(r.feasibility_rate, 0.0);
        assert!(r.to_table().contains("mean rel. viol."));
    }

    #[test]
    fn zero_problem_has_zero_cost_and_violation() {
        let rhs = AdditiveRhs::zeros(&[2, 3], &[1, 2], 1).unwrap();
        let spec = ProblemSpec::new(
            vec![2, 1],
            vec![1, 2],
            vec![2, 3],
            1,
            vec![],
            rhs,
            ObjectiveSpec::Expected {
                costs: vec![vec![1.0, 2.0], vec![3.0]],
                probabilities: vec![vec![0.5, 0.5], vec![0.2, 0.3, 0.5]],
            },
        )
        .unwrap();
        let r = simulate(
            &spec,
            &spec.zero_rule(),
            &Scenarios::Sampled { count: 50, seed: 9 },
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.mean_cost, 0.0);
        assert_eq!(r.worst_mean_violation(), 0.0);
        assert_eq!(r.costs.len(), 50);
    }

    #[test]
    fn sampling_is_reproducible_and_needs_marginals() {
        let spec = forced();
        let a = Scenarios::Sampled { count: 20, seed: 3 }.materialize(&spec).unwrap();
        let b = Scenarios::Sampled { count: 20, seed: 3 }.materialize(&spec).unwrap();
        assert_eq!(a, b);
        let wc = spec
            .with_objective(ObjectiveSpec::WorstCase {
                functionals: vec![vec![vec![1.0]]],
            })
            .unwrap();
        assert!(Scenarios::Sampled { count: 1, seed: 0 }.materialize(&wc).is_err());
        assert!(expected_cost(&wc, &wc.zero_rule()).is_err());
    }

    #[test]
    fn relative_violation_falls_back_to_absolute() {
        assert_eq!(relative_violation(3.0, 2.0), 0.5);
        assert_eq!(relative_violation(-1.0, -2.0), 0.5);
        assert_eq!(relative_violation(0.25, 0.0), 0.25);
        assert_eq!(relative_violation(-0.25, 0.0), 0.0);
    }
}
