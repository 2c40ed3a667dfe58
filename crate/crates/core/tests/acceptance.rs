//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cddr::hydro::{self, DefaultShape, NoiseSupport, ParModel};
use cddr::lp::mps::{parse_mps, write_mps, LpNames};
use cddr::lp::{self, LpStatus, Relation, SolverOptions};
use cddr::model::{all_trajectories, eval_policy, AdditiveTable, ObjectiveSpec};
use cddr::oracle::{brute_force_all, feasibility_verdict, tree_value};
use cddr::policy::{expected_cost, simulate, Scenarios, SimulationOptions};
use cddr::polytopic::{eval_polyaffine, scenario_trajectory, solve_polytopic, v_to_u};
use cddr::reformulate::{build_discrete_lp, build_lp, count_sizes};
use cddr::solve::{solve_problem, Backend};
use common::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn feasibility_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = SolverOptions::default();
    let (mut feasible, mut checked) = (0, 0);
    for inst in 0..200 {
        let spec = random_instance(&mut rng);
        for draw in 0..5 {
            // every other draw is scaled toward zero so both verdicts occur
            let mut rule = random_rule(&mut rng, &spec);
            if draw % 2 == 1 {
                for t in 0..spec.stages() {
                    for s in 0..=t {
                        rule.block_mut(t, s).iter_mut().for_each(|v| *v *= 0.01);
                    }
                }
            }
            let v = feasibility_verdict(&spec, &rule, 0.0, &opts).map_err(|e| e.to_string())?;
            checked += 1;
            feasible += usize::from(v.brute_force_feasible);
            if !v.agree {
                return Err(format!("instance {inst} draw {draw}: lp {} vs brute force {}", v.lp_feasible, v.brute_force_feasible));
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(120) {
        return Err(format!("took {elapsed:.1?}"));
    }
    Ok(format!("{checked} rules agree ({feasible} feasible) in {elapsed:.1?}"))
}

fn dp_tightness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let opts = SolverOptions::default();
    let mut worst = 0.0f64;
    for inst in 0..50 {
        let spec = random_instance(&mut rng);
        let rule = random_rule(&mut rng, &spec);
        let asm = build_discrete_lp(&spec).map_err(|e| e.to_string())?;
        let (lp, roots) = asm.z_root_lp(&rule).map_err(|e| e.to_string())?;
        let r = lp::solve(&lp, &opts).map_err(|e| e.to_string())?;
        if r.status != LpStatus::Optimal {
            return Err(format!("instance {inst}: z-root LP is {:?}", r.status));
        }
        let bf = brute_force_all(&spec, &rule).map_err(|e| e.to_string())?;
        for (t, cols) in roots.iter().enumerate() {
            for (i, &c) in cols.iter().enumerate() {
                let gap = (r.x[c] - bf[t][i]).abs();
                worst = worst.max(gap);
                if gap > 1e-9 {
                    return Err(format!("instance {inst} stage {t} row {i}: {} vs {}", r.x[c], bf[t][i]));
                }
            }
        }
    }
    Ok(format!("max root gap {worst:.2e}"))
}

fn memory_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let backend = Backend::default();
    let mut worst = 0.0f64;
    for inst in 0..30 {
        let spec = covering_instance(&mut rng, 3, 2, 1);
        let tree = tree_value(&spec, &SolverOptions::default()).map_err(|e| e.to_string())?;
        let mut values = Vec::new();
        for mu in 1..=3 {
            let v = solve_problem(&spec.with_memory(mu).unwrap(), &backend).map_err(|e| e.to_string())?.value;
            if v < tree - 1e-7 * tree.abs().max(1.0) {
                return Err(format!("instance {inst} mu {mu}: {v} below tree value {tree}"));
            }
            values.push(v);
        }
        for w in values.windows(2) {
            if w[1] > w[0] + 1e-9 * w[0].abs().max(1.0) {
                return Err(format!("instance {inst}: values increase {values:?}"));
            }
        }
        let gap = (values[2] - tree).abs() / tree.abs();
        worst = worst.max(gap);
        if gap > 1e-7 {
            return Err(format!("instance {inst}: full memory {} vs tree {tree}", values[2]));
        }
    }
    Ok(format!("max full-memory gap {worst:.2e}"))
}

/// `20 (max m + max n) N² (max d)^μ`, with overflow mapped to infinity.
fn size_bound(m: &[usize], n: &[usize], d: &[usize], mu: usize) -> f64 {
    let mx = |v: &[usize]| *v.iter().max().unwrap() as f64;
    let stages = n.len() as f64;
    20.0 * (mx(m) + mx(n)) * stages * stages * mx(d).powi(mu as i32)
}

fn size_accounting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for shape in 0..100 {
        let mut spec = random_instance(&mut rng);
        if shape % 4 == 0 {
            let count = rng.gen_range(1..=3);
            let functionals = (0..count)
                .map(|_| spec.n().iter().map(|&k| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect())
                .collect();
            spec = spec.with_objective(ObjectiveSpec::WorstCase { functionals }).unwrap();
        }
        let sizes = count_sizes(&spec);
        let asm = build_lp(&spec).map_err(|e| e.to_string())?;
        let lp = asm.lp();
        let eq = lp.rows().iter().filter(|r| r.relation == Relation::Eq).count();
        if sizes != asm.sizes()
            || sizes.variables() != lp.n_cols()
            || sizes.constraints() != lp.n_rows()
            || sizes.n_eq != eq
        {
            return Err(format!("shape {shape}: {sizes:?} vs {} cols, {} rows, {eq} eq", lp.n_cols(), lp.n_rows()));
        }
        let total = (lp.n_cols() + lp.n_rows()) as f64;
        if total > size_bound(spec.m(), spec.n(), spec.d(), spec.mu()) {
            return Err(format!("shape {shape}: {total} exceeds the bound"));
        }
    }
    // large shapes, counted only
    let (n, m, d) = (vec![16; 12], vec![36; 12], vec![10; 12]);
    let mut largest = 0;
    for mu in 1..=3 {
        let spec = cddr::model::ProblemSpec::new(
            n.clone(),
            m.clone(),
            d.clone(),
            mu,
            vec![],
            cddr::model::AdditiveRhs::zeros(&d, &m, 1).unwrap(),
            ObjectiveSpec::Expected {
                costs: n.iter().map(|&k| vec![0.0; k]).collect(),
                probabilities: d.iter().map(|&k| vec![1.0 / k as f64; k]).collect(),
            },
        )
        .map_err(|e| e.to_string())?;
        let s = count_sizes(&spec);
        let total = s.variables() + s.constraints();
        largest = largest.max(total);
        if total as f64 > size_bound(&m, &n, &d, mu) {
            return Err(format!("N=12 mu={mu}: {total} exceeds the bound"));
        }
    }
    Ok(format!("100 shapes exact, largest counted total {largest}"))
}

fn polytopic_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let backend = Backend::default();
    let mut worst = 0.0f64;
    let mut exact = 0usize;
    for inst in 0..30 {
        let stages = rng.gen_range(1..=3);
        let mu = rng.gen_range(1..=2);
        let rhs_mu = rng.gen_range(1..=mu);
        let problem = random_poly_problem(&mut rng, stages, rhs_mu);
        let poly = problem.stages();
        let nu: Vec<usize> = poly.iter().map(|s| s.nu()).collect();
        let d: Vec<usize> = poly.iter().map(|s| s.vertex_count()).collect();

        let mut v = AdditiveTable::zeros(&nu, problem.n(), mu).unwrap();
        for t in 0..stages {
            for s in 0..=t {
                v.block_mut(t, s).iter_mut().for_each(|c| *c = rng.gen_range(-2.0..2.0));
            }
        }
        let u = v_to_u(&v, poly).map_err(|e| e.to_string())?;
        for xi in all_trajectories(&d) {
            let zeta = scenario_trajectory(poly, &xi).unwrap();
            for t in 0..stages {
                let a = eval_policy(&u, t, &xi).unwrap();
                let b = eval_polyaffine(&v, poly, t, &zeta).unwrap();
                if a.iter().zip(&b).any(|(x, y)| x.to_bits() != y.to_bits()) {
                    return Err(format!("instance {inst} stage {t} {xi:?}: {a:?} vs {b:?}"));
                }
                exact += 1;
            }
        }

        let sol = solve_polytopic(&problem, mu, &backend).map_err(|e| format!("instance {inst}: {e}"))?;
        for _ in 0..1000 {
            let zeta: Vec<Vec<f64>> = poly.iter().map(|st| interior_point(&mut rng, st)).collect();
            let excess = problem.max_excess(&sol.v, &zeta).unwrap();
            worst = worst.max(excess);
            if excess > 1e-8 {
                return Err(format!("instance {inst}: excess {excess:.3e} at {zeta:?}"));
            }
        }
    }
    Ok(format!("{exact} exact cross-evaluations, max interior excess {worst:.2e}"))
}

fn closed_form_objective() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let backend = Backend::default();
    let (mut sim_gap, mut lp_gap) = (0.0f64, 0.0f64);
    for inst in 0..30 {
        let stages = rng.gen_range(1..=4);
        let d = rng.gen_range(1..=3);
        let mu = rng.gen_range(1..=stages.min(3));
        let spec = covering_instance(&mut rng, stages, d, mu);
        let rule = random_rule(&mut rng, &spec);
        let closed = expected_cost(&spec, &rule).map_err(|e| e.to_string())?;
        let report = simulate(&spec, &rule, &Scenarios::Exhaustive, &SimulationOptions::default())
            .map_err(|e| e.to_string())?;
        let gap = (closed - report.mean_cost).abs() / closed.abs().max(f64::MIN_POSITIVE);
        sim_gap = sim_gap.max(gap);
        if gap > 1e-12 {
            return Err(format!("instance {inst}: closed form {closed} vs simulation {}", report.mean_cost));
        }
        let sol = solve_problem(&spec, &backend).map_err(|e| e.to_string())?;
        let at_opt = expected_cost(&spec, &sol.rule).map_err(|e| e.to_string())?;
        let gap = rel(at_opt, sol.value);
        lp_gap = lp_gap.max(gap);
        if gap > 1e-9 {
            return Err(format!("instance {inst}: closed form {at_opt} vs LP {}", sol.value));
        }
    }
    Ok(format!("simulation gap {sim_gap:.2e}, LP gap {lp_gap:.2e}"))
}

/// `I_t = θ_t + η_t`, stepping the autoregression forward one stage at a time.
fn direct_inflows(model: &ParModel, zeta: &[Vec<f64>]) -> Vec<DVector<f64>> {
    let mat = |rows: &Vec<Vec<f64>>| DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let mut eta: Vec<DVector<f64>> = vec![DVector::from_column_slice(&model.history[0])];
    for t in 1..model.stages() {
        let mut next = mat(&model.noise[t - 1]) * DVector::from_column_slice(&zeta[t]);
        for (j, b) in model.lags[t - 1].iter().enumerate() {
            let lag = j + 1;
            let past = if lag <= t {
                eta[t - lag].clone()
            } else {
                DVector::from_column_slice(&model.history[lag - t])
            };
            next += mat(b) * past;
        }
        eta.push(next);
    }
    eta.iter()
        .enumerate()
        .map(|(t, e)| DVector::from_column_slice(&model.theta[t]) + e)
        .collect()
}

fn hydro_instance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for relaxed in [false, true] {
        let (params, model) = hydro::default_instance(&DefaultShape {
            regions: 3,
            stages: 4,
            support: 2,
            seed: 11,
            relaxed,
        });
        let spec = hydro::generate(&params, &model).map_err(|e| e.to_string())?;
        let (nb, mb) = if relaxed { (5, 10) } else { (4, 9) };
        if spec.n().iter().any(|&v| v != nb * 3) || spec.m().iter().any(|&v| v != mb * 3) {
            return Err(format!("relaxed={relaxed}: n {:?}, m {:?}", spec.n(), spec.m()));
        }
    }

    let mut worst = 0.0f64;
    for seq in 0..100 {
        let k = rng.gen_range(1..=3);
        let n = rng.gen_range(2..=6);
        let lags = rng.gen_range(1..=3);
        let mut square = |scale: f64| -> Vec<Vec<f64>> {
            (0..k).map(|_| (0..k).map(|_| rng.gen_range(-scale..scale)).collect()).collect()
        };
        let model = ParModel {
            theta: (0..n).map(|_| (0..k).map(|_| 40.0).collect()).collect(),
            lags: (1..n).map(|_| (0..lags).map(|_| square(0.5)).collect()).collect(),
            noise: (1..n).map(|_| square(5.0)).collect(),
            supports: (1..n)
                .map(|_| NoiseSupport {
                    points: vec![vec![0.0; k]],
                    probabilities: vec![1.0],
                })
                .collect(),
            history: (0..=lags).map(|_| (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect(),
        };
        let zeta: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let affine = hydro::unroll_par(&model).map_err(|e| e.to_string())?;
        let direct = direct_inflows(&model, &zeta);
        for t in 0..n {
            let gap = (affine.evaluate(t, &zeta) - &direct[t]).amax();
            worst = worst.max(gap);
            if gap > 1e-12 {
                return Err(format!("sequence {seq} stage {t}: gap {gap:.3e}"));
            }
        }
    }

    let start = Instant::now();
    let (params, model) = hydro::default_instance(&DefaultShape {
        regions: 2,
        stages: 6,
        support: 3,
        seed: 0,
        relaxed: false,
    });
    let spec = hydro::generate(&params, &model).map_err(|e| e.to_string())?;
    let sol = solve_problem(&spec, &Backend::default()).map_err(|e| e.to_string())?;
    let report = simulate(&spec, &sol.rule, &Scenarios::Exhaustive, &SimulationOptions::default())
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if report.feasibility_rate != 1.0 || report.worst_excess() > 1e-7 {
        return Err(format!("violations: rate {}, excess {:.3e}", report.feasibility_rate, report.worst_excess()));
    }
    if elapsed > Duration::from_secs(60) {
        return Err(format!("default instance took {elapsed:.1?}"));
    }
    Ok(format!(
        "unroll gap {worst:.2e}; default instance value {:.4} in {elapsed:.2?}, {} scenarios clean",
        sol.value,
        report.scenarios.len()
    ))
}

fn reference_solver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = SolverOptions::default();
    let (mut infeasible, mut worst) = (0, 0.0f64);
    for inst in 0..100 {
        let p = random_small_lp(&mut rng);
        let truth = vertex_enumeration(&p);
        let r = lp::solve(&p.lp, &opts).map_err(|e| e.to_string())?;
        if r.status != status_of(truth) {
            return Err(format!("lp {inst}: {:?} vs oracle {truth:?}", r.status));
        }
        match truth {
            Some(v) => {
                worst = worst.max(rel(r.objective, v));
                if rel(r.objective, v) > 1e-7 {
                    return Err(format!("lp {inst}: {} vs oracle {v}", r.objective));
                }
            }
            None => infeasible += 1,
        }

        let text = write_mps(&p.lp, &LpNames::generic(&p.lp)).map_err(|e| e.to_string())?;
        let (back, _) = parse_mps(&text).map_err(|e| e.to_string())?;
        if back != p.lp {
            return Err(format!("lp {inst}: MPS round trip changed the model"));
        }

        let again = lp::solve(&p.lp, &opts).map_err(|e| e.to_string())?;
        if serde_json::to_string(&r).unwrap() != serde_json::to_string(&again).unwrap() {
            return Err(format!("lp {inst}: reruns differ"));
        }
    }

    // an assembled problem end to end
    let spec = covering_instance(&mut rng, 3, 2, 2);
    let asm = build_lp(&spec).map_err(|e| e.to_string())?;
    let text = write_mps(asm.lp(), &asm.names()).map_err(|e| e.to_string())?;
    let (back, names) = parse_mps(&text).map_err(|e| e.to_string())?;
    if &back != asm.lp() || names != asm.names() {
        return Err("assembled MPS round trip changed the model".into());
    }
    let a = solve_problem(&spec, &Backend::default()).map_err(|e| e.to_string())?;
    let b = solve_problem(&spec, &Backend::default()).map_err(|e| e.to_string())?;
    if serde_json::to_string(&a).unwrap() != serde_json::to_string(&b).unwrap() {
        return Err("assembled reruns differ".into());
    }
    Ok(format!("100 LPs match ({infeasible} infeasible), max gap {worst:.2e}; MPS exact; reruns identical"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("feasibility equivalence", feasibility_equivalence),
        ("dp tightness", dp_tightness),
        ("memory monotonicity and full-memory equality", memory_monotonicity),
        ("size accounting", size_accounting),
        ("polytopic reduction", polytopic_reduction),
        ("closed-form objective", closed_form_objective),
        ("hydro instance", hydro_instance),
        ("reference solver", reference_solver),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
