//! Smallest useful problem: two stages, a demand revealed at stage 1 and a
//! recourse decision at stage 2.
//!
//! ```bash
//! cargo run --example quickstart
//! ```

use cddr::model::{AdditiveRhs, ObjectiveSpec, ProblemSpec, SparseBlock, StageBlock};
use cddr::policy::{simulate, Scenarios, SimulationOptions};
use cddr::solve::{solve_problem, Backend};

fn main() -> cddr::Result<()> {
    // Stage 0 buys x0 cheaply before demand is known; stage 1 tops up with
    // x1 at a premium once demand ξ1 ∈ {2, 5} is revealed.
    //   x0 >= 0, x1 >= 0, x0 + x1 >= demand(ξ1)
    let mut rhs = AdditiveRhs::zeros(&[1, 2], &[1, 2], 1)?;
    rhs.set(1, 1, &[0], &[0.0, -2.0])?;
    rhs.set(1, 1, &[1], &[0.0, -5.0])?;
    let spec = ProblemSpec::new(
        vec![1, 1],
        vec![1, 2],
        vec![1, 2],
        1,
        vec![
            StageBlock { t: 0, tau: 0, block: SparseBlock::from_dense(&[vec![-1.0]])? },
            StageBlock { t: 1, tau: 0, block: SparseBlock::from_dense(&[vec![0.0], vec![-1.0]])? },
            StageBlock { t: 1, tau: 1, block: SparseBlock::from_dense(&[vec![-1.0], vec![-1.0]])? },
        ],
        rhs,
        ObjectiveSpec::Expected {
            costs: vec![vec![1.0], vec![1.5]],
            probabilities: vec![vec![1.0], vec![0.6, 0.4]],
        },
    )?;

    let sol = solve_problem(&spec, &Backend::default())?;
    println!("optimal expected cost {:.4} ({} simplex iterations)", sol.value, sol.iterations);
    for t in 0..spec.stages() {
        for xi in 0..spec.d()[t] {
            let mut traj = vec![0; spec.stages()];
            traj[t] = xi;
            println!("  x{t}(ξ{t}={xi}) = {:?}", sol.rule.evaluate(t, &traj)?);
        }
    }

    let report = simulate(&spec, &sol.rule, &Scenarios::Exhaustive, &SimulationOptions::default())?;
    println!("\nexhaustive simulation: mean {:.4}, feasible share {}", report.mean_cost, report.feasibility_rate);
    print!("{}", report.to_table());
    Ok(())
}
