//! Minimize the worst outcome instead of the average and compare the two rules.
//!
//! ```bash
//! cargo run --example worst_case
//! ```

use cddr::model::{AdditiveRhs, ObjectiveSpec, ProblemSpec, SparseBlock, StageBlock};
use cddr::policy::{simulate, Scenarios, SimulationOptions};
use cddr::solve::{solve_problem, Backend};

fn main() -> cddr::Result<()> {
    // Cover a demand of 1, 3 or 8 either in advance (x0, cost 2) or late
    // (x1, cost 5). The rare high demand drives the worst case.
    let mut rhs = AdditiveRhs::zeros(&[1, 3], &[1, 2], 1)?;
    for (xi, demand) in [1.0, 3.0, 8.0].into_iter().enumerate() {
        rhs.set(1, 1, &[xi], &[0.0, -demand])?;
    }
    let blocks = vec![
        StageBlock { t: 0, tau: 0, block: SparseBlock::from_dense(&[vec![-1.0]])? },
        StageBlock { t: 1, tau: 0, block: SparseBlock::from_dense(&[vec![0.0], vec![-1.0]])? },
        StageBlock { t: 1, tau: 1, block: SparseBlock::from_dense(&[vec![-1.0], vec![-1.0]])? },
    ];
    let costs = vec![vec![2.0], vec![5.0]];
    let expected = ProblemSpec::new(
        vec![1, 1],
        vec![1, 2],
        vec![1, 3],
        1,
        blocks,
        rhs,
        ObjectiveSpec::Expected { costs: costs.clone(), probabilities: vec![vec![1.0], vec![0.5, 0.4, 0.1]] },
    )?;
    let robust = expected.with_objective(ObjectiveSpec::WorstCase { functionals: vec![costs] })?;

    for (name, spec) in [("expected", &expected), ("worst case", &robust)] {
        let sol = solve_problem(spec, &Backend::default())?;
        let report = simulate(&expected, &sol.rule, &Scenarios::Exhaustive, &SimulationOptions::default())?;
        let worst = report.costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{name:>10}: x0 = {:.2}, mean cost {:.3}, worst cost {worst:.3}",
            sol.rule.evaluate(0, &[0, 0])?[0],
            report.mean_cost
        );
        if let Some(w) = sol.worst_case {
            println!("{:>10}  epigraph value {w:.3}", "");
        }
    }
    Ok(())
}
