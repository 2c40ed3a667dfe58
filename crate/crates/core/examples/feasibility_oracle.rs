//! Check a hand-written rule two ways: by enumerating every trajectory and by
//! the linear system the reformulation builds around it.
//!
//! ```bash
//! cargo run --example feasibility_oracle
//! ```

use cddr::model::{AdditiveRhs, ObjectiveSpec, ProblemSpec, SparseBlock, StageBlock};
use cddr::oracle::feasibility_verdict;

fn main() -> cddr::Result<()> {
    // x_t <= 1 + ξ_t for three stages with ξ_t ∈ {0, 1, 2}, coupled by
    // x_t + x_{t−1} <= 2.5
    let n = 3;
    let mut blocks = Vec::new();
    for t in 0..n {
        blocks.push(StageBlock { t, tau: t, block: SparseBlock::from_dense(&[vec![1.0], vec![1.0]])? });
        if t > 0 {
            blocks.push(StageBlock { t, tau: t - 1, block: SparseBlock::from_dense(&[vec![0.0], vec![1.0]])? });
        }
    }
    let mut rhs = AdditiveRhs::zeros(&[3; 3], &[2; 3], 1)?;
    for t in 0..n {
        for xi in 0..3 {
            rhs.set(t, t, &[xi], &[1.0 + xi as f64, 2.5])?;
        }
    }
    let spec = ProblemSpec::new(
        vec![1; n],
        vec![2; n],
        vec![3; n],
        1,
        blocks,
        rhs,
        ObjectiveSpec::Expected { costs: vec![vec![-1.0]; n], probabilities: vec![vec![1.0 / 3.0; 3]; n] },
    )?;

    // x_t = min(1 + ξ_t, 2), cut back by a share of what the previous stage used
    for damping in [0.5, 2.0] {
        let mut rule = spec.zero_rule();
        for t in 0..n {
            for xi in 0..3 {
                let own = (1.0 + xi as f64).min(2.0);
                rule.set(t, t, &[xi], &[own])?;
                if t > 0 {
                    rule.set(t, t - 1, &[xi], &[-damping * own / 2.0])?;
                }
            }
        }
        let v = feasibility_verdict(&spec, &rule, 1e-9, &Default::default())?;
        let worst = v.brute_force_max.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "damping {damping}: enumeration says {}, reformulation says {}, worst row {worst:+.3}",
            if v.brute_force_feasible { "feasible" } else { "infeasible" },
            if v.lp_feasible { "feasible" } else { "infeasible" }
        );
        assert!(v.agree);
    }
    Ok(())
}
