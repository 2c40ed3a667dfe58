//! Longer memory buys a better rule. At full memory the rule is as good as the
//! scenario-tree optimum.
//!
//! ```bash
//! cargo run --release --example memory_sweep
//! ```

use cddr::model::{AdditiveRhs, ObjectiveSpec, ProblemSpec, SparseBlock, StageBlock};
use cddr::oracle::tree_value;
use cddr::reformulate::count_sizes;
use cddr::solve::{solve_problem, Backend};

/// Inventory over `n` periods. Stock carries over, demand is `4 ± 2` and the
/// per-unit order cost rises over time, so ordering early pays off only when
/// the rule remembers what happened.
fn inventory(n: usize) -> cddr::Result<ProblemSpec> {
    // x_t = (order_t, stock_t); rows: −order <= 0, −stock <= 0,
    // stock_t − stock_{t−1} − order_t <= −demand_t, stock_t − stock_{t−1} − order_t >= −demand_t
    let own = SparseBlock::from_dense(&[
        vec![-1.0, 0.0],
        vec![0.0, -1.0],
        vec![-1.0, 1.0],
        vec![1.0, -1.0],
    ])?;
    let carry = SparseBlock::from_dense(&[vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, -1.0], vec![0.0, 1.0]])?;
    let mut blocks = Vec::new();
    for t in 0..n {
        blocks.push(StageBlock { t, tau: t, block: own.clone() });
        if t > 0 {
            blocks.push(StageBlock { t, tau: t - 1, block: carry.clone() });
        }
    }
    let d = vec![2; n];
    let mut rhs = AdditiveRhs::zeros(&d, &vec![4; n], 1)?;
    for t in 0..n {
        for (xi, demand) in [2.0, 6.0].into_iter().enumerate() {
            rhs.set(t, t, &[xi], &[0.0, 0.0, -demand, demand])?;
        }
    }
    let costs = (0..n).map(|t| vec![1.0 + 0.5 * t as f64, 0.1]).collect();
    ProblemSpec::new(
        vec![2; n],
        vec![4; n],
        d,
        1,
        blocks,
        rhs,
        ObjectiveSpec::Expected { costs, probabilities: vec![vec![0.5, 0.5]; n] },
    )
}

fn main() -> cddr::Result<()> {
    let spec = inventory(4)?;
    let tree = tree_value(&spec, &Default::default())?;
    println!("scenario tree optimum: {tree:.6}\n");
    println!("{:>3} {:>12} {:>10} {:>10}", "mu", "value", "gap", "columns");
    for mu in 1..=spec.stages() {
        let spec = spec.with_memory(mu)?;
        let sol = solve_problem(&spec, &Backend::default())?;
        let gap = (sol.value - tree) / tree.abs();
        println!("{mu:>3} {:>12.6} {gap:>10.2e} {:>10}", sol.value, count_sizes(&spec).variables());
    }
    Ok(())
}
