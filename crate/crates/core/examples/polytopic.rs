//! Uncertainty in a polytope rather than a finite set. Solving over the
//! vertices gives a poly-affine rule that stays feasible at every interior
//! point too.
//!
//! ```bash
//! cargo run --example polytopic
//! ```

use cddr::model::{ObjectiveSpec, SparseBlock, StageBlock};
use cddr::policy::SplitMix64;
use cddr::polytopic::{from_affine, solve_polytopic, PolyProblem, PolytopeStage};
use cddr::solve::Backend;

fn main() -> cddr::Result<()> {
    // stage 0 is deterministic, stage 1 draws demand ζ from a triangle
    let stages = vec![
        PolytopeStage::new(0, vec![vec![]])?,
        PolytopeStage::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])?,
    ];
    // x_t >= 0 and x_0 + x_1 >= 1 + 2ζ_1 + ζ_2
    let rhs = from_affine(
        &stages,
        &[vec![0.0], vec![0.0, -1.0]],
        &[(1, 1, vec![vec![0.0, 0.0], vec![-2.0, -1.0]])],
    )?;
    let problem = PolyProblem::new(
        stages,
        vec![1, 1],
        1,
        vec![
            StageBlock { t: 0, tau: 0, block: SparseBlock::from_dense(&[vec![-1.0]])? },
            StageBlock { t: 1, tau: 0, block: SparseBlock::from_dense(&[vec![0.0], vec![-1.0]])? },
            StageBlock { t: 1, tau: 1, block: SparseBlock::from_dense(&[vec![-1.0], vec![-1.0]])? },
        ],
        rhs,
        ObjectiveSpec::Expected {
            costs: vec![vec![1.0], vec![2.0]],
            probabilities: vec![vec![1.0], vec![1.0 / 3.0; 3]],
        },
    )?;

    let sol = solve_polytopic(&problem, 1, &Backend::default())?;
    println!("value over the vertices: {:.6}", sol.value);

    let mut rng = SplitMix64::new(5);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let (a, b) = (rng.next_f64(), rng.next_f64());
        let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
        worst = worst.max(problem.max_excess(&sol.v, &[vec![], vec![a, b]])?);
    }
    println!("largest violation over 10000 interior draws: {worst:.2e}");
    Ok(())
}
