use std::time::{Duration, Instant};

use cddr::hydro::{self, DefaultShape};
use cddr::lp::{self, LpStatus, SolverOptions};
use cddr::reformulate::build_lp;

#[test]
fn six_stage_hydro_with_memory_two_solves_within_a_minute() {
    let (params, model) = hydro::default_instance(&DefaultShape {
        regions: 2,
        stages: 6,
        support: 6,
        seed: 0,
        relaxed: false,
    });
    let spec = hydro::generate(&params, &model).unwrap().with_memory(2).unwrap();
    let asm = build_lp(&spec).unwrap();
    assert!(asm.lp().n_cols() > 1000);

    let start = Instant::now();
    let r = lp::solve(asm.lp(), &SolverOptions::default()).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(r.status, LpStatus::Optimal);
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");

    // independent residual check
    assert!(asm.lp().max_violation(&r.x) <= 1e-7);
    let value = asm.lp().objective_value(&r.x);
    assert!((value - r.objective).abs() <= 1e-9 * value.abs().max(1.0));
    eprintln!("{} columns, {} rows, {} iterations, {elapsed:.1?}", asm.lp().n_cols(), asm.lp().n_rows(), r.iterations);
}
