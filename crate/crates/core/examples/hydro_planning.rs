//! Reservoir planning with autoregressive inflows: generate the default
//! instance, solve it and check the rule on every inflow path.
//!
//! ```bash
//! cargo run --release --example hydro_planning -- [regions] [stages] [support]
//! ```

use cddr::hydro::{self, DefaultShape};
use cddr::policy::{simulate, Scenarios, SimulationOptions};
use cddr::reformulate::count_sizes;
use cddr::solve::{solve_problem, Backend};

fn arg(k: usize, default: usize) -> usize {
    std::env::args().nth(k).and_then(|a| a.parse().ok()).unwrap_or(default)
}

fn main() -> cddr::Result<()> {
    let shape = DefaultShape {
        regions: arg(1, 2),
        stages: arg(2, 6),
        support: arg(3, 3),
        seed: 2024,
        relaxed: false,
    };
    let (params, model) = hydro::default_instance(&shape);
    let inflows = hydro::unroll_par(&model)?;
    println!("expected inflow by stage:");
    for t in 0..shape.stages {
        println!("  {t}: {:.2?}", inflows.intercept(t).as_slice());
    }

    let spec = hydro::generate(&params, &model)?;
    let sizes = count_sizes(&spec);
    println!("\n{} variables, {} constraints", sizes.variables(), sizes.constraints());
    let start = std::time::Instant::now();
    let sol = solve_problem(&spec, &Backend::default())?;
    println!("expected cost {:.4} in {:.2?}", sol.value, start.elapsed());

    let report = simulate(&spec, &sol.rule, &Scenarios::Exhaustive, &SimulationOptions::default())?;
    println!(
        "{} inflow paths, cost mean {:.4} sd {:.4}, feasible share {}",
        report.scenarios.len(),
        report.mean_cost,
        report.std_cost,
        report.feasibility_rate
    );

    // decisions along the path that always draws the first support point
    let k = shape.regions;
    let first = vec![0; shape.stages];
    for t in 0..shape.stages {
        let x = sol.rule.evaluate(t, &first)?;
        println!(
            "  stage {t}: storage {:.1?} thermal {:.1?}",
            &x[hydro::V * k..(hydro::V + 1) * k],
            &x[hydro::W * k..(hydro::W + 1) * k]
        );
    }
    Ok(())
}
