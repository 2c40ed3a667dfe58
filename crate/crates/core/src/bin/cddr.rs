use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use cddr::hydro::{self, DefaultShape, HydroFile};
use cddr::lp::mps::write_mps;
use cddr::lp::{LpDump, SolverOptions};
use cddr::model::io::{read_problem, read_rule, write_problem, write_rule};
use cddr::model::ProblemSpec;
use cddr::oracle;
use cddr::policy::{simulate, Scenarios, SimulationOptions};
use cddr::reformulate::{build_lp, count_sizes};
use cddr::solve::{solve_problem, Backend};
use cddr::{Error, Result};

#[derive(Parser)]
#[command(name = "cddr", version, about = "Constant depth decision rules for multistage linear programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the LP and print its size.
    Build {
        problem: PathBuf,
        #[arg(long)]
        mu: Option<usize>,
        /// Write the assembled LP as JSON.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        mps: Option<PathBuf>,
    },
    /// Solve for the optimal rule.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        mu: Option<usize>,
        /// `reference` or `plugin:NAME`.
        #[arg(long, default_value = "reference")]
        solver: String,
        /// Rule file to write.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Evaluate a rule on sampled or enumerated trajectories.
    Simulate {
        problem: PathBuf,
        rule: PathBuf,
        #[arg(long, conflicts_with = "exhaustive")]
        scenarios: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        exhaustive: bool,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        traces: bool,
    },
    /// Write a hydro-thermal problem file.
    HydroGen {
        /// Parameter file; omit to use the built-in generator.
        params: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        mu: Option<usize>,
        #[arg(long, default_value_t = 2)]
        regions: usize,
        #[arg(long, default_value_t = 6)]
        stages: usize,
        #[arg(long, default_value_t = 3)]
        support: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        relaxed: bool,
        /// Also save the generated parameters.
        #[arg(long)]
        params_out: Option<PathBuf>,
    },
    /// Compare the reformulation against brute force.
    Oracle {
        problem: PathBuf,
        #[arg(long)]
        mu: Option<usize>,
        #[arg(long, value_enum, default_value_t = Mode::Feasibility)]
        mode: Mode,
        /// Rule to check; defaults to the optimal one.
        #[arg(long)]
        rule: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-7)]
        tolerance: f64,
    },
    /// Write the assembled LP in MPS format.
    ExportMps {
        problem: PathBuf,
        out: PathBuf,
        #[arg(long)]
        mu: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Feasibility,
    Tree,
}

fn load(path: &PathBuf, mu: Option<usize>) -> Result<ProblemSpec> {
    let spec = read_problem(path)?;
    match mu {
        Some(mu) => spec.with_memory(mu),
        None => Ok(spec),
    }
}

fn pretty(value: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Build { problem, mu, dump, mps } => {
            let spec = load(&problem, mu)?;
            let sizes = count_sizes(&spec);
            if dump.is_some() || mps.is_some() {
                let asm = build_lp(&spec)?;
                if let Some(path) = dump {
                    std::fs::write(path, pretty(&LpDump::from(asm.lp()))? + "\n")?;
                }
                if let Some(path) = mps {
                    std::fs::write(path, write_mps(asm.lp(), &asm.names())?)?;
                }
            }
            println!("n_u={}", sizes.n_u);
            println!("n_y={}", sizes.n_y);
            println!("n_z={}", sizes.n_z);
            println!("n_w={}", sizes.n_w);
            println!("n_eq={}", sizes.n_eq);
            println!("n_ineq={}", sizes.n_ineq);
            println!("variables={}", sizes.variables());
            println!("constraints={}", sizes.constraints());
        }
        Command::Solve { problem, mu, solver, out } => {
            let spec = load(&problem, mu)?;
            let sol = solve_problem(&spec, &Backend::parse(&solver)?)?;
            if let Some(path) = out {
                write_rule(path, &sol.rule, Some(sol.value))?;
            }
            let summary = json!({
                "status": "optimal",
                "value": sol.value,
                "worst_case": sol.worst_case,
                "iterations": sol.iterations,
            });
            println!("{}", pretty(&summary)?);
        }
        Command::Simulate {
            problem,
            rule,
            scenarios,
            seed,
            exhaustive,
            json,
            traces,
        } => {
            let rule = read_rule(rule)?;
            let spec = load(&problem, Some(rule.depth()))?;
            let set = match (scenarios, exhaustive) {
                (Some(count), false) => Scenarios::Sampled { count, seed },
                (None, true) => Scenarios::Exhaustive,
                _ => {
                    return Err(Error::InvalidProblem(
                        "pass either --scenarios N or --exhaustive".into(),
                    ))
                }
            };
            let opts = SimulationOptions {
                traces,
                ..Default::default()
            };
            let report = simulate(&spec, &rule, &set, &opts)?;
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_table());
            }
        }
        Command::HydroGen {
            params,
            out,
            mu,
            regions,
            stages,
            support,
            seed,
            relaxed,
            params_out,
        } => {
            let file = match params {
                Some(path) => hydro::read_hydro(path)?,
                None => {
                    let (params, model) = hydro::default_instance(&DefaultShape {
                        regions,
                        stages,
                        support,
                        seed,
                        relaxed,
                    });
                    HydroFile { params, model }
                }
            };
            if let Some(path) = params_out {
                hydro::write_hydro(path, &file)?;
            }
            let mut spec = hydro::generate(&file.params, &file.model)?;
            if let Some(mu) = mu {
                spec = spec.with_memory(mu)?;
            }
            write_problem(&out, &spec)?;
            let sizes = count_sizes(&spec);
            println!("{}", pretty(&json!({"problem": out, "variables": sizes.variables(), "constraints": sizes.constraints()}))?);
        }
        Command::Oracle {
            problem,
            mu,
            mode,
            rule,
            tolerance,
        } => {
            let spec = load(&problem, mu)?;
            let text = match mode {
                Mode::Feasibility => {
                    let rule = match rule {
                        Some(path) => read_rule(path)?,
                        None => solve_problem(&spec, &Backend::default())?.rule,
                    };
                    pretty(&oracle::feasibility_verdict(&spec, &rule, tolerance, &SolverOptions::default())?)?
                }
                Mode::Tree => pretty(&oracle::tree_verdict(&spec, &Backend::default(), tolerance)?)?,
            };
            println!("{text}");
        }
        Command::ExportMps { problem, out, mu } => {
            let asm = build_lp(&load(&problem, mu)?)?;
            std::fs::write(out, write_mps(asm.lp(), &asm.names())?)?;
        }
    }
    Ok(())
}

fn fail(kind: &str, message: String) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string()),
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string()),
    }
}
