//! External solvers behind a file contract.
//!
//! A plugin is any program invoked as `program <model.mps> <solution.txt>`.
//! The solution file holds a status token (`optimal`, `infeasible` or
//! `unbounded`) on line 1, the objective value on line 2, then one
//! `column_name value` pair per line. Omitted columns are read as zero.
//! Plugin results go through the same residual check as the reference solver.

use std::collections::HashMap;
use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use super::mps::{write_mps, LpNames};
use super::simplex::{LpStatus, SolveResult};
use super::sparse::SparseLp;
use crate::error::{Error, Result};

/// Environment variable prefix; `CDDR_PLUGIN_HIGHS=/usr/bin/my-wrapper`
/// registers the plugin `highs`.
pub const ENV_PREFIX: &str = "CDDR_PLUGIN_";

#[derive(Debug, Clone)]
pub struct PluginSolver {
    pub name: String,
    pub program: PathBuf,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl PluginSolver {
    pub fn new(name: impl Into<String>, program: impl Into<PathBuf>) -> Self {
        PluginSolver {
            name: name.into(),
            program: program.into(),
            args: Vec::new(),
            timeout: Duration::from_secs(600),
        }
    }

    /// Look up `CDDR_PLUGIN_<NAME>` (upper-cased, `-` mapped to `_`).
    pub fn from_env(name: &str) -> Result<Self> {
        let var = env_var_name(name);
        match std::env::var_os(&var) {
            Some(path) if !path.is_empty() => Ok(PluginSolver::new(name, path)),
            _ => Err(Error::Plugin {
                name: name.to_string(),
                msg: format!("not registered; set {var} to the plugin program"),
            }),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Extra arguments placed before the two file paths.
    pub fn with_args(mut self, args: Vec<String>) -> Self {
        self.args = args;
        self
    }

    pub fn solve(&self, lp: &SparseLp, names: &LpNames) -> Result<SolveResult> {
        let fail = |msg: String| Error::Plugin {
            name: self.name.clone(),
            msg,
        };
        let dir = ScratchDir::new()?;
        let model = dir.path.join("model.mps");
        let solution = dir.path.join("solution.txt");
        std::fs::write(&model, write_mps(lp, names)?)?;

        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg(&model)
            .arg(&solution)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| fail(format!("cannot start {}: {e}", self.program.display())))?;
        let mut stdout = child.stdout.take().expect("piped");
        let mut stderr = child.stderr.take().expect("piped");
        let out_reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stdout.read_to_string(&mut s);
            s
        });
        let err_reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        });

        let start = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break Some(status);
            }
            if start.elapsed() >= self.timeout {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            std::thread::sleep(Duration::from_millis(5));
        };
        let tail = |s: &str| {
            let lines: Vec<&str> = s.lines().collect();
            lines[lines.len().saturating_sub(20)..].join("\n")
        };
        let Some(status) = status else {
            // readers are left detached: a surviving grandchild may hold the pipes
            return Err(fail(format!("timed out after {:?}", self.timeout)));
        };
        let out = out_reader.join().unwrap_or_default();
        let err = err_reader.join().unwrap_or_default();
        let diagnostics = format!("stdout:\n{}\nstderr:\n{}", tail(&out), tail(&err));
        if !status.success() {
            return Err(fail(format!("exited with {status}\n{diagnostics}")));
        }
        let text = std::fs::read_to_string(&solution)
            .map_err(|e| fail(format!("no solution file: {e}\n{diagnostics}")))?;
        let parsed = read_solution(&text, names).map_err(|e| fail(e.to_string()))?;
        certify(lp, parsed).map_err(|e| fail(e.to_string()))
    }
}

pub fn env_var_name(name: &str) -> String {
    format!("{ENV_PREFIX}{}", name.to_uppercase().replace('-', "_"))
}

/// Parse a solution file against the column names of the exported LP.
pub fn read_solution(text: &str, names: &LpNames) -> Result<SolveResult> {
    let bad = |line: usize, msg: String| Error::Mps { line, msg };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, status_line) = lines.next().ok_or_else(|| bad(1, "empty solution file".into()))?;
    let status = match status_line.trim().to_ascii_lowercase().as_str() {
        "optimal" => LpStatus::Optimal,
        "infeasible" => LpStatus::Infeasible,
        "unbounded" => LpStatus::Unbounded,
        other => return Err(bad(1, format!("unknown status `{other}`"))),
    };
    let (k, value_line) = lines.next().ok_or_else(|| bad(2, "missing objective value".into()))?;
    let objective: f64 = value_line
        .trim()
        .parse()
        .map_err(|_| bad(k + 1, format!("`{}` is not a number", value_line.trim())))?;
    let index: HashMap<&str, usize> = names.cols.iter().enumerate().map(|(j, n)| (n.as_str(), j)).collect();
    let mut x = vec![0.0; names.cols.len()];
    for (k, line) in lines {
        let mut toks = line.split_whitespace();
        let (Some(name), Some(v), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(bad(k + 1, "expected `name value`".into()));
        };
        let j = *index
            .get(name)
            .ok_or_else(|| bad(k + 1, format!("unknown column `{name}`")))?;
        x[j] = v
            .parse()
            .map_err(|_| bad(k + 1, format!("`{v}` is not a number")))?;
    }
    Ok(SolveResult {
        status,
        objective,
        x,
        iterations: 0,
        infeasible_rows: Vec::new(),
    })
}

/// Render a result in the plugin solution format.
pub fn write_solution(result: &SolveResult, names: &LpNames) -> String {
    let status = match result.status {
        LpStatus::Optimal => "optimal",
        LpStatus::Infeasible => "infeasible",
        LpStatus::Unbounded => "unbounded",
    };
    let mut out = format!("{status}\n{:e}\n", result.objective);
    if result.status == LpStatus::Optimal {
        for (name, v) in names.cols.iter().zip(&result.x) {
            if *v != 0.0 {
                out.push_str(&format!("{name} {v:e}\n"));
            }
        }
    }
    out
}

fn certify(lp: &SparseLp, mut result: SolveResult) -> Result<SolveResult> {
    if result.status != LpStatus::Optimal {
        return Ok(result);
    }
    let scale = 1.0 + lp.rows().iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
    let violation = lp.max_violation(&result.x);
    if !(violation <= 1e-7 * scale) {
        return Err(Error::NumericalBreakdown(format!(
            "plugin solution violates constraints by {violation:.3e}"
        )));
    }
    let value = lp.objective_value(&result.x);
    if (value - result.objective).abs() > 1e-9 * value.abs().max(1.0) {
        return Err(Error::NumericalBreakdown(format!(
            "reported objective {} differs from cᵀx = {value}",
            result.objective
        )));
    }
    result.objective = value;
    Ok(result)
}

struct ScratchDir {
    path: PathBuf,
}

impl ScratchDir {
    fn new() -> Result<Self> {
        static COUNTER: AtomicU64 = AtomicU64::new(0);
        let k = COUNTER.fetch_add(1, Ordering::Relaxed);
        let path = std::env::temp_dir().join(format!("cddr-plugin-{}-{k}", std::process::id()));
        std::fs::create_dir_all(&path)?;
        Ok(ScratchDir { path })
    }
}

impl Drop for ScratchDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.path);
    }
}
