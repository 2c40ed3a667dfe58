//! JSON problem and rule files.
//!
//! Every stage, row, column and scenario index in a file is 1-based; padded
//! fragment coordinates (stages `<= 0`) hold the value 1. Fragments may be
//! written either at full depth `mu` or with the padding omitted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::additive::{AdditiveRhs, AdditiveTable, RuleCoefficients};
use super::spec::{ObjectiveSpec, ProblemSpec, SparseBlock, StageBlock, WeightedScenario};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub t: usize,
    pub tau: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub t: usize,
    pub s: usize,
    pub xi: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub xi: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveFile {
    Expected {
        costs: Vec<Vec<f64>>,
        probabilities: Vec<Vec<f64>>,
    },
    Saa {
        costs: Vec<Vec<f64>>,
        scenarios: Vec<ScenarioEntry>,
    },
    WorstCase {
        functionals: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(rename = "N")]
    pub stages: usize,
    pub mu: usize,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub d: Vec<usize>,
    #[serde(rename = "A", default)]
    pub a: Vec<BlockEntry>,
    #[serde(default)]
    pub beta: Vec<CoefficientEntry>,
    pub objective: ObjectiveFile,
}

/// Stored decision rule: the full coefficient table plus its index metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleFile {
    #[serde(rename = "N")]
    pub stages: usize,
    pub mu: usize,
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_value: Option<f64>,
    pub u: Vec<CoefficientEntry>,
}

pub(crate) fn to_zero_based(v: usize, what: &str) -> Result<usize> {
    v.checked_sub(1)
        .ok_or_else(|| Error::IndexOutOfRange(format!("{what} index 0 in a 1-based file")))
}

/// Convert a 1-based file fragment into a full-depth 0-based tuple.
pub(crate) fn fragment_from_file(
    table: &AdditiveTable,
    s: usize,
    xi: &[usize],
) -> Result<Vec<usize>> {
    let depth = table.depth();
    let real = depth.min(s + 1);
    let padding = depth - real;
    let full: Vec<usize> = if xi.len() == depth {
        xi.to_vec()
    } else if xi.len() == real {
        std::iter::repeat_n(1, padding).chain(xi.iter().copied()).collect()
    } else {
        return Err(Error::IndexOutOfRange(format!(
            "fragment {xi:?} for stage {} has neither depth {depth} nor {real} entries",
            s + 1
        )));
    };
    full.iter()
        .enumerate()
        .map(|(k, &v)| {
            if k < padding && v != 1 {
                return Err(Error::IndexOutOfRange(format!(
                    "padded coordinate of fragment {xi:?} must be 1"
                )));
            }
            to_zero_based(v, "fragment")
        })
        .collect()
}

pub(crate) fn table_from_entries(
    radices: &[usize],
    widths: &[usize],
    depth: usize,
    entries: &[CoefficientEntry],
) -> Result<AdditiveTable> {
    let mut table = AdditiveTable::zeros(radices, widths, depth)?;
    for e in entries {
        let t = to_zero_based(e.t, "stage")?;
        let s = to_zero_based(e.s, "stage")?;
        if t >= radices.len() || s > t {
            return Err(Error::IndexOutOfRange(format!(
                "coefficient pair (t={}, s={}) out of range",
                e.t, e.s
            )));
        }
        let frag = fragment_from_file(&table, s, &e.xi)?;
        table.set(t, s, &frag, &e.values)?;
    }
    Ok(table)
}

pub(crate) fn entries_from_table(table: &AdditiveTable, skip_zero: bool) -> Vec<CoefficientEntry> {
    table
        .iter()
        .filter(|(_, _, _, c)| !skip_zero || c.iter().any(|&v| v != 0.0))
        .map(|(t, s, flat, c)| CoefficientEntry {
            t: t + 1,
            s: s + 1,
            xi: table
                .space(s)
                .unindex(flat)
                .expect("flat index from table")
                .into_iter()
                .map(|v| v + 1)
                .collect(),
            values: c.to_vec(),
        })
        .collect()
}

impl ObjectiveFile {
    pub fn into_spec(self) -> Result<ObjectiveSpec> {
        Ok(match self {
            ObjectiveFile::Expected {
                costs,
                probabilities,
            } => ObjectiveSpec::Expected {
                costs,
                probabilities,
            },
            ObjectiveFile::Saa { costs, scenarios } => ObjectiveSpec::Saa {
                costs,
                scenarios: scenarios
                    .into_iter()
                    .map(|sc| {
                        Ok(WeightedScenario {
                            xi: sc
                                .xi
                                .iter()
                                .map(|&v| to_zero_based(v, "scenario"))
                                .collect::<Result<_>>()?,
                            weight: sc.weight,
                        })
                    })
                    .collect::<Result<_>>()?,
            },
            ObjectiveFile::WorstCase { functionals } => ObjectiveSpec::WorstCase { functionals },
        })
    }

    pub fn from_spec(spec: &ObjectiveSpec) -> Self {
        match spec.clone() {
            ObjectiveSpec::Expected {
                costs,
                probabilities,
            } => ObjectiveFile::Expected {
                costs,
                probabilities,
            },
            ObjectiveSpec::Saa { costs, scenarios } => ObjectiveFile::Saa {
                costs,
                scenarios: scenarios
                    .into_iter()
                    .map(|sc| ScenarioEntry {
                        xi: sc.xi.iter().map(|v| v + 1).collect(),
                        weight: sc.weight,
                    })
                    .collect(),
            },
            ObjectiveSpec::WorstCase { functionals } => ObjectiveFile::WorstCase { functionals },
        }
    }
}

pub(crate) fn blocks_from_entries(
    n: &[usize],
    m: &[usize],
    entries: &[BlockEntry],
) -> Result<Vec<StageBlock>> {
    entries
        .iter()
        .map(|e| {
            let t = to_zero_based(e.t, "stage")?;
            let tau = to_zero_based(e.tau, "stage")?;
            if t >= m.len() || tau >= n.len() {
                return Err(Error::IndexOutOfRange(format!(
                    "block A^({},{}) outside the horizon",
                    e.t, e.tau
                )));
            }
            let triplets = e
                .triplets
                .iter()
                .map(|&(i, j, v)| Ok((to_zero_based(i, "row")?, to_zero_based(j, "column")?, v)))
                .collect::<Result<Vec<_>>>()?;
            Ok(StageBlock {
                t,
                tau,
                block: SparseBlock::from_triplets(m[t], n[tau], &triplets)?,
            })
        })
        .collect()
}

pub(crate) fn entries_from_blocks<'a>(
    blocks: impl Iterator<Item = (usize, usize, &'a SparseBlock)>,
) -> Vec<BlockEntry> {
    blocks
        .map(|(t, tau, block)| BlockEntry {
            t: t + 1,
            tau: tau + 1,
            triplets: block.triplets().map(|(i, j, v)| (i + 1, j + 1, v)).collect(),
        })
        .collect()
}

impl ProblemFile {
    pub fn into_spec(self) -> Result<ProblemSpec> {
        if self.n.len() != self.stages || self.m.len() != self.stages || self.d.len() != self.stages {
            return Err(Error::DimensionMismatch(format!(
                "N = {} but n, m, d have lengths {}, {}, {}",
                self.stages,
                self.n.len(),
                self.m.len(),
                self.d.len()
            )));
        }
        if self.mu == 0 {
            return Err(Error::InvalidProblem("mu must be >= 1".into()));
        }
        let rhs: AdditiveRhs = table_from_entries(&self.d, &self.m, self.mu, &self.beta)?;
        let blocks = blocks_from_entries(&self.n, &self.m, &self.a)?;
        ProblemSpec::new(
            self.n,
            self.m,
            self.d,
            self.mu,
            blocks,
            rhs,
            self.objective.into_spec()?,
        )
    }

    pub fn from_spec(spec: &ProblemSpec) -> Self {
        ProblemFile {
            stages: spec.stages(),
            mu: spec.mu(),
            n: spec.n().to_vec(),
            m: spec.m().to_vec(),
            d: spec.d().to_vec(),
            a: entries_from_blocks(spec.blocks()),
            beta: entries_from_table(spec.rhs(), true),
            objective: ObjectiveFile::from_spec(spec.objective()),
        }
    }
}

impl RuleFile {
    pub fn from_rule(rule: &RuleCoefficients, objective_value: Option<f64>) -> Self {
        RuleFile {
            stages: rule.stages(),
            mu: rule.depth(),
            n: rule.widths().to_vec(),
            d: rule.radices().to_vec(),
            objective_value,
            u: entries_from_table(rule, false),
        }
    }

    pub fn into_rule(self) -> Result<RuleCoefficients> {
        if self.n.len() != self.stages || self.d.len() != self.stages {
            return Err(Error::DimensionMismatch("rule file shape does not match N".into()));
        }
        table_from_entries(&self.d, &self.n, self.mu, &self.u)
    }
}

pub fn read_problem(path: impl AsRef<Path>) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path)?;
    let file: ProblemFile = serde_json::from_str(&text)?;
    file.into_spec()
}

pub fn write_problem(path: impl AsRef<Path>, spec: &ProblemSpec) -> Result<()> {
    let text = serde_json::to_string_pretty(&ProblemFile::from_spec(spec))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_rule(path: impl AsRef<Path>) -> Result<RuleCoefficients> {
    let text = std::fs::read_to_string(path)?;
    let file: RuleFile = serde_json::from_str(&text)?;
    file.into_rule()
}

pub fn write_rule(
    path: impl AsRef<Path>,
    rule: &RuleCoefficients,
    objective_value: Option<f64>,
) -> Result<()> {
    let text = serde_json::to_string_pretty(&RuleFile::from_rule(rule, objective_value))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
