//! MPS exchange.
//!
//! Written files follow the fixed-format field layout (indicator in columns
//! 2-3, names starting at 5 and 15, values at 25, second pair at 40/50) but
//! fields longer than their slot simply push the line right, so the reader
//! tokenizes on whitespace. Values are written in shortest round-trip form,
//! which makes write-then-parse exact.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::sparse::{Relation, SparseLp};
use crate::error::{Error, Result};

/// Row, column and objective names for an MPS document.
#[derive(Debug, Clone, PartialEq)]
pub struct LpNames {
    pub problem: String,
    pub objective: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
}

impl LpNames {
    /// Positional names `R0000001`, `C0000001`, ...
    pub fn generic(lp: &SparseLp) -> Self {
        LpNames {
            problem: "LP".into(),
            objective: "OBJ".into(),
            rows: (0..lp.n_rows()).map(|i| format!("R{:07}", i + 1)).collect(),
            cols: (0..lp.n_cols()).map(|j| format!("C{:07}", j + 1)).collect(),
        }
    }

    fn validate(&self, lp: &SparseLp) -> Result<()> {
        if self.rows.len() != lp.n_rows() || self.cols.len() != lp.n_cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} row / {} column names for a {}x{} LP",
                self.rows.len(),
                self.cols.len(),
                lp.n_rows(),
                lp.n_cols()
            )));
        }
        let bad = |s: &str| s.is_empty() || s.chars().any(char::is_whitespace) || s.starts_with('*');
        let all = std::iter::once(&self.objective)
            .chain(&self.rows)
            .chain(&self.cols)
            .chain(std::iter::once(&self.problem));
        for name in all {
            if bad(name) {
                return Err(Error::Mps {
                    line: 0,
                    msg: format!("name `{name}` cannot be written to MPS"),
                });
            }
        }
        let mut seen = HashSet::new();
        for name in std::iter::once(&self.objective).chain(&self.rows) {
            if !seen.insert(name.as_str()) {
                return Err(Error::NameCollision(name.clone()));
            }
        }
        let mut seen = HashSet::new();
        for name in &self.cols {
            if !seen.insert(name.as_str()) {
                return Err(Error::NameCollision(name.clone()));
            }
        }
        Ok(())
    }
}

fn num(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        plain
    } else {
        format!("{v:e}")
    }
}

fn field_line(out: &mut String, kind: &str, a: &str, b: &str, value: Option<f64>) {
    let _ = write!(out, " {kind:<2} {a:<8}  {b:<8}");
    if let Some(v) = value {
        let _ = write!(out, "  {:>12}", num(v));
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out.push('\n');
}

/// Serialize `lp` as an MPS document.
pub fn write_mps(lp: &SparseLp, names: &LpNames) -> Result<String> {
    names.validate(lp)?;
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", names.problem);
    out.push_str("ROWS\n");
    field_line(&mut out, "N", &names.objective, "", None);
    for (row, name) in lp.rows().iter().zip(&names.rows) {
        let kind = match row.relation {
            Relation::Le => "L",
            Relation::Eq => "E",
        };
        field_line(&mut out, kind, name, "", None);
    }

    out.push_str("COLUMNS\n");
    let cols = lp.columns();
    for (j, col) in cols.iter().enumerate() {
        let c = lp.objective()[j];
        if c != 0.0 {
            field_line(&mut out, "", &names.cols[j], &names.objective, Some(c));
        }
        for &(i, v) in col {
            field_line(&mut out, "", &names.cols[j], &names.rows[i], Some(v));
        }
        if c == 0.0 && col.is_empty() {
            // keeps empty columns in the document and in their position
            field_line(&mut out, "", &names.cols[j], &names.objective, Some(0.0));
        }
    }

    out.push_str("RHS\n");
    for (row, name) in lp.rows().iter().zip(&names.rows) {
        if row.rhs != 0.0 {
            field_line(&mut out, "", "RHS", name, Some(row.rhs));
        }
    }
    out.push_str("RANGES\n");

    out.push_str("BOUNDS\n");
    for j in 0..lp.n_cols() {
        let (l, u) = (lp.lower()[j], lp.upper()[j]);
        let name = &names.cols[j];
        match (l.is_finite(), u.is_finite()) {
            (false, false) => field_line(&mut out, "FR", "BND", name, None),
            (false, true) => {
                field_line(&mut out, "MI", "BND", name, None);
                field_line(&mut out, "UP", "BND", name, Some(u));
            }
            (true, _) if l == u => field_line(&mut out, "FX", "BND", name, Some(l)),
            (true, false) => {
                if l != 0.0 {
                    field_line(&mut out, "LO", "BND", name, Some(l));
                }
            }
            (true, true) => {
                field_line(&mut out, "LO", "BND", name, Some(l));
                field_line(&mut out, "UP", "BND", name, Some(u));
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    Done,
}

enum RowKind {
    Objective,
    Free,
    Constraint(usize, f64),
}

/// Parse an MPS document. `G` rows are negated into `≤` form; columns default
/// to `[0, ∞)` as the format prescribes.
pub fn parse_mps(text: &str) -> Result<(SparseLp, LpNames)> {
    let err = |line: usize, msg: String| Error::Mps { line, msg };
    let mut section = Section::None;
    let mut problem = String::from("LP");
    let mut objective: Option<String> = None;
    let mut row_kind: HashMap<String, RowKind> = HashMap::new();
    let mut row_names: Vec<String> = Vec::new();
    let mut relations: Vec<Relation> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut col_names: Vec<String> = Vec::new();
    let mut costs: Vec<f64> = Vec::new();
    let mut row_entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut bounds: Vec<(f64, f64)> = Vec::new();

    fn column(
        name: &str,
        col_index: &mut HashMap<String, usize>,
        col_names: &mut Vec<String>,
        costs: &mut Vec<f64>,
        bounds: &mut Vec<(f64, f64)>,
    ) -> usize {
        if let Some(&j) = col_index.get(name) {
            return j;
        }
        let j = col_names.len();
        col_index.insert(name.to_string(), j);
        col_names.push(name.to_string());
        costs.push(0.0);
        bounds.push((0.0, f64::INFINITY));
        j
    }

    let parse_num = |tok: &str, line: usize| -> Result<f64> {
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(line, format!("`{tok}` is not a finite number")))
    };

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match toks[0] {
                "NAME" => {
                    if let Some(n) = toks.get(1) {
                        problem = n.to_string();
                    }
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                "OBJSENSE" => {
                    if toks.get(1).is_some_and(|s| *s != "MIN" && *s != "MINIMIZE") {
                        return Err(err(line, "only minimization is supported".into()));
                    }
                    Section::None
                }
                other => return Err(err(line, format!("unknown section `{other}`"))),
            };
            if section == Section::Done {
                break;
            }
            continue;
        }
        match section {
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(err(line, "ROWS entries need a type and a name".into()));
                }
                let name = toks[1].to_string();
                if row_kind.contains_key(&name) {
                    return Err(Error::NameCollision(name));
                }
                let kind = match toks[0] {
                    "N" if objective.is_none() => {
                        objective = Some(name.clone());
                        RowKind::Objective
                    }
                    "N" => RowKind::Free,
                    "L" | "E" | "G" => {
                        let i = row_names.len();
                        row_names.push(name.clone());
                        row_entries.push(Vec::new());
                        rhs.push(0.0);
                        relations.push(if toks[0] == "E" { Relation::Eq } else { Relation::Le });
                        RowKind::Constraint(i, if toks[0] == "G" { -1.0 } else { 1.0 })
                    }
                    other => return Err(err(line, format!("unknown row type `{other}`"))),
                };
                row_kind.insert(name, kind);
            }
            Section::Columns => {
                if toks.contains(&"'MARKER'") {
                    return Err(err(line, "integer markers are not supported".into()));
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(err(line, "COLUMNS entries need 3 or 5 fields".into()));
                }
                let j = column(toks[0], &mut col_index, &mut col_names, &mut costs, &mut bounds);
                for pair in toks[1..].chunks(2) {
                    let v = parse_num(pair[1], line)?;
                    match row_kind.get(pair[0]) {
                        Some(RowKind::Objective) => costs[j] += v,
                        Some(RowKind::Free) => {}
                        Some(&RowKind::Constraint(i, sign)) => {
                            if v != 0.0 {
                                row_entries[i].push((j, sign * v));
                            }
                        }
                        None => return Err(err(line, format!("unknown row `{}`", pair[0]))),
                    }
                }
            }
            Section::Rhs => {
                let fields = match toks.len() {
                    3 | 5 => &toks[1..],
                    2 | 4 => &toks[..],
                    _ => return Err(err(line, "malformed RHS entry".into())),
                };
                for pair in fields.chunks(2) {
                    let v = parse_num(pair[1], line)?;
                    match row_kind.get(pair[0]) {
                        Some(&RowKind::Constraint(i, sign)) => rhs[i] = sign * v,
                        Some(RowKind::Objective) => {
                            if v != 0.0 {
                                return Err(err(line, "objective constants are not supported".into()));
                            }
                        }
                        Some(RowKind::Free) => {}
                        None => return Err(err(line, format!("unknown row `{}`", pair[0]))),
                    }
                }
            }
            Section::Ranges => {
                return Err(err(line, "ranged rows are not supported".into()));
            }
            Section::Bounds => {
                let (kind, name, value) = match toks.len() {
                    3 if matches!(toks[0], "FR" | "MI" | "PL") => (toks[0], toks[2], None),
                    4 => (toks[0], toks[2], Some(parse_num(toks[3], line)?)),
                    _ => return Err(err(line, "malformed BOUNDS entry".into())),
                };
                let j = column(name, &mut col_index, &mut col_names, &mut costs, &mut bounds);
                let b = &mut bounds[j];
                match (kind, value) {
                    ("UP", Some(v)) => b.1 = v,
                    ("LO", Some(v)) => b.0 = v,
                    ("FX", Some(v)) => *b = (v, v),
                    ("FR", None) => *b = (f64::NEG_INFINITY, f64::INFINITY),
                    ("MI", None) => b.0 = f64::NEG_INFINITY,
                    ("PL", None) => b.1 = f64::INFINITY,
                    _ => return Err(err(line, format!("unsupported bound type `{kind}`"))),
                }
            }
            Section::None | Section::Done => {
                return Err(err(line, "data line outside of a section".into()));
            }
        }
    }
    if section != Section::Done {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }

    let mut lp = SparseLp::new(col_names.len());
    for (j, &c) in costs.iter().enumerate() {
        lp.set_cost(j, c);
    }
    for ((entries, relation), b) in row_entries.into_iter().zip(relations).zip(rhs) {
        lp.add_row(entries, relation, b)?;
    }
    for (j, &(l, u)) in bounds.iter().enumerate() {
        lp.set_bounds(j, l, u)
            .map_err(|_| err(0, format!("inconsistent bounds on `{}`", col_names[j])))?;
    }
    let names = LpNames {
        problem,
        objective: objective.unwrap_or_else(|| "OBJ".into()),
        rows: row_names,
        cols: col_names,
    };
    Ok((lp, names))
}
