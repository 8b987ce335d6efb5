//! MPS export and import of [`StandardFormLP`].
//!
//! Output uses the fixed-format column layout; names longer than eight
//! characters widen their field, so the parser reads whitespace-separated
//! fields. Numbers are written in shortest round-trip form, so a written file
//! parses back to bit-identical values.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::lp::{RowKey, RowSense, StandardFormLP, VarKey};
use crate::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum MpsError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("MPS line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

const OBJ: &str = "COST";

pub fn var_name(v: VarKey) -> String {
    match v {
        VarKey::Capacity { i } => format!("C_{}", i + 1),
        VarKey::Assign { i, j, t } => format!("Z_{}_{}_{}", i + 1, j + 1, t + 1),
    }
}

pub fn row_name(r: RowKey) -> String {
    match r {
        RowKey::Budget => "BUDGET".into(),
        RowKey::Flow { i, t } => format!("FLOW_{}_{}", i + 1, t + 1),
        RowKey::CapacityUpper { i, t } => format!("CAPU_{}_{}", i + 1, t + 1),
        RowKey::CapacityLower { i, t } => format!("CAPL_{}_{}", i + 1, t + 1),
        RowKey::Other(k) => format!("R{}", k + 1),
    }
}

fn indices(s: &str) -> Option<Vec<usize>> {
    s.split('_').map(|p| p.parse::<usize>().ok().filter(|&v| v > 0).map(|v| v - 1)).collect()
}

pub fn parse_var_name(s: &str) -> Option<VarKey> {
    if let Some(rest) = s.strip_prefix("C_") {
        match indices(rest)?.as_slice() {
            [i] => Some(VarKey::Capacity { i: *i }),
            _ => None,
        }
    } else if let Some(rest) = s.strip_prefix("Z_") {
        match indices(rest)?.as_slice() {
            [i, j, t] => Some(VarKey::Assign { i: *i, j: *j, t: *t }),
            _ => None,
        }
    } else {
        None
    }
}

pub fn parse_row_name(s: &str, ordinal: usize) -> RowKey {
    let two = |rest: &str| match indices(rest).as_deref() {
        Some([i, t]) => Some((*i, *t)),
        _ => None,
    };
    if s == "BUDGET" {
        return RowKey::Budget;
    }
    for (prefix, make) in [
        ("FLOW_", (|i, t| RowKey::Flow { i, t }) as fn(usize, usize) -> RowKey),
        ("CAPU_", |i, t| RowKey::CapacityUpper { i, t }),
        ("CAPL_", |i, t| RowKey::CapacityLower { i, t }),
    ] {
        if let Some((i, t)) = s.strip_prefix(prefix).and_then(two) {
            return make(i, t);
        }
    }
    RowKey::Other(ordinal)
}

fn num<S: Scalar>(v: S) -> String {
    let x = v.as_f64();
    let plain = format!("{x}");
    let exp = format!("{x:e}");
    if plain.len() <= exp.len() {
        plain
    } else {
        exp
    }
}

fn line(out: &mut String, kind: &str, a: &str, b: &str, v: &str) {
    let _ = writeln!(out, " {kind:<2} {a:<8}  {b:<8}  {v:>12}");
}

/// Renders the LP as MPS text.
pub fn to_mps_string<S: Scalar>(lp: &StandardFormLP<S>, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ}");
    let rnames: Vec<String> = lp.rows.iter().map(|&r| row_name(r)).collect();
    for (k, rn) in rnames.iter().enumerate() {
        let s = match lp.senses[k] {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        let _ = writeln!(out, " {s:<2} {rn}");
    }
    out.push_str("COLUMNS\n");
    let (start, idx, val) = lp.csc();
    for j in 0..lp.n_cols {
        let cn = var_name(lp.vars[j]);
        let c = lp.objective[j];
        let empty = start[j] == start[j + 1];
        if c != S::zero() || empty {
            line(&mut out, "", &cn, OBJ, &num(c));
        }
        for k in start[j]..start[j + 1] {
            line(&mut out, "", &cn, &rnames[idx[k]], &num(val[k]));
        }
    }
    out.push_str("RHS\n");
    for (k, &b) in lp.rhs.iter().enumerate() {
        if b != S::zero() {
            line(&mut out, "", "RHS", &rnames[k], &num(b));
        }
    }
    out.push_str("BOUNDS\n");
    for j in 0..lp.n_cols {
        let cn = var_name(lp.vars[j]);
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l == u {
            line(&mut out, "FX", "BND", &cn, &num(l));
            continue;
        }
        if l == S::neg_infinity() && u == S::infinity() {
            line(&mut out, "FR", "BND", &cn, "");
            continue;
        }
        if l == S::neg_infinity() {
            line(&mut out, "MI", "BND", &cn, "");
        } else if l != S::zero() {
            line(&mut out, "LO", "BND", &cn, &num(l));
        }
        if u != S::infinity() {
            line(&mut out, "UP", "BND", &cn, &num(u));
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn export_model<S: Scalar>(lp: &StandardFormLP<S>, path: impl AsRef<Path>) -> Result<(), MpsError> {
    std::fs::write(path, to_mps_string(lp, "CHARGEPLAN"))?;
    Ok(())
}

#[derive(PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

/// Parses MPS text produced by [`to_mps_string`] or any free-format MPS file
/// without RANGES. Columns whose names do not follow the `C_i` / `Z_i_j_t`
/// scheme are rejected.
pub fn parse_mps<S: Scalar>(text: &str) -> Result<StandardFormLP<S>, MpsError> {
    let mut section = Section::None;
    let mut obj_name: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut rows = Vec::new();
    let mut senses = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut vars = Vec::new();
    let mut objective: Vec<S> = Vec::new();
    let mut triplets = Vec::new();
    let mut rhs: Vec<S> = Vec::new();
    let mut lower: Vec<S> = Vec::new();
    let mut upper: Vec<S> = Vec::new();

    let err = |line: usize, msg: String| MpsError::Parse { line, msg };
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            let head = raw.split_whitespace().next().unwrap_or("");
            section = match head {
                "NAME" => Section::None,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(err(ln, format!("unsupported section {other:?}"))),
            };
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        let parse_num = |s: &str| -> Result<S, MpsError> {
            s.parse::<f64>().map(S::lit).map_err(|_| err(ln, format!("bad number {s:?}")))
        };
        match section {
            Section::Rows => {
                let [kind, name] = f[..] else {
                    return Err(err(ln, "expected row type and name".into()));
                };
                let sense = match kind {
                    "N" => {
                        if obj_name.is_none() {
                            obj_name = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    _ => return Err(err(ln, format!("bad row type {kind:?}"))),
                };
                let k = rows.len();
                row_index.insert(name.to_string(), k);
                rows.push(parse_row_name(name, k));
                senses.push(sense);
                rhs.push(S::zero());
            }
            Section::Columns => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(err(ln, "expected column, row, value [, row, value]".into()));
                }
                let cname = f[0];
                let j = match col_index.get(cname) {
                    Some(&j) => j,
                    None => {
                        let key = parse_var_name(cname).ok_or_else(|| err(ln, format!("unrecognised column name {cname:?}")))?;
                        let j = vars.len();
                        col_index.insert(cname.to_string(), j);
                        vars.push(key);
                        objective.push(S::zero());
                        lower.push(S::zero());
                        upper.push(S::infinity());
                        j
                    }
                };
                for pair in f[1..].chunks(2) {
                    let v = parse_num(pair[1])?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        objective[j] = v;
                    } else {
                        let &r = row_index.get(pair[0]).ok_or_else(|| err(ln, format!("unknown row {:?}", pair[0])))?;
                        triplets.push((r, j, v));
                    }
                }
            }
            Section::Rhs => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(err(ln, "expected set, row, value [, row, value]".into()));
                }
                for pair in f[1..].chunks(2) {
                    let v = parse_num(pair[1])?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        continue;
                    }
                    let &r = row_index.get(pair[0]).ok_or_else(|| err(ln, format!("unknown row {:?}", pair[0])))?;
                    rhs[r] = v;
                }
            }
            Section::Bounds => {
                if f.len() < 3 {
                    return Err(err(ln, "expected bound type, set, column [, value]".into()));
                }
                let &j = col_index.get(f[2]).ok_or_else(|| err(ln, format!("unknown column {:?}", f[2])))?;
                let value = || -> Result<S, MpsError> {
                    f.get(3).ok_or_else(|| err(ln, "missing bound value".into())).and_then(|s| parse_num(s))
                };
                match f[0] {
                    "UP" => upper[j] = value()?,
                    "LO" => lower[j] = value()?,
                    "FX" => {
                        let v = value()?;
                        lower[j] = v;
                        upper[j] = v;
                    }
                    "FR" => {
                        lower[j] = S::neg_infinity();
                        upper[j] = S::infinity();
                    }
                    "MI" => lower[j] = S::neg_infinity(),
                    "PL" => upper[j] = S::infinity(),
                    other => return Err(err(ln, format!("unsupported bound type {other:?}"))),
                }
            }
            Section::None | Section::End => {}
        }
    }
    triplets.sort_by_key(|&(r, c, _)| (c, r));
    Ok(StandardFormLP {
        n_rows: rows.len(),
        n_cols: vars.len(),
        triplets,
        senses,
        rhs,
        lower,
        upper,
        objective,
        vars,
        rows,
    })
}

pub fn read_mps<S: Scalar>(path: impl AsRef<Path>) -> Result<StandardFormLP<S>, MpsError> {
    parse_mps(&std::fs::read_to_string(path)?)
}
