//! System-definition files.
//!
//! ```text
//! format = 1
//! name = jet-additive
//!
//! [states]
//! x1, x2
//!
//! [constants]
//! a = 3/2
//!
//! [params]
//! delta = 0 in [-1.5, 1.5]
//!
//! [inputs]
//! split = 1
//! u
//!
//! [dynamics]
//! x1' = -x2 - a*x1^2 - 1/2*x1^3 + delta
//! x2' = 3*x1 - x2
//! ```
//!
//! Constants are substituted while parsing; parameters and inputs stay
//! symbolic. `#` starts a comment.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::contraction::{ContractionError, DynSystem, Param, ParamKind};
use crate::poly::{parse_with, ParseError, Polynomial, Symbol};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemFileError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: undeclared symbol `{name}`")]
    Undeclared { line: usize, column: usize, name: String },
    #[error("{0}")]
    Invalid(String),
    #[error("parameter `{0}` does not enter the dynamics affinely")]
    NotAffine(String),
}

impl SystemFileError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        SystemFileError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Top,
    States,
    Constants,
    Params,
    Inputs,
    Dynamics,
}

/// Parses a real literal: decimal or `p/q`, with an optional sign.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p.trim().parse().ok()?;
        let q: f64 = q.trim().parse().ok()?;
        return (q != 0.0).then_some(p / q);
    }
    s.parse().ok().filter(|v: &f64| v.is_finite())
}

fn valid_name(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

/// 1-based column of `part` inside `line` (both borrowed from the same text).
fn col(line: &str, part: &str) -> usize {
    (part.as_ptr() as usize).saturating_sub(line.as_ptr() as usize) + 1
}

/// A parsed definition file: the system plus the constant values used.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDefinition {
    pub system: DynSystem,
    /// Sorted by name.
    pub constants: Vec<(String, f64)>,
}

impl SystemDefinition {
    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }
}

/// Parses a system definition. `overrides` replace constant values declared
/// in the file.
pub fn parse_system(text: &str, overrides: &[(String, f64)]) -> Result<DynSystem, SystemFileError> {
    parse_definition(text, overrides).map(|d| d.system)
}

pub fn parse_definition(text: &str, overrides: &[(String, f64)]) -> Result<SystemDefinition, SystemFileError> {
    let mut section = Section::Top;
    let mut seen_format = false;
    let mut name = String::from("system");
    let mut states: Vec<String> = Vec::new();
    let mut constants: HashMap<String, f64> = HashMap::new();
    let mut params: Vec<Param> = Vec::new();
    let mut split: Option<usize> = None;
    let mut dynamics: Vec<(usize, usize, &str, usize)> = Vec::new(); // (line, state, rhs, rhs column)

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("");
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !seen_format {
            let ok = trimmed
                .split_once('=')
                .is_some_and(|(k, v)| k.trim() == "format" && v.trim() == "1");
            if !ok {
                return Err(SystemFileError::at(line_no, col(raw, trimmed), "expected `format = 1` first"));
            }
            seen_format = true;
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(head) = rest.strip_suffix(']') else {
                return Err(SystemFileError::at(line_no, col(raw, trimmed), "unterminated section header"));
            };
            section = match head.trim() {
                "states" => Section::States,
                "constants" => Section::Constants,
                "params" => Section::Params,
                "inputs" => Section::Inputs,
                "dynamics" => Section::Dynamics,
                other => {
                    return Err(SystemFileError::at(line_no, col(raw, trimmed), format!("unknown section `{}`", other)))
                }
            };
            continue;
        }
        let declared = |n: &str, states: &[String], params: &[Param], constants: &HashMap<String, f64>| {
            states.iter().any(|s| s == n) || params.iter().any(|p| p.name == n) || constants.contains_key(n)
        };
        match section {
            Section::Top => {
                let Some((k, v)) = trimmed.split_once('=') else {
                    return Err(SystemFileError::at(line_no, col(raw, trimmed), "expected `key = value`"));
                };
                match k.trim() {
                    "name" => name = v.trim().to_string(),
                    other => {
                        return Err(SystemFileError::at(line_no, col(raw, trimmed), format!("unknown key `{}`", other)))
                    }
                }
            }
            Section::States => {
                for part in trimmed.split([',', ' ', '\t']).filter(|s| !s.is_empty()) {
                    if !valid_name(part) {
                        return Err(SystemFileError::at(line_no, col(raw, part), format!("invalid state name `{}`", part)));
                    }
                    if declared(part, &states, &params, &constants) {
                        return Err(SystemFileError::at(line_no, col(raw, part), format!("`{}` declared twice", part)));
                    }
                    states.push(part.to_string());
                }
            }
            Section::Constants => {
                let Some((k, v)) = trimmed.split_once('=') else {
                    return Err(SystemFileError::at(line_no, col(raw, trimmed), "expected `name = value`"));
                };
                let k = k.trim();
                if !valid_name(k) || declared(k, &states, &params, &constants) {
                    return Err(SystemFileError::at(line_no, col(raw, trimmed), format!("invalid or repeated name `{}`", k)));
                }
                let value = parse_real(v)
                    .ok_or_else(|| SystemFileError::at(line_no, col(raw, v.trim_start()), format!("invalid number `{}`", v.trim())))?;
                constants.insert(k.to_string(), value);
            }
            Section::Params => {
                let Some((k, v)) = trimmed.split_once('=') else {
                    return Err(SystemFileError::at(line_no, col(raw, trimmed), "expected `name = nominal [in [lo, hi]]`"));
                };
                let k = k.trim();
                if !valid_name(k) || declared(k, &states, &params, &constants) {
                    return Err(SystemFileError::at(line_no, col(raw, trimmed), format!("invalid or repeated name `{}`", k)));
                }
                let (nominal, bounds) = match v.split_once(" in ") {
                    Some((n, b)) => (n, Some(b)),
                    None => (v, None),
                };
                let nominal = parse_real(nominal).ok_or_else(|| {
                    SystemFileError::at(line_no, col(raw, nominal.trim_start()), format!("invalid nominal value `{}`", nominal.trim()))
                })?;
                let bounds = match bounds {
                    None => None,
                    Some(b) => {
                        let bt = b.trim();
                        let inner = bt.strip_prefix('[').and_then(|s| s.strip_suffix(']'));
                        let pair = inner.and_then(|s| s.split_once(',')).and_then(|(lo, hi)| Some((parse_real(lo)?, parse_real(hi)?)));
                        match pair {
                            Some((lo, hi)) if lo <= nominal && nominal <= hi => Some((lo, hi)),
                            _ => return Err(SystemFileError::at(line_no, col(raw, bt), "bounds must read `[lo, hi]` and contain the nominal value")),
                        }
                    }
                };
                params.push(Param {
                    name: k.to_string(),
                    nominal,
                    bounds,
                    kind: ParamKind::Uncertain,
                });
            }
            Section::Inputs => {
                if let Some((k, v)) = trimmed.split_once('=') {
                    if k.trim() != "split" {
                        return Err(SystemFileError::at(line_no, col(raw, trimmed), format!("unknown key `{}`", k.trim())));
                    }
                    let k: usize = v.trim().parse().map_err(|_| SystemFileError::at(line_no, col(raw, v.trim_start()), "split must be a non-negative integer"))?;
                    split = Some(k);
                    continue;
                }
                for part in trimmed.split([',', ' ', '\t']).filter(|s| !s.is_empty()) {
                    if !valid_name(part) || declared(part, &states, &params, &constants) {
                        return Err(SystemFileError::at(line_no, col(raw, part), format!("invalid or repeated name `{}`", part)));
                    }
                    params.push(Param {
                        name: part.to_string(),
                        nominal: 0.0,
                        bounds: None,
                        kind: ParamKind::Input,
                    });
                }
            }
            Section::Dynamics => {
                let Some((lhs, rhs)) = line.split_once('=') else {
                    return Err(SystemFileError::at(line_no, col(raw, trimmed), "expected `state' = expression`"));
                };
                let lhs_t = lhs.trim();
                let Some(state) = lhs_t.strip_suffix('\'') else {
                    return Err(SystemFileError::at(line_no, col(raw, lhs_t), "left-hand side must be `state'`"));
                };
                let Some(idx) = states.iter().position(|s| s == state.trim()) else {
                    return Err(SystemFileError::Undeclared {
                        line: line_no,
                        column: col(raw, lhs_t),
                        name: state.trim().to_string(),
                    });
                };
                if dynamics.iter().any(|d| d.1 == idx) {
                    return Err(SystemFileError::at(line_no, col(raw, lhs_t), format!("second equation for `{}`", state.trim())));
                }
                dynamics.push((line_no, idx, rhs, col(raw, rhs)));
            }
        }
    }
    if !seen_format {
        return Err(SystemFileError::at(1, 1, "empty file; expected `format = 1`"));
    }
    if states.is_empty() {
        return Err(SystemFileError::Invalid("no states declared".into()));
    }
    for (k, v) in overrides {
        match constants.get_mut(k) {
            Some(slot) => *slot = *v,
            None => return Err(SystemFileError::Invalid(format!("no constant named `{}` to override", k))),
        }
    }
    let n = states.len();
    let total = n + params.len();
    let mut field = vec![None; n];
    for &(line, idx, rhs, column) in &dynamics {
        let p = parse_with(rhs, total, |s| {
            if let Some(i) = states.iter().position(|x| x == s) {
                return Some(Symbol::Var(i));
            }
            if let Some(j) = params.iter().position(|p| p.name == s) {
                return Some(Symbol::Var(n + j));
            }
            constants.get(s).map(|&v| Symbol::Const(v))
        })
        .map_err(|e| match e {
            ParseError::Syntax { column: c, message } => SystemFileError::Syntax {
                line,
                column: column + c - 1,
                message,
            },
            ParseError::Undeclared { column: c, name } => SystemFileError::Undeclared {
                line,
                column: column + c - 1,
                name,
            },
        })?;
        field[idx] = Some(p);
    }
    let field: Vec<Polynomial> = field
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| SystemFileError::Invalid(format!("no equation for state `{}`", states[i]))))
        .collect::<Result<_, _>>()?;
    let has_inputs = params.iter().any(|p| p.kind == ParamKind::Input);
    if has_inputs && split.is_none() {
        return Err(SystemFileError::Invalid("inputs declared without `split = k`".into()));
    }
    let system = DynSystem::new(name, states, params, field, split).map_err(|e| match e {
        ContractionError::NotAffine(p) => SystemFileError::NotAffine(p),
        other => SystemFileError::Invalid(other.to_string()),
    })?;
    let mut constants: Vec<(String, f64)> = constants.into_iter().collect();
    constants.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(SystemDefinition { system, constants })
}

/// Reads and parses a system file.
pub fn load_system(path: impl AsRef<Path>) -> Result<DynSystem, crate::Error> {
    load_system_with(path, &[])
}

pub fn load_system_with(path: impl AsRef<Path>, overrides: &[(String, f64)]) -> Result<DynSystem, crate::Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| crate::Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_system(&text, overrides)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const JET: &str = "format = 1\nname = jet\n[states]\nx1, x2\n[params]\ndelta = 0 in [-2, 2]\n[dynamics]\nx1' = -x2 - 3/2*x1^2 - 1/2*x1^3 + delta\nx2' = 3*x1 - x2\n";

    #[test]
    fn parses_jet() {
        let sys = parse_system(JET, &[]).unwrap();
        assert_eq!(sys.states, vec!["x1", "x2"]);
        assert_eq!(sys.params[0].bounds, Some((-2.0, 2.0)));
        assert_eq!(sys.field[0].nvars(), 3);
    }

    #[test]
    fn reports_undeclared_symbol_position() {
        let text = "format = 1\n[states]\nx1\n[dynamics]\nx1' = -x1 + x3\n";
        match parse_system(text, &[]).unwrap_err() {
            SystemFileError::Undeclared { line, column, name } => {
                assert_eq!((line, column, name.as_str()), (5, 13, "x3"));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn rejects_non_affine_parameter() {
        let text = "format = 1\n[states]\nx1\n[params]\ndelta = 0\n[dynamics]\nx1' = x1^2*delta^2\n";
        assert_eq!(parse_system(text, &[]).unwrap_err(), SystemFileError::NotAffine("delta".into()));
    }

    #[test]
    fn constants_and_overrides() {
        let text = "format = 1\n[states]\nx\n[constants]\nk = 2\n[dynamics]\nx' = -k*x\n";
        let sys = parse_system(text, &[("k".into(), 5.0)]).unwrap();
        assert_eq!(sys.field[0].evaluate(&[1.0]).unwrap(), -5.0);
    }

    #[test]
    fn requires_format_line() {
        assert!(matches!(
            parse_system("[states]\nx\n", &[]),
            Err(SystemFileError::Syntax { line: 1, .. })
        ));
    }
}
