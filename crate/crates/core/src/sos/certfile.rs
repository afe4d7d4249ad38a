//! Line-oriented certificate files.
//!
//! ```text
//! format = 1
//! [meta]
//! key = value
//! [matrix M]
//! size = 2
//! entry 1 1 = 1.5*x1^2 + 0.3
//! [gram M]
//! eps = 0.0001
//! size = 2
//! target 1 1 = ...
//! basis = y1 y1*x1 y2 ...
//! row 1 = q11
//! row 2 = q21 q22
//! ```
//!
//! Matrix indices are 1-based. Polynomials use the text grammar of
//! [`crate::poly`] over the variable names listed under `vars` in `[meta]`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use thiserror::Error;

use super::{BasisElem, GramCertificate};
use crate::poly::{parse_polynomial, Monomial, ParseError, PolyMatrix, Polynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Poly { line: usize, source: ParseError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramSection {
    pub name: String,
    pub cert: GramCertificate,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CertificateFile {
    /// Ordered key/value metadata; `vars` is managed separately.
    pub meta: Vec<(String, String)>,
    pub var_names: Vec<String>,
    pub matrices: Vec<(String, PolyMatrix<f64>)>,
    pub grams: Vec<GramSection>,
}

fn write_matrix_entries(out: &mut String, key: &str, m: &PolyMatrix<f64>, names: &[String]) {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j < i && m.is_symmetric() {
                continue;
            }
            let p = m.get(i, j);
            let _ = writeln!(out, "{} {} {} = {}", key, i + 1, j + 1, p.display_with(names));
        }
    }
}

fn basis_text(b: &BasisElem, names: &[String]) -> String {
    if b.mono.is_one() {
        format!("y{}", b.aux + 1)
    } else {
        let p = Polynomial::from_term(b.mono.clone(), 1.0);
        format!("y{}*{}", b.aux + 1, p.display_with(names))
    }
}

impl CertificateFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.meta.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.meta.push((key, value)),
        }
    }

    pub fn matrix(&self, name: &str) -> Option<&PolyMatrix<f64>> {
        self.matrices.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn to_text(&self) -> String {
        let names = &self.var_names;
        let mut out = String::from("format = 1\n[meta]\n");
        for (k, v) in &self.meta {
            let _ = writeln!(out, "{} = {}", k, v);
        }
        let _ = writeln!(out, "vars = {}", names.join(" "));
        for (name, m) in &self.matrices {
            let _ = writeln!(out, "[matrix {}]", name);
            let _ = writeln!(out, "size = {}", m.rows());
            write_matrix_entries(&mut out, "entry", m, names);
        }
        for g in &self.grams {
            let c = &g.cert;
            let _ = writeln!(out, "[gram {}]", g.name);
            let _ = writeln!(out, "label = {}", c.label);
            let _ = writeln!(out, "eps = {}", c.eps);
            let _ = writeln!(out, "size = {}", c.target.rows());
            write_matrix_entries(&mut out, "target", &c.target, names);
            let basis: Vec<String> = c.basis.iter().map(|b| basis_text(b, names)).collect();
            let _ = writeln!(out, "basis = {}", basis.join(" "));
            for i in 0..c.gram.nrows() {
                let row: Vec<String> = (0..=i).map(|j| c.gram[(i, j)].to_string()).collect();
                let _ = writeln!(out, "row {} = {}", i + 1, row.join(" "));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CertFileError> {
        let mut file = CertificateFile::default();
        let mut section = Section::None;
        let mut seen_format = false;
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |message: &str| CertFileError::Syntax {
                line: line_no,
                message: message.to_string(),
            };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !seen_format {
                if line.replace(' ', "") != "format=1" {
                    return Err(err("expected `format = 1`"));
                }
                seen_format = true;
                continue;
            }
            if let Some(head) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                file.finish_section(section, line_no)?;
                let mut parts = head.splitn(2, ' ');
                let kind = parts.next().unwrap_or("");
                let name = parts.next().unwrap_or("").trim().to_string();
                section = match kind {
                    "meta" => Section::Meta,
                    "matrix" => Section::Matrix {
                        name,
                        size: 0,
                        entries: Vec::new(),
                    },
                    "gram" => Section::Gram {
                        name,
                        label: String::new(),
                        eps: 0.0,
                        size: 0,
                        targets: Vec::new(),
                        basis: Vec::new(),
                        rows: Vec::new(),
                    },
                    _ => return Err(err("unknown section")),
                };
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            let poly = |s: &str| {
                parse_polynomial(s, &file.var_names).map_err(|source| CertFileError::Poly {
                    line: line_no,
                    source,
                })
            };
            let index_pair = |k: &str| -> Result<(usize, usize), CertFileError> {
                let parts: Vec<&str> = k.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(err("expected two indices"));
                }
                let i: usize = parts[1].parse().map_err(|_| err("bad index"))?;
                let j: usize = parts[2].parse().map_err(|_| err("bad index"))?;
                if i == 0 || j == 0 {
                    return Err(err("indices are 1-based"));
                }
                Ok((i - 1, j - 1))
            };
            match &mut section {
                Section::None => return Err(err("content outside a section")),
                Section::Meta => {
                    if key == "vars" {
                        file.var_names = value.split_whitespace().map(str::to_string).collect();
                    } else {
                        file.meta.push((key.to_string(), value.to_string()));
                    }
                }
                Section::Matrix { size, entries, .. } => {
                    if key == "size" {
                        *size = value.parse().map_err(|_| err("bad size"))?;
                    } else if key.starts_with("entry") {
                        let (i, j) = index_pair(key)?;
                        entries.push((i, j, poly(value)?));
                    } else {
                        return Err(err("unknown matrix key"));
                    }
                }
                Section::Gram {
                    label,
                    eps,
                    size,
                    targets,
                    basis,
                    rows,
                    ..
                } => match key {
                    "label" => *label = value.to_string(),
                    "eps" => *eps = value.parse().map_err(|_| err("bad eps"))?,
                    "size" => *size = value.parse().map_err(|_| err("bad size"))?,
                    "basis" => {
                        for tok in value.split_whitespace() {
                            basis.push(parse_basis(tok, &file.var_names).ok_or_else(|| err("bad basis element"))?);
                        }
                    }
                    k if k.starts_with("target") => {
                        let (i, j) = index_pair(k)?;
                        targets.push((i, j, poly(value)?));
                    }
                    k if k.starts_with("row") => {
                        let vals: Result<Vec<f64>, _> = value.split_whitespace().map(str::parse).collect();
                        rows.push(vals.map_err(|_| err("bad gram row"))?);
                    }
                    _ => return Err(err("unknown gram key")),
                },
            }
        }
        if !seen_format {
            return Err(CertFileError::Syntax {
                line: 1,
                message: "missing `format = 1`".into(),
            });
        }
        file.finish_section(section, text.lines().count())?;
        Ok(file)
    }

    fn finish_section(&mut self, section: Section, line: usize) -> Result<(), CertFileError> {
        let nvars = self.var_names.len();
        let err = |message: &str| CertFileError::Syntax {
            line,
            message: message.to_string(),
        };
        let build = |size: usize, entries: Vec<(usize, usize, Polynomial)>| -> Result<PolyMatrix<f64>, CertFileError> {
            let mut rows = vec![vec![Polynomial::zero(nvars); size]; size];
            for (i, j, p) in entries {
                if i >= size || j >= size {
                    return Err(err("entry index exceeds size"));
                }
                rows[j][i] = p.clone();
                rows[i][j] = p;
            }
            if size == 0 {
                return Ok(PolyMatrix::zeros(0, 0, nvars));
            }
            PolyMatrix::from_rows(rows).map_err(|e| err(&e.to_string()))
        };
        match section {
            Section::Matrix { name, size, entries } => {
                let m = build(size, entries)?;
                self.matrices.push((name, m));
            }
            Section::Gram {
                name,
                label,
                eps,
                size,
                targets,
                basis,
                rows,
            } => {
                let target = build(size, targets)?;
                let k = basis.len();
                if rows.len() != k {
                    return Err(err("gram row count does not match basis"));
                }
                let mut gram = DMatrix::zeros(k, k);
                for (i, r) in rows.iter().enumerate() {
                    if r.len() != i + 1 {
                        return Err(err("gram rows must hold the lower triangle"));
                    }
                    for (j, &v) in r.iter().enumerate() {
                        gram[(i, j)] = v;
                        gram[(j, i)] = v;
                    }
                }
                self.grams.push(GramSection {
                    name,
                    cert: GramCertificate {
                        label,
                        basis,
                        gram,
                        target,
                        eps,
                    },
                });
            }
            Section::Meta | Section::None => {}
        }
        Ok(())
    }
}

enum Section {
    None,
    Meta,
    Matrix {
        name: String,
        size: usize,
        entries: Vec<(usize, usize, Polynomial)>,
    },
    Gram {
        name: String,
        label: String,
        eps: f64,
        size: usize,
        targets: Vec<(usize, usize, Polynomial)>,
        basis: Vec<BasisElem>,
        rows: Vec<Vec<f64>>,
    },
}

fn parse_basis(tok: &str, names: &[String]) -> Option<BasisElem> {
    let rest = tok.strip_prefix('y')?;
    let (aux, mono) = match rest.split_once('*') {
        Some((a, m)) => (a, Some(m)),
        None => (rest, None),
    };
    let aux: usize = aux.parse().ok()?;
    if aux == 0 {
        return None;
    }
    let mono = match mono {
        None => Monomial::one(names.len()),
        Some(m) => {
            let p = parse_polynomial(m, names).ok()?;
            let mut terms = p.terms();
            let (mono, &c) = terms.next()?;
            if c != 1.0 || terms.next().is_some() {
                return None;
            }
            mono.clone()
        }
    };
    Some(BasisElem { aux: aux - 1, mono })
}
