use std::fmt::Write as _;

use super::SdpError;

/// One scalar unknown of a block SDP: a lower-triangle entry of a PSD block
/// (`row >= col`) or a free variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Block { block: usize, row: usize, col: usize },
    Free(usize),
}

/// Block-diagonal SDP in equality form:
///
/// ```text
/// minimize    Σ c·x
/// subject to  Σ a_ij·x_j = b_i    for every row i
///             X_k ⪰ 0             for every block k, free variables unrestricted
/// ```
///
/// A block coefficient `a` on `Var::Block { row, col }` multiplies the single
/// entry `X[row][col]`; off-diagonal entries are shared with their mirror, so
/// as a symmetric matrix the row contributes `a/2` at both positions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    pub n_free: usize,
    pub rows: Vec<Vec<(Var, f64)>>,
    pub rhs: Vec<f64>,
    pub objective: Vec<(Var, f64)>,
}

impl SdpProblem {
    pub fn new(block_dims: Vec<usize>, n_free: usize) -> Self {
        SdpProblem {
            block_dims,
            n_free,
            ..Default::default()
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds the row `Σ terms = rhs` and returns its index.
    pub fn add_row(&mut self, terms: Vec<(Var, f64)>, rhs: f64) -> usize {
        self.rows.push(terms);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    /// Canonicalizes a block reference to the lower triangle.
    pub fn block_var(block: usize, i: usize, j: usize) -> Var {
        let (row, col) = if i >= j { (i, j) } else { (j, i) };
        Var::Block { block, row, col }
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        if self.rows.len() != self.rhs.len() {
            return Err(SdpError::Malformed(format!(
                "{} rows but {} right-hand sides",
                self.rows.len(),
                self.rhs.len()
            )));
        }
        let check = |v: &Var| -> Result<(), SdpError> {
            match *v {
                Var::Block { block, row, col } => {
                    let dim = *self.block_dims.get(block).ok_or_else(|| {
                        SdpError::Malformed(format!("block {} does not exist", block))
                    })?;
                    if row >= dim || col > row {
                        return Err(SdpError::Malformed(format!(
                            "entry ({}, {}) outside lower triangle of block {} (dim {})",
                            row, col, block, dim
                        )));
                    }
                }
                Var::Free(k) => {
                    if k >= self.n_free {
                        return Err(SdpError::Malformed(format!("free variable {} out of range", k)));
                    }
                }
            }
            Ok(())
        };
        for row in &self.rows {
            for (v, a) in row {
                check(v)?;
                if !a.is_finite() {
                    return Err(SdpError::Malformed("non-finite coefficient".into()));
                }
            }
        }
        for (v, _) in &self.objective {
            check(v)?;
        }
        if self.rhs.iter().any(|b| !b.is_finite()) {
            return Err(SdpError::Malformed("non-finite right-hand side".into()));
        }
        Ok(())
    }

    /// Sparse-triplet text dump for cross-checking against other solvers.
    ///
    /// ```text
    /// format = 1
    /// blocks <dims...>
    /// free <n>
    /// c <block|f> <row> <col> <value>
    /// a <constraint> <block|f> <row> <col> <value>
    /// b <constraint> <value>
    /// ```
    pub fn to_triplets(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format = 1");
        let dims: Vec<String> = self.block_dims.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(out, "blocks {}", dims.join(" "));
        let _ = writeln!(out, "free {}", self.n_free);
        for (v, a) in &self.objective {
            let _ = writeln!(out, "c {} {}", fmt_var(v), a);
        }
        for (i, row) in self.rows.iter().enumerate() {
            for (v, a) in row {
                let _ = writeln!(out, "a {} {} {}", i, fmt_var(v), a);
            }
            let _ = writeln!(out, "b {} {}", i, self.rhs[i]);
        }
        out
    }

    /// Parses the output of [`SdpProblem::to_triplets`].
    pub fn from_triplets(text: &str) -> Result<Self, SdpError> {
        let mut prob = SdpProblem::default();
        let bad = |n: usize, msg: &str| SdpError::Malformed(format!("line {}: {}", n + 1, msg));
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n, "bad number"));
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad(n, "bad index"));
            let var = |p: &[&str]| -> Result<Var, SdpError> {
                if p.len() != 3 {
                    return Err(bad(n, "expected <block|f> <row> <col>"));
                }
                if p[0] == "f" {
                    Ok(Var::Free(idx(p[1])?))
                } else {
                    Ok(SdpProblem::block_var(idx(p[0])?, idx(p[1])?, idx(p[2])?))
                }
            };
            match parts[0] {
                "format" => {
                    if parts.get(2) != Some(&"1") {
                        return Err(bad(n, "unsupported format version"));
                    }
                }
                "blocks" => {
                    prob.block_dims = parts[1..].iter().map(|s| idx(s)).collect::<Result<_, _>>()?
                }
                "free" => prob.n_free = idx(parts.get(1).ok_or_else(|| bad(n, "missing count"))?)?,
                "c" if parts.len() == 5 => prob.objective.push((var(&parts[1..4])?, num(parts[4])?)),
                "a" if parts.len() == 6 => {
                    let i = idx(parts[1])?;
                    while prob.rows.len() <= i {
                        prob.rows.push(Vec::new());
                        prob.rhs.push(0.0);
                    }
                    prob.rows[i].push((var(&parts[2..5])?, num(parts[5])?));
                }
                "b" if parts.len() == 3 => {
                    let i = idx(parts[1])?;
                    while prob.rows.len() <= i {
                        prob.rows.push(Vec::new());
                        prob.rhs.push(0.0);
                    }
                    prob.rhs[i] = num(parts[2])?;
                }
                _ => return Err(bad(n, "unrecognized line")),
            }
        }
        prob.validate()?;
        Ok(prob)
    }
}

fn fmt_var(v: &Var) -> String {
    match *v {
        Var::Block { block, row, col } => format!("{} {} {}", block, row, col),
        Var::Free(k) => format!("f {} 0", k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_round_trip() {
        let mut p = SdpProblem::new(vec![2, 1], 1);
        p.add_row(vec![(SdpProblem::block_var(0, 0, 1), 2.0), (Var::Free(0), -1.0)], 0.5);
        p.add_row(vec![(SdpProblem::block_var(1, 0, 0), 1.0)], 1.0);
        p.objective.push((SdpProblem::block_var(0, 1, 1), 1.0));
        let text = p.to_triplets();
        assert!(text.starts_with("format = 1\n"));
        assert_eq!(SdpProblem::from_triplets(&text).unwrap(), p);
    }

    #[test]
    fn validate_rejects_bad_entries() {
        let mut p = SdpProblem::new(vec![2], 0);
        p.add_row(vec![(Var::Block { block: 0, row: 0, col: 1 }, 1.0)], 0.0);
        assert!(p.validate().is_err());
        let mut p = SdpProblem::new(vec![2], 0);
        p.add_row(vec![(Var::Free(0), 1.0)], 0.0);
        assert!(p.validate().is_err());
        let mut p = SdpProblem::new(vec![2], 0);
        p.add_row(vec![(SdpProblem::block_var(1, 0, 0), 1.0)], 0.0);
        assert!(p.validate().is_err());
    }
}
