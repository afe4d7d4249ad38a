use crate::poly::{jacobian, PolyMatrix, Polynomial};

use super::ContractionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Uncertain parameter with a nominal value.
    Uncertain,
    /// External input; zero for analysis, settable for simulation.
    Input,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub nominal: f64,
    pub bounds: Option<(f64, f64)>,
    pub kind: ParamKind,
}

/// Polynomial vector field `ẋ = f(x, p)`.
///
/// Field polynomials live over `states ++ params`: variable `i < n` is state
/// `i`, variable `n + j` is parameter `j`. Every parameter enters affinely.
#[derive(Debug, Clone, PartialEq)]
pub struct DynSystem {
    pub name: String,
    pub states: Vec<String>,
    pub params: Vec<Param>,
    pub field: Vec<Polynomial>,
    /// States `0..k` do not depend on inputs; the metric may then be
    /// restricted to those states.
    pub input_split: Option<usize>,
}

impl DynSystem {
    pub fn new(
        name: impl Into<String>,
        states: Vec<String>,
        params: Vec<Param>,
        field: Vec<Polynomial>,
        input_split: Option<usize>,
    ) -> Result<Self, ContractionError> {
        let sys = DynSystem {
            name: name.into(),
            states,
            params,
            field,
            input_split,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Builds a parameter-free system from a field over the states only.
    pub fn autonomous(name: impl Into<String>, states: Vec<String>, field: Vec<Polynomial>) -> Result<Self, ContractionError> {
        Self::new(name, states, Vec::new(), field, None)
    }

    fn validate(&self) -> Result<(), ContractionError> {
        let n = self.states.len();
        let total = self.nvars_full();
        if self.field.len() != n {
            return Err(ContractionError::Invalid(format!(
                "{} equations for {} states",
                self.field.len(),
                n
            )));
        }
        if let Some(p) = self.field.iter().find(|p| p.nvars() != total) {
            return Err(ContractionError::Invalid(format!(
                "field polynomial over {} variables, expected {}",
                p.nvars(),
                total
            )));
        }
        for (j, par) in self.params.iter().enumerate() {
            for p in &self.field {
                if p.affine_split(n + j).is_none() {
                    return Err(ContractionError::NotAffine(par.name.clone()));
                }
            }
        }
        // jointly affine: no products of two parameters
        for p in &self.field {
            for (m, _) in p.terms() {
                let deg: u32 = m.exponents()[n..].iter().sum();
                if deg > 1 {
                    let j = m.exponents()[n..].iter().position(|&e| e > 0).unwrap_or(0);
                    return Err(ContractionError::NotAffine(self.params[j].name.clone()));
                }
            }
        }
        if let Some(k) = self.input_split {
            if k > n {
                return Err(ContractionError::Invalid(format!("input split {} exceeds state count {}", k, n)));
            }
            for (j, par) in self.params.iter().enumerate() {
                if par.kind == ParamKind::Input && self.field[..k].iter().any(|p| p.degree_in(n + j) > 0) {
                    return Err(ContractionError::Invalid(format!(
                        "input `{}` drives one of the first {} equations",
                        par.name, k
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn nvars_full(&self) -> usize {
        self.states.len() + self.params.len()
    }

    pub fn param_index(&self, name: &str) -> Result<usize, ContractionError> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| ContractionError::UnknownParam(name.to_string()))
    }

    /// Nominal value of every parameter (inputs at zero).
    pub fn nominal_values(&self) -> Vec<f64> {
        self.params
            .iter()
            .map(|p| if p.kind == ParamKind::Input { 0.0 } else { p.nominal })
            .collect()
    }

    /// Field over the states with parameters fixed to `values`.
    pub fn field_with(&self, values: &[f64]) -> Vec<Polynomial> {
        let n = self.n();
        self.field
            .iter()
            .map(|p| {
                let mut q = p.clone();
                for (j, &v) in values.iter().enumerate() {
                    q = q.substitute(n + j, v);
                }
                q.truncate_vars(n).expect("parameters were substituted")
            })
            .collect()
    }

    pub fn nominal_field(&self) -> Vec<Polynomial> {
        self.field_with(&self.nominal_values())
    }

    /// Parameter values with named overrides applied to the nominal ones.
    pub fn values_with(&self, overrides: &[(String, f64)]) -> Result<Vec<f64>, ContractionError> {
        let mut vals = self.nominal_values();
        for (name, v) in overrides {
            vals[self.param_index(name)?] = *v;
        }
        Ok(vals)
    }

    /// Splits `f = f₀ + Σ δ_k f_k` in the named parameters, all others at
    /// their nominal values. `f₀` is the field at `δ = 0`.
    pub fn affine_decomposition(&self, names: &[&str]) -> Result<(Vec<Polynomial>, Vec<Vec<Polynomial>>), ContractionError> {
        let n = self.n();
        let idx: Vec<usize> = names.iter().map(|s| self.param_index(s)).collect::<Result<_, _>>()?;
        let nominal = self.nominal_values();
        let mut f0 = Vec::with_capacity(n);
        let mut fk: Vec<Vec<Polynomial>> = vec![Vec::with_capacity(n); idx.len()];
        for p in &self.field {
            let mut q = p.clone();
            for (j, &v) in nominal.iter().enumerate() {
                if !idx.contains(&j) {
                    q = q.substitute(n + j, v);
                }
            }
            let mut rest = q;
            for (k, &j) in idx.iter().enumerate() {
                let (p0, p1) = rest
                    .affine_split(n + j)
                    .ok_or_else(|| ContractionError::NotAffine(self.params[j].name.clone()))?;
                let p1 = p1.truncate_vars(n).map_err(|_| ContractionError::NotAffine(self.params[j].name.clone()))?;
                fk[k].push(p1);
                rest = p0;
            }
            f0.push(rest.truncate_vars(n)?);
        }
        Ok((f0, fk))
    }

    /// Jacobian of the nominal field.
    pub fn jacobian(&self) -> Result<PolyMatrix<f64>, ContractionError> {
        Ok(jacobian(&self.nominal_field())?)
    }
}

/// Evaluates a polynomial field at a point.
pub fn eval_field(field: &[Polynomial], x: &[f64]) -> Vec<f64> {
    field.iter().map(|p| p.eval_unchecked(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn decomposition_of_additive_and_multiplicative() {
        let vars = names(&["x", "y", "d1", "d2"]);
        let q = |s: &str| parse_polynomial(s, &vars).unwrap();
        let sys = DynSystem::new(
            "t",
            names(&["x", "y"]),
            vec![
                Param {
                    name: "d1".into(),
                    nominal: 0.0,
                    bounds: None,
                    kind: ParamKind::Uncertain,
                },
                Param {
                    name: "d2".into(),
                    nominal: 1.0,
                    bounds: None,
                    kind: ParamKind::Uncertain,
                },
            ],
            vec![q("-y - d2*x^3 + d1"), q("3*x - y")],
            None,
        )
        .unwrap();
        let (f0, fk) = sys.affine_decomposition(&["d2"]).unwrap();
        let two = names(&["x", "y"]);
        assert_eq!(f0[0], parse_polynomial("-y", &two).unwrap());
        assert_eq!(fk[0][0], parse_polynomial("-x^3", &two).unwrap());
        let nominal = sys.nominal_field();
        assert_eq!(nominal[0], parse_polynomial("-y - x^3", &two).unwrap());
        let (_, fk) = sys.affine_decomposition(&["d1", "d2"]).unwrap();
        assert_eq!(fk[0][0], Polynomial::one(2));
        assert!(fk[0][1].is_zero());
    }

    #[test]
    fn rejects_non_affine_parameter() {
        let vars = names(&["x", "d"]);
        let err = DynSystem::new(
            "t",
            names(&["x"]),
            vec![Param {
                name: "d".into(),
                nominal: 0.0,
                bounds: None,
                kind: ParamKind::Uncertain,
            }],
            vec![parse_polynomial("x^2*d^2", &vars).unwrap()],
            None,
        )
        .unwrap_err();
        assert_eq!(err, ContractionError::NotAffine("d".into()));
    }
}
