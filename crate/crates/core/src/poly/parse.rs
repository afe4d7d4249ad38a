//! Text grammar for polynomials.
//!
//! ```text
//! expr   := [+|-] term { (+|-) term }
//! term   := factor { (*|/) factor }      divisor must be a constant
//! factor := atom [ ^ integer ]
//! atom   := number | name | ( expr )
//! ```
//!
//! Numbers are decimal literals (optionally with an exponent); `p/q` is parsed
//! as a division of two constants. Parenthesized sub-expressions are expanded
//! immediately.

use thiserror::Error;

use super::Polynomial;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("column {column}: undeclared symbol `{name}`")]
    Undeclared { column: usize, name: String },
}

impl ParseError {
    pub fn column(&self) -> usize {
        match self {
            ParseError::Syntax { column, .. } | ParseError::Undeclared { column, .. } => *column,
        }
    }
}

/// What a name in the input refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symbol {
    Var(usize),
    Const(f64),
}

/// Parses `text` over the variables `names` (index = position).
pub fn parse_polynomial(text: &str, names: &[String]) -> Result<Polynomial, ParseError> {
    parse_with(text, names.len(), |s| {
        names.iter().position(|n| n == s).map(Symbol::Var)
    })
}

/// Parses `text` into a polynomial over `nvars` variables, resolving names
/// with `resolve`.
pub fn parse_with(
    text: &str,
    nvars: usize,
    resolve: impl Fn(&str) -> Option<Symbol>,
) -> Result<Polynomial, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        nvars,
        resolve: &resolve,
        end_col: text.chars().count() + 1,
    };
    let out = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(ParseError::Syntax {
            column: t.col,
            message: format!("unexpected `{}`", t.kind.describe()),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64, bool),
    Ident(String),
    Op(char),
}

impl Kind {
    fn describe(&self) -> String {
        match self {
            Kind::Num(v, _) => v.to_string(),
            Kind::Ident(s) => s.clone(),
            Kind::Op(c) => c.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    col: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let mut integral = !chars[start..i].contains(&'.');
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                    integral = false;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let v: f64 = lit.parse().map_err(|_| ParseError::Syntax {
                column: col,
                message: format!("bad number `{}`", lit),
            })?;
            out.push(Token {
                kind: Kind::Num(v, integral),
                col,
            });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                kind: Kind::Ident(chars[start..i].iter().collect()),
                col,
            });
        } else if "+-*/^()".contains(c) {
            out.push(Token {
                kind: Kind::Op(c),
                col,
            });
            i += 1;
        } else {
            return Err(ParseError::Syntax {
                column: col,
                message: format!("unexpected character `{}`", c),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    nvars: usize,
    resolve: &'a dyn Fn(&str) -> Option<Symbol>,
    end_col: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if matches!(self.peek(), Some(Token { kind: Kind::Op(c), .. }) if *c == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn col(&self) -> usize {
        self.peek().map_or(self.end_col, |t| t.col)
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let negate = if self.eat_op('-') {
            true
        } else {
            self.eat_op('+');
            false
        };
        let mut acc = self.term()?;
        if negate {
            acc = -acc;
        }
        loop {
            if self.eat_op('+') {
                acc = &acc + &self.term()?;
            } else if self.eat_op('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat_op('*') {
                acc = &acc * &self.factor()?;
            } else if self.eat_op('/') {
                let col = self.col();
                let d = self.factor()?;
                let is_const = d.terms().all(|(m, _)| m.is_one());
                let v = d.coeff(&super::Monomial::one(self.nvars)).copied();
                match (is_const, v) {
                    (true, Some(v)) => acc = acc.scale(1.0 / v),
                    _ => {
                        return Err(ParseError::Syntax {
                            column: col,
                            message: "division only by a nonzero constant".into(),
                        })
                    }
                }
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.atom()?;
        if self.eat_op('^') {
            let col = self.col();
            match self.peek().map(|t| t.kind.clone()) {
                Some(Kind::Num(v, true)) if v <= u32::MAX as f64 => {
                    self.pos += 1;
                    Ok(base.pow(v as u32))
                }
                _ => Err(ParseError::Syntax {
                    column: col,
                    message: "exponent must be a non-negative integer literal".into(),
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial, ParseError> {
        let col = self.col();
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => {
                return Err(ParseError::Syntax {
                    column: col,
                    message: "unexpected end of input".into(),
                })
            }
        };
        self.pos += 1;
        match tok.kind {
            Kind::Num(v, _) => Ok(Polynomial::constant(self.nvars, v)),
            Kind::Ident(name) => match (self.resolve)(&name) {
                Some(Symbol::Var(i)) => Ok(Polynomial::var(self.nvars, i)),
                Some(Symbol::Const(v)) => Ok(Polynomial::constant(self.nvars, v)),
                None => Err(ParseError::Undeclared { column: col, name }),
            },
            Kind::Op('(') => {
                let inner = self.expr()?;
                if !self.eat_op(')') {
                    return Err(ParseError::Syntax {
                        column: self.col(),
                        message: "expected `)`".into(),
                    });
                }
                Ok(inner)
            }
            Kind::Op('-') => Ok(-self.factor()?),
            Kind::Op(c) => Err(ParseError::Syntax {
                column: col,
                message: format!("unexpected `{}`", c),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_jet_dynamics() {
        let n = names(&["phi", "psi"]);
        let f1 = parse_polynomial("-psi - 3/2*phi^2 - 1/2*phi^3", &n).unwrap();
        let phi = Polynomial::var(2, 0);
        let psi = Polynomial::var(2, 1);
        let expect = &(&(-&psi) - &phi.pow(2).scale(1.5)) - &phi.pow(3).scale(0.5);
        assert_eq!(f1, expect);
    }

    #[test]
    fn parentheses_expand() {
        let n = names(&["x1", "x2"]);
        let p = parse_polynomial("-(x1^2 + 0.5)*x2 - x1", &n).unwrap();
        let q = parse_polynomial("-x1^2*x2 - 0.5*x2 - x1", &n).unwrap();
        assert_eq!(p, q);
        let sq = parse_polynomial("(x1 + x2)^2", &n).unwrap();
        assert_eq!(sq, parse_polynomial("x1^2 + 2*x1*x2 + x2^2", &n).unwrap());
    }

    #[test]
    fn display_round_trip() {
        let n = names(&["a", "b", "c"]);
        let p = parse_polynomial("0.1*a^3*c - 2.5e-7*b + 1/3 - c^4", &n).unwrap();
        let text = p.display_with(&n).to_string();
        assert_eq!(parse_polynomial(&text, &n).unwrap(), p);
    }

    #[test]
    fn reports_errors_with_columns() {
        let n = names(&["x1"]);
        let err = parse_polynomial("x1 + x3", &n).unwrap_err();
        assert_eq!(
            err,
            ParseError::Undeclared {
                column: 6,
                name: "x3".into()
            }
        );
        assert!(matches!(
            parse_polynomial("x1^1.5", &n),
            Err(ParseError::Syntax { column: 4, .. })
        ));
        assert!(parse_polynomial("x1 / x1", &n).is_err());
        assert!(parse_polynomial("(x1 + 1", &n).is_err());
        assert!(parse_polynomial("x1 $ 2", &n).is_err());
        assert!(parse_polynomial("", &n).is_err());
    }

    #[test]
    fn constants_resolve() {
        let p = parse_with("alpha*x + 1", 1, |s| match s {
            "x" => Some(Symbol::Var(0)),
            "alpha" => Some(Symbol::Const(2.0)),
            _ => None,
        })
        .unwrap();
        assert_eq!(p.evaluate(&[3.0]).unwrap(), 7.0);
    }
}
