//! JSON and plain-text polynomial formats.

use serde::{Deserialize, Serialize};

use super::{Basis, MultiIndex, Poly, PolyError, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub alpha: Vec<u32>,
    pub c: f64,
}

/// Wire form: `{"nvars": n, "basis": "monomial"|"chebyshev", "terms": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PolyJson {
    pub nvars: usize,
    pub basis: String,
    pub terms: Vec<TermJson>,
}

impl PolyJson {
    pub fn into_poly(self) -> Result<Poly> {
        let basis = match self.basis.as_str() {
            "monomial" => Basis::Monomial,
            "chebyshev" => Basis::Chebyshev,
            "normalized_chebyshev" => Basis::NormalizedChebyshev,
            other => return Err(PolyError::Parse(format!("unknown basis {other:?}"))),
        };
        Poly::from_terms(
            self.nvars,
            basis,
            self.terms
                .into_iter()
                .map(|t| (MultiIndex::new(t.alpha), t.c)),
        )
    }
}

impl From<&Poly> for PolyJson {
    fn from(p: &Poly) -> Self {
        PolyJson {
            nvars: p.nvars(),
            basis: p.basis().to_string(),
            terms: p
                .iter()
                .map(|(a, c)| TermJson {
                    alpha: a.as_slice().to_vec(),
                    c,
                })
                .collect(),
        }
    }
}

impl Poly {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&PolyJson::from(self)).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Poly> {
        let wire: PolyJson =
            serde_json::from_str(s).map_err(|e| PolyError::Parse(e.to_string()))?;
        wire.into_poly()
    }

    /// Reads either the JSON format or a plain-text expression.
    pub fn parse_any(s: &str, nvars: Option<usize>) -> Result<Poly> {
        if s.trim_start().starts_with('{') {
            Poly::from_json(s)
        } else {
            parse_expression(s, nvars)
        }
    }
}

/// Parses expressions like `x1^2*x2 - 0.5*x1 + 1` into the monomial basis.
///
/// Variables are a letter prefix followed by a 1-based index; a bare prefix
/// means index 1. All variables must share one prefix. When `nvars` is `None`
/// the largest index seen determines the dimension.
pub fn parse_expression(s: &str, nvars: Option<usize>) -> Result<Poly> {
    let mut parser = Parser {
        chars: s.chars().collect(),
        pos: 0,
        prefix: None,
    };
    let terms = parser.sum()?;
    parser.skip_ws();
    if parser.pos != parser.chars.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    let max_index = terms
        .iter()
        .flat_map(|(_, vars)| vars.iter().map(|(i, _)| *i + 1))
        .max()
        .unwrap_or(1);
    let n = match nvars {
        Some(n) if n < max_index => {
            return Err(PolyError::Parse(format!(
                "expression uses variable {max_index} but nvars = {n}"
            )))
        }
        Some(n) => n,
        None => max_index,
    };
    let mut p = Poly::zero(n, Basis::Monomial)
        .with_group(parser.prefix.clone().unwrap_or_else(|| "x".to_string()));
    for (c, vars) in terms {
        let mut alpha = vec![0u32; n];
        for (i, k) in vars {
            alpha[i] += k;
        }
        p.add_term(MultiIndex::new(alpha), c);
    }
    Ok(p)
}

type Monomial = (f64, Vec<(usize, u32)>);

struct Parser {
    chars: Vec<char>,
    pos: usize,
    prefix: Option<String>,
}

impl Parser {
    fn error(&self, msg: &str) -> PolyError {
        PolyError::Parse(format!("{msg} at column {}", self.pos + 1))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<Vec<Monomial>> {
        let mut out = Vec::new();
        let mut sign = 1.0;
        match self.peek() {
            Some('-') => {
                sign = -1.0;
                self.pos += 1;
            }
            Some('+') => self.pos += 1,
            None => return Err(self.error("empty expression")),
            _ => {}
        }
        loop {
            let (c, vars) = self.product()?;
            out.push((sign * c, vars));
            match self.peek() {
                Some('+') => {
                    sign = 1.0;
                    self.pos += 1;
                }
                Some('-') => {
                    sign = -1.0;
                    self.pos += 1;
                }
                _ => return Ok(out),
            }
        }
    }

    fn product(&mut self) -> Result<Monomial> {
        let mut coeff = 1.0;
        let mut vars = Vec::new();
        loop {
            match self.peek() {
                Some(ch) if ch.is_ascii_digit() || ch == '.' => coeff *= self.number()?,
                Some(ch) if ch.is_ascii_alphabetic() => vars.push(self.variable()?),
                _ => return Err(self.error("expected a number or variable")),
            }
            if self.peek() == Some('*') {
                self.pos += 1;
            } else {
                return Ok((coeff, vars));
            }
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while self.pos < self.chars.len() {
            let ch = self.chars[self.pos];
            let exp_sign = (ch == '-' || ch == '+')
                && self.pos > start
                && matches!(self.chars[self.pos - 1], 'e' | 'E');
            if ch.is_ascii_digit() || ch == '.' || ch == 'e' || ch == 'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        let base: f64 = text
            .parse()
            .map_err(|_| PolyError::Parse(format!("bad number {text:?}")))?;
        if self.peek() == Some('/') {
            self.pos += 1;
            let den = self.number()?;
            return Ok(base / den);
        }
        Ok(base)
    }

    fn variable(&mut self) -> Result<(usize, u32)> {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        match &self.prefix {
            Some(p) if *p != name => {
                return Err(PolyError::Parse(format!(
                    "mixed variable names {p:?} and {name:?}"
                )))
            }
            Some(_) => {}
            None => self.prefix = Some(name),
        }
        let dstart = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let index = if dstart == self.pos {
            1
        } else {
            let digits: String = self.chars[dstart..self.pos].iter().collect();
            digits
                .parse::<usize>()
                .map_err(|_| self.error("bad index"))?
        };
        if index == 0 {
            return Err(self.error("variable indices start at 1"));
        }
        let mut power = 1;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let pstart = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let digits: String = self.chars[pstart..self.pos].iter().collect();
            power = digits.parse().map_err(|_| self.error("bad exponent"))?;
        }
        Ok((index - 1, power))
    }
}
