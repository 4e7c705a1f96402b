//! Real multivariate polynomials in `x1..xn`, with a small textual syntax
//! (`3*x1^2*x2 - 0.5*x2 + 1`) that round-trips exactly.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct Term {
    coef: f64,
    /// Exponent of `x_{k+1}` at index `k`; no trailing zeros.
    exps: Vec<u32>,
}

/// A polynomial in normal form: like terms merged, zero terms dropped,
/// terms sorted by total degree then lexicographically.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    terms: Vec<Term>,
}

fn degree(e: &[u32]) -> u32 {
    e.iter().sum()
}

fn cmp_exps(a: &[u32], b: &[u32]) -> std::cmp::Ordering {
    degree(a).cmp(&degree(b)).then_with(|| {
        let n = a.len().max(b.len());
        let get = |e: &[u32], k: usize| e.get(k).copied().unwrap_or(0);
        (0..n)
            .map(|k| get(b, k).cmp(&get(a, k)))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(vec![(c, vec![])])
    }

    /// `x_{k+1}` for zero-based `k`.
    pub fn var(k: usize) -> Self {
        let mut e = vec![0; k + 1];
        e[k] = 1;
        Self::from_terms(vec![(1.0, e)])
    }

    pub fn from_terms(raw: Vec<(f64, Vec<u32>)>) -> Self {
        let mut terms: Vec<Term> = raw
            .into_iter()
            .map(|(coef, mut exps)| {
                while exps.last() == Some(&0) {
                    exps.pop();
                }
                Term { coef, exps }
            })
            .collect();
        terms.sort_by(|a, b| cmp_exps(&a.exps, &b.exps));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.exps == t.exps => last.coef += t.coef,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coef != 0.0);
        Self { terms: merged }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of variables actually referenced.
    pub fn nvars(&self) -> usize {
        self.terms.iter().map(|t| t.exps.len()).max().unwrap_or(0)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| degree(&t.exps))
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.terms.iter().map(|t| t.coef.abs()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coef
                    * t.exps
                        .iter()
                        .enumerate()
                        .map(|(k, &e)| x[k].powi(e as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn derivative(&self, k: usize) -> Poly {
        let raw = self
            .terms
            .iter()
            .filter(|t| t.exps.get(k).copied().unwrap_or(0) > 0)
            .map(|t| {
                let mut e = t.exps.clone();
                let p = e[k];
                e[k] -= 1;
                (t.coef * p as f64, e)
            })
            .collect();
        Poly::from_terms(raw)
    }

    /// Gradient in R^n evaluated at `x` (n = `x.len()`).
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len()).map(|k| self.derivative(k).eval(x)).collect()
    }

    pub fn laplacian(&self, n: usize) -> Poly {
        let mut raw = Vec::new();
        for k in 0..n {
            let d2 = self.derivative(k).derivative(k);
            raw.extend(d2.terms.into_iter().map(|t| (t.coef, t.exps)));
        }
        Poly::from_terms(raw)
    }

    /// Checks `Δp = 0` symbolically in `n` variables; the error names the
    /// first surviving monomial of the Laplacian.
    pub fn check_harmonic(&self, n: usize) -> Result<()> {
        let lap = self.laplacian(n);
        let scale = self.max_abs_coef().max(1.0);
        match lap.terms.iter().find(|t| t.coef.abs() > 1e-12 * scale) {
            None => Ok(()),
            Some(t) => Err(Error::NotHarmonic {
                monomial: fmt_monomial(&t.exps).unwrap_or_else(|| "1".into()),
                coefficient: t.coef,
            }),
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let raw = self
            .terms
            .iter()
            .chain(&other.terms)
            .map(|t| (t.coef, t.exps.clone()))
            .collect();
        Poly::from_terms(raw)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::from_terms(
            self.terms
                .iter()
                .map(|t| (t.coef * s, t.exps.clone()))
                .collect(),
        )
    }
}

fn fmt_monomial(exps: &[u32]) -> Option<String> {
    let parts: Vec<String> = exps
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(k, &e)| {
            if e == 1 {
                format!("x{}", k + 1)
            } else {
                format!("x{}^{}", k + 1, e)
            }
        })
        .collect();
    if parts.is_empty() {
        None
    } else {
        Some(parts.join("*"))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coef.is_sign_negative();
            let mag = t.coef.abs();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, "-")?,
                (_, false) => write!(f, "+")?,
            }
            match fmt_monomial(&t.exps) {
                None => write!(f, "{mag}")?,
                Some(m) if mag == 1.0 => write!(f, "{m}")?,
                Some(m) => write!(f, "{mag}*{m}")?,
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, reason: &str) -> Error {
        let tail: String = self.src[self.pos..].chars().take(12).collect();
        Error::Spec {
            token: if tail.is_empty() {
                self.src.to_string()
            } else {
                tail
            },
            reason: reason.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn number(&mut self) -> Result<f64> {
        let rest = &self.src[self.pos..];
        let bytes = rest.as_bytes();
        let mut end = 0;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            let digits_start = k;
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            if k > digits_start {
                end = k;
            }
        }
        let v = rest[..end]
            .parse::<f64>()
            .map_err(|_| self.err("expected a number"))?;
        self.pos += end;
        Ok(v)
    }

    fn uint(&mut self) -> Result<u32> {
        let rest = &self.src[self.pos..];
        let end = rest
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(rest.len());
        let v = rest[..end]
            .parse::<u32>()
            .map_err(|_| self.err("expected an integer"))?;
        self.pos += end;
        Ok(v)
    }

    fn factor(&mut self, coef: &mut f64, exps: &mut Vec<u32>) -> Result<()> {
        match self.peek() {
            Some('x') => {
                self.pos += 1;
                let k = self.uint()?;
                if k == 0 {
                    return Err(self.err("variables are numbered from x1"));
                }
                let mut e = 1;
                if self.peek() == Some('^') {
                    self.pos += 1;
                    self.skip_ws();
                    e = self.uint()?;
                }
                let k = k as usize - 1;
                if exps.len() <= k {
                    exps.resize(k + 1, 0);
                }
                exps[k] += e;
                Ok(())
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                *coef *= self.number()?;
                Ok(())
            }
            _ => Err(self.err("expected a number or a variable x<k>")),
        }
    }

    fn poly(&mut self) -> Result<Poly> {
        let mut raw = Vec::new();
        let mut sign = 1.0;
        match self.peek() {
            Some('-') => {
                sign = -1.0;
                self.pos += 1;
            }
            Some('+') => self.pos += 1,
            _ => {}
        }
        loop {
            let mut coef = sign;
            let mut exps = Vec::new();
            self.factor(&mut coef, &mut exps)?;
            while self.peek() == Some('*') {
                self.pos += 1;
                self.factor(&mut coef, &mut exps)?;
            }
            raw.push((coef, exps));
            match self.peek() {
                Some('+') => {
                    sign = 1.0;
                    self.pos += 1;
                }
                Some('-') => {
                    sign = -1.0;
                    self.pos += 1;
                }
                None => break,
                Some(_) => return Err(self.err("unexpected character")),
            }
        }
        Ok(Poly::from_terms(raw))
    }
}

impl FromStr for Poly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        if p.peek().is_none() {
            return Err(Error::Spec {
                token: s.to_string(),
                reason: "empty polynomial".into(),
            });
        }
        p.poly()
    }
}

/// A polynomial map R^n → R^m, one [`Poly`] per component.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap {
    pub components: Vec<Poly>,
}

impl PolyMap {
    pub fn new(components: Vec<Poly>) -> Self {
        Self { components }
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn nvars(&self) -> usize {
        self.components.iter().map(Poly::nvars).max().unwrap_or(0)
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.components) {
            *o = p.eval(x);
        }
    }

    /// Row-major m×n Jacobian.
    pub fn jacobian_into(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for (a, p) in self.components.iter().enumerate() {
            for k in 0..n {
                out[a * n + k] = p.derivative(k).eval(x);
            }
        }
    }

    pub fn check_harmonic(&self, n: usize) -> Result<()> {
        self.components.iter().try_for_each(|p| p.check_harmonic(n))
    }
}

impl fmt::Display for PolyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for PolyMap {
    type Err = Error;

    /// Components separated by `;`.
    fn from_str(s: &str) -> Result<Self> {
        let components = s
            .split(';')
            .map(str::parse)
            .collect::<Result<Vec<Poly>>>()?;
        Ok(Self { components })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print_normal_form() {
        let p: Poly = "x2*x1 + 2*x1*x2 - x1^2 + 0.5".parse().unwrap();
        assert_eq!(p.to_string(), "0.5-x1^2+3*x1*x2");
        assert_eq!(p.to_string().parse::<Poly>().unwrap(), p);
        assert_eq!("x1-x1".parse::<Poly>().unwrap().to_string(), "0");
        assert_eq!("1e-3*x1".parse::<Poly>().unwrap().to_string(), "0.001*x1");
    }

    #[test]
    fn evaluation_and_gradient() {
        let p: Poly = "x1^2-x2^2+3*x1*x2".parse().unwrap();
        let x = [0.5, -2.0];
        assert_eq!(p.eval(&x), 0.25 - 4.0 - 3.0);
        assert_eq!(p.gradient(&x), vec![1.0 - 6.0, 4.0 + 1.5]);
    }

    #[test]
    fn harmonic_validation_names_the_offender() {
        assert!("x1^2-x2^2"
            .parse::<Poly>()
            .unwrap()
            .check_harmonic(2)
            .is_ok());
        assert!("x1^2-x2^2"
            .parse::<Poly>()
            .unwrap()
            .check_harmonic(3)
            .is_ok());
        let err = "x1^2"
            .parse::<Poly>()
            .unwrap()
            .check_harmonic(2)
            .unwrap_err();
        assert_eq!(
            err,
            Error::NotHarmonic {
                monomial: "1".into(),
                coefficient: 2.0
            }
        );
        let err = "x1^3"
            .parse::<Poly>()
            .unwrap()
            .check_harmonic(2)
            .unwrap_err();
        assert_eq!(
            err,
            Error::NotHarmonic {
                monomial: "x1".into(),
                coefficient: 6.0
            }
        );
    }

    #[test]
    fn rejects_garbage() {
        assert!("x0".parse::<Poly>().is_err());
        assert!("2**x1".parse::<Poly>().is_err());
        assert!("".parse::<Poly>().is_err());
        assert!("x1 y".parse::<Poly>().is_err());
    }

    #[test]
    fn polymap_components() {
        let h: PolyMap = "x1^2-x2^2;2*x1*x2".parse().unwrap();
        assert_eq!(h.m(), 2);
        assert!(h.check_harmonic(2).is_ok());
        let mut jac = [0.0; 4];
        h.jacobian_into(&[1.0, 2.0], &mut jac);
        assert_eq!(jac, [2.0, -4.0, 4.0, 2.0]);
        assert_eq!(h.to_string().parse::<PolyMap>().unwrap(), h);
    }
}
