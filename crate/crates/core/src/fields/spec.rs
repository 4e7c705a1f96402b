//! Textual field specs:
//!
//! ```text
//! trivial:Q
//! harmonic[/n]:<sheet>|<sheet>|...      sheet = comp;comp;...
//! branch:k/Q[:amp]
//! superpose(<spec>,<sheet>)
//! wound:seed,Q,L,decay
//! ```

use std::fmt;
use std::str::FromStr;

use super::{random_wound_field, QField};
use crate::error::{Error, Result};
use crate::poly::PolyMap;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Trivial {
        q: usize,
    },
    Harmonic {
        n: Option<usize>,
        sheets: Vec<PolyMap>,
    },
    Branch {
        k: u32,
        q: u32,
        amp: f64,
    },
    Superpose {
        base: Box<FieldSpec>,
        h: PolyMap,
    },
    Wound {
        seed: u64,
        q: usize,
        l: usize,
        decay: f64,
    },
}

impl FieldSpec {
    pub fn build(&self) -> Result<QField> {
        let field = match self {
            FieldSpec::Trivial { q } => QField::trivial(*q, 2, 2)?,
            FieldSpec::Harmonic { n, sheets } => {
                let inferred = sheets.iter().map(PolyMap::nvars).max().unwrap_or(0).max(2);
                QField::harmonic_sheets(sheets.clone(), n.unwrap_or(inferred))?
            }
            FieldSpec::Branch { k, q, amp } => QField::branch(*k, *q, *amp)?,
            FieldSpec::Superpose { base, h } => QField::superpose(base.build()?, h.clone())?,
            FieldSpec::Wound { seed, q, l, decay } => random_wound_field(*seed, *q, *l, *decay)?,
        };
        Ok(field.with_tag(self.to_string()))
    }
}

fn spec_err(token: &str, reason: impl Into<String>) -> Error {
    Error::Spec {
        token: token.to_string(),
        reason: reason.into(),
    }
}

fn parse_num<T: FromStr>(tok: &str, what: &str) -> Result<T> {
    tok.trim()
        .parse()
        .map_err(|_| spec_err(tok, format!("expected {what}")))
}

impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("superpose(") {
            let inner = inner
                .strip_suffix(')')
                .ok_or_else(|| spec_err(s, "missing closing `)`"))?;
            let mut depth = 0i32;
            let mut split = None;
            for (i, c) in inner.char_indices() {
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    ',' if depth == 0 => split = Some(i),
                    _ => {}
                }
            }
            let i = split.ok_or_else(|| spec_err(inner, "superpose needs `<spec>,<sheet>`"))?;
            let base = inner[..i].parse()?;
            let h = inner[i + 1..].parse()?;
            return Ok(FieldSpec::Superpose {
                base: Box::new(base),
                h,
            });
        }
        let (head, body) = s
            .split_once(':')
            .ok_or_else(|| spec_err(s, "expected `<constructor>:<parameters>`"))?;
        match head {
            "trivial" => Ok(FieldSpec::Trivial {
                q: parse_num(body, "a multiplicity Q")?,
            }),
            h if h == "harmonic" || h.starts_with("harmonic/") => {
                let n = match head.strip_prefix("harmonic/") {
                    Some(d) => Some(parse_num(d, "a domain dimension")?),
                    None => None,
                };
                let sheets = body
                    .split('|')
                    .map(str::parse)
                    .collect::<Result<Vec<PolyMap>>>()?;
                Ok(FieldSpec::Harmonic { n, sheets })
            }
            "branch" => {
                let (kq, amp) = match body.split_once(':') {
                    Some((kq, a)) => (kq, parse_num(a, "an amplitude")?),
                    None => (body, 1.0),
                };
                let (k, q) = kq
                    .split_once('/')
                    .ok_or_else(|| spec_err(kq, "expected k/Q"))?;
                Ok(FieldSpec::Branch {
                    k: parse_num(k, "an integer k")?,
                    q: parse_num(q, "an integer Q")?,
                    amp,
                })
            }
            "wound" => {
                let parts: Vec<&str> = body.split(',').collect();
                if parts.len() != 4 {
                    return Err(spec_err(body, "expected seed,Q,L,decay"));
                }
                Ok(FieldSpec::Wound {
                    seed: parse_num(parts[0], "an integer seed")?,
                    q: parse_num(parts[1], "an integer Q")?,
                    l: parse_num(parts[2], "an integer L")?,
                    decay: parse_num(parts[3], "a decay exponent")?,
                })
            }
            _ => Err(spec_err(head, "unknown constructor")),
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Trivial { q } => write!(f, "trivial:{q}"),
            FieldSpec::Harmonic { n, sheets } => {
                write!(f, "harmonic")?;
                if let Some(n) = n {
                    write!(f, "/{n}")?;
                }
                write!(f, ":")?;
                for (i, s) in sheets.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{s}")?;
                }
                Ok(())
            }
            FieldSpec::Branch { k, q, amp } if *amp == 1.0 => write!(f, "branch:{k}/{q}"),
            FieldSpec::Branch { k, q, amp } => write!(f, "branch:{k}/{q}:{amp}"),
            FieldSpec::Superpose { base, h } => write!(f, "superpose({base},{h})"),
            FieldSpec::Wound { seed, q, l, decay } => write!(f, "wound:{seed},{q},{l},{decay}"),
        }
    }
}
