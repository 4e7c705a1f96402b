//! Radial cutoffs χ(|x − c|).

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::Region;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffKind {
    /// Piecewise-linear ramps.
    Linear,
    /// Quintic smoothstep ramps.
    Smooth,
}

/// χ = 0 below `a_in`, ramps up on [a_in, lo], equals 1 on [lo, hi], ramps
/// down on [hi, a_out], 0 beyond. With `a_in = lo = 0` the cutoff is a ball
/// cutoff equal to 1 near the centre.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffProfile {
    pub kind: CutoffKind,
    pub center: Vec<f64>,
    pub a_in: f64,
    pub lo: f64,
    pub hi: f64,
    pub a_out: f64,
}

fn smoothstep(t: f64) -> (f64, f64) {
    let t = t.clamp(0.0, 1.0);
    (
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t),
        30.0 * t * t * (1.0 - t) * (1.0 - t),
    )
}

impl CutoffProfile {
    pub fn new(
        kind: CutoffKind,
        center: &[f64],
        a_in: f64,
        lo: f64,
        hi: f64,
        a_out: f64,
    ) -> Result<Self> {
        let ok = a_in >= 0.0
            && a_in <= lo
            && lo < hi
            && hi < a_out
            && a_out.is_finite()
            && (a_in < lo || a_in == 0.0);
        if !ok {
            return Err(Error::Parameter(format!(
                "cutoff radii must satisfy 0 ≤ a_in < lo < hi < a_out (got {a_in}, {lo}, {hi}, {a_out})"
            )));
        }
        Ok(Self {
            kind,
            center: center.to_vec(),
            a_in,
            lo,
            hi,
            a_out,
        })
    }

    pub fn annulus(center: &[f64], a_in: f64, lo: f64, hi: f64, a_out: f64) -> Result<Self> {
        Self::new(CutoffKind::Linear, center, a_in, lo, hi, a_out)
    }

    pub fn with_center(mut self, center: &[f64]) -> Self {
        self.center = center.to_vec();
        self
    }

    /// χ(r) and χ'(r).
    pub fn radial(&self, r: f64) -> (f64, f64) {
        let ramp = |t: f64, w: f64| match self.kind {
            CutoffKind::Linear => (
                t.clamp(0.0, 1.0),
                if (0.0..=1.0).contains(&t) {
                    1.0 / w
                } else {
                    0.0
                },
            ),
            CutoffKind::Smooth => {
                let (s, ds) = smoothstep(t);
                (s, ds / w)
            }
        };
        if r <= self.a_in || r >= self.a_out {
            (0.0, 0.0)
        } else if r < self.lo {
            let w = self.lo - self.a_in;
            ramp((r - self.a_in) / w, w)
        } else if r <= self.hi {
            (1.0, 0.0)
        } else {
            let w = self.a_out - self.hi;
            let (s, ds) = ramp((self.a_out - r) / w, w);
            (s, -ds)
        }
    }

    /// sup|Dχ|.
    pub fn max_gradient(&self) -> f64 {
        let k = match self.kind {
            CutoffKind::Linear => 1.0,
            CutoffKind::Smooth => 1.875,
        };
        let inner = if self.lo > self.a_in {
            k / (self.lo - self.a_in)
        } else {
            0.0
        };
        inner.max(k / (self.a_out - self.hi))
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        vec![self.a_in, self.lo, self.hi, self.a_out]
    }

    /// The support as an integration region.
    pub fn region(&self) -> Region {
        if self.a_in > 0.0 {
            Region::annulus(&self.center, self.a_in, self.a_out)
        } else {
            Region::ball(&self.center, self.a_out)
        }
    }
}

impl fmt::Display for CutoffProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            CutoffKind::Linear => "annulus",
            CutoffKind::Smooth => "smooth",
        };
        write!(
            f,
            "{name}:{},{},{},{}",
            self.a_in, self.lo, self.hi, self.a_out
        )
    }
}

impl FromStr for CutoffProfile {
    type Err = Error;

    /// `annulus:a_in,lo,hi,a_out` or `smooth:a_in,lo,hi,a_out`, centred at 0
    /// in R²; use [`CutoffProfile::with_center`] for other centres.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Spec {
            token: s.to_string(),
            reason: reason.to_string(),
        };
        let (head, body) = s
            .split_once(':')
            .ok_or_else(|| bad("expected annulus:a,b,c,d"))?;
        let kind = match head {
            "annulus" | "linear" => CutoffKind::Linear,
            "smooth" => CutoffKind::Smooth,
            _ => return Err(bad("unknown cutoff kind")),
        };
        let v = body
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|_| bad("radii must be numbers"))?;
        if v.len() != 4 {
            return Err(bad("expected four radii"));
        }
        Self::new(kind, &[0.0, 0.0], v[0], v[1], v[2], v[3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_profile() {
        let c: CutoffProfile = "annulus:0.1,0.2,0.6,0.8".parse().unwrap();
        assert_eq!(c.radial(0.05), (0.0, 0.0));
        let (v, d) = c.radial(0.15);
        assert!((v - 0.5).abs() < 1e-12 && (d - 10.0).abs() < 1e-9);
        assert_eq!(c.radial(0.4), (1.0, 0.0));
        let (v, d) = c.radial(0.7);
        assert!((v - 0.5).abs() < 1e-12 && (d + 5.0).abs() < 1e-9);
        assert_eq!(c.max_gradient(), 1.0 / (0.2 - 0.1));
        assert_eq!(c.to_string(), "annulus:0.1,0.2,0.6,0.8");
    }

    #[test]
    fn smooth_profile_is_bounded() {
        let c: CutoffProfile = "smooth:0.1,0.2,0.6,0.8".parse().unwrap();
        for k in 0..=1000 {
            let (v, d) = c.radial(k as f64 / 1000.0);
            assert!((0.0..=1.0).contains(&v));
            assert!(d.abs() <= c.max_gradient() + 1e-9);
        }
    }

    #[test]
    fn rejects_bad_radii() {
        assert!("annulus:0.3,0.2,0.6,0.8".parse::<CutoffProfile>().is_err());
        assert!("annulus:0.1,0.2".parse::<CutoffProfile>().is_err());
        assert!("disc:0,0,1,2".parse::<CutoffProfile>().is_err());
    }
}
