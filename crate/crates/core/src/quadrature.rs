//! Polar and spherical product rules over balls, annuli and spheres.
//!
//! Radially: Gauss–Legendre on geometric sub-annuli (ratio 0.5 by default),
//! each level split into equal pieces and at any caller breakpoints. In angle:
//! the periodic trapezoid rule on S¹, and for n ≥ 3 a recursive product with
//! Gauss–Legendre nodes in the polar angles.
//!
//! Balls centred on a branch point are integrated down to
//! `ratio^core_levels · R`; the innermost disc is replaced by the geometric
//! tail extrapolated from the last two level sums, which is exact for pure
//! power-law integrands.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{Jet, QField};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub radial_order: usize,
    pub subdivisions: usize,
    pub ratio: f64,
    pub angular: usize,
    pub polar_order: usize,
    pub core_levels: usize,
    /// Smooth balls use this many geometric levels before a final core disc.
    pub smooth_levels: usize,
    /// Exclusion radius around branch points not at the region centre.
    pub r_min: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::reference()
    }
}

impl QuadratureSpec {
    pub fn reference() -> Self {
        Self {
            radial_order: 16,
            subdivisions: 4,
            ratio: 0.5,
            angular: 64,
            polar_order: 24,
            core_levels: 34,
            smooth_levels: 6,
            r_min: 1e-4,
        }
    }

    /// Twice the angular nodes and radial pieces.
    pub fn doubled(&self) -> Self {
        Self {
            subdivisions: 2 * self.subdivisions,
            angular: 2 * self.angular,
            polar_order: 2 * self.polar_order,
            ..*self
        }
    }

    pub fn label(&self) -> String {
        format!(
            "gl{}x{}-a{}-p{}",
            self.radial_order, self.subdivisions, self.angular, self.polar_order
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.radial_order == 0
            || self.subdivisions == 0
            || self.angular < 3
            || self.polar_order == 0
        {
            return Err(Error::Parameter(format!(
                "quadrature counts must be positive: {self:?}"
            )));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Parameter(format!(
                "refinement ratio must lie in (0,1), got {}",
                self.ratio
            )));
        }
        if !(self.r_min >= 0.0) {
            return Err(Error::Parameter(format!(
                "r_min must be non-negative, got {}",
                self.r_min
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
}

impl Region {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        Region::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn annulus(center: &[f64], inner: f64, outer: f64) -> Self {
        Region::Annulus {
            center: center.to_vec(),
            inner,
            outer,
        }
    }

    pub fn center(&self) -> &[f64] {
        match self {
            Region::Ball { center, .. } | Region::Annulus { center, .. } => center,
        }
    }

    pub fn radii(&self) -> (f64, f64) {
        match self {
            Region::Ball { radius, .. } => (0.0, *radius),
            Region::Annulus { inner, outer, .. } => (*inner, *outer),
        }
    }
}

/// One quadrature node as seen by an integrand.
pub struct Sample<'a> {
    pub x: &'a [f64],
    /// x − centre.
    pub rel: &'a [f64],
    /// |x − centre|.
    pub r: f64,
    /// Unit vector (x − centre)/r.
    pub dir: &'a [f64],
    pub jet: &'a Jet,
}

fn gl(order: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("positive order"));
    (
        rule.nodes().copied().collect(),
        rule.weights().copied().collect(),
    )
}

/// Unit directions on S^{n−1} with weights summing to |S^{n−1}|.
pub fn sphere_rule(n: usize, quad: &QuadratureSpec) -> Vec<(Vec<f64>, f64)> {
    assert!(n >= 2, "sphere rules need n ≥ 2");
    let circle: Vec<(Vec<f64>, f64)> = (0..quad.angular)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / quad.angular as f64;
            (vec![t.cos(), t.sin()], 2.0 * PI / quad.angular as f64)
        })
        .collect();
    if n == 2 {
        return circle;
    }
    let (nodes, weights) = gl(quad.polar_order);
    let mut rule = circle;
    for dim in 3..=n {
        // S^{dim−1} ∋ (cos θ, sin θ·ω), ω ∈ S^{dim−2}, measure sin^{dim−2}θ dθ dω
        let mut next = Vec::with_capacity(rule.len() * nodes.len());
        for (t, w) in nodes.iter().zip(&weights) {
            let theta = PI / 2.0 * (t + 1.0);
            let (s, c) = theta.sin_cos();
            let wt = PI / 2.0 * w * s.powi(dim as i32 - 2);
            for (omega, wo) in &rule {
                let mut x = Vec::with_capacity(dim);
                x.push(c);
                x.extend(omega.iter().map(|o| s * o));
                next.push((x, wt * wo));
            }
        }
        rule = next;
    }
    rule
}

struct RadialNode {
    r: f64,
    w: f64,
    level: usize,
}

fn radial_rule(
    segments: &[(f64, f64, usize)],
    breaks: &[f64],
    quad: &QuadratureSpec,
) -> Vec<RadialNode> {
    let (nodes, weights) = gl(quad.radial_order);
    let mut out = Vec::new();
    for &(a, b, level) in segments {
        let mut cuts: Vec<f64> = vec![a];
        cuts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for piece in cuts.windows(2) {
            let (pa, pb) = (piece[0], piece[1]);
            let h = (pb - pa) / quad.subdivisions as f64;
            for s in 0..quad.subdivisions {
                let lo = pa + s as f64 * h;
                let hi = if s + 1 == quad.subdivisions {
                    pb
                } else {
                    lo + h
                };
                let half = (hi - lo) / 2.0;
                let mid = (hi + lo) / 2.0;
                for (t, w) in nodes.iter().zip(&weights) {
                    out.push(RadialNode {
                        r: mid + half * t,
                        w: half * w,
                        level,
                    });
                }
            }
        }
    }
    out
}

/// Geometric levels from `outer` down to `inner` (exclusive of the core).
fn levels(inner: f64, outer: f64, ratio: f64, max_levels: usize) -> Vec<(f64, f64, usize)> {
    let mut segs = Vec::new();
    let mut hi = outer;
    let mut k = 0;
    while k < max_levels {
        let lo = (hi * ratio).max(inner);
        segs.push((lo, hi, k));
        if lo <= inner {
            break;
        }
        hi = lo;
        k += 1;
    }
    segs
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Whether the region is centred on a branch point. Errors when a branch
/// point lies inside the region, or within `r_min` of it, off-centre.
fn check_branch(
    f: &QField,
    center: &[f64],
    inner: f64,
    outer: f64,
    quad: &QuadratureSpec,
) -> Result<bool> {
    let mut centred = false;
    for b in f.branch_set() {
        let d = dist(b, center);
        if d <= 1e-14 * (1.0 + outer) {
            centred = true;
        } else if d >= inner - quad.r_min && d <= outer + quad.r_min {
            return Err(Error::Precondition(format!(
                "branch point {b:?} lies within r_min = {} of the region {inner}..{outer} around {center:?}",
                quad.r_min
            )));
        }
    }
    Ok(centred)
}

fn check_region(f: &QField, region: &Region) -> Result<()> {
    let (inner, outer) = region.radii();
    if region.center().len() != f.n() {
        return Err(Error::DimensionMismatch(format!(
            "region centre has {} coordinates, field has n = {}",
            region.center().len(),
            f.n()
        )));
    }
    if !(outer > inner && inner >= 0.0 && outer.is_finite()) {
        return Err(Error::Parameter(format!("invalid radii {inner}..{outer}")));
    }
    Ok(())
}

/// ∫_region g(sample) dx for a K-vector valued integrand.
pub fn integrate<const K: usize, G>(
    f: &QField,
    region: &Region,
    quad: &QuadratureSpec,
    breaks: &[f64],
    g: G,
) -> Result<[f64; K]>
where
    G: Fn(&Sample) -> [f64; K] + Sync + Send,
{
    quad.validate()?;
    check_region(f, region)?;
    let (inner, outer) = region.radii();
    let center = region.center();
    let centred = check_branch(f, center, inner, outer, quad)?;
    let n = f.n();

    let (segments, extrapolate) = if inner > 0.0 {
        (levels(inner, outer, quad.ratio, usize::MAX), false)
    } else if centred {
        (levels(0.0, outer, quad.ratio, quad.core_levels), true)
    } else {
        let mut s = levels(0.0, outer, quad.ratio, quad.smooth_levels);
        let last = s.last().map(|l| l.0).unwrap_or(outer);
        s.push((0.0, last, s.len()));
        (s, false)
    };
    let radial = radial_rule(&segments, breaks, quad);
    let dirs = sphere_rule(n, quad);

    let rows: Vec<[f64; K]> = par::map_indexed_min(radial.len(), 2, |ri| {
        let node = &radial[ri];
        let mut jet = Jet::zeros(f.q(), f.m(), n);
        let mut x = vec![0.0; n];
        let mut rel = vec![0.0; n];
        let per_dir: Vec<[f64; K]> = dirs
            .iter()
            .map(|(omega, w)| {
                for k in 0..n {
                    rel[k] = node.r * omega[k];
                    x[k] = center[k] + rel[k];
                }
                f.jet_into(&x, &mut jet);
                let v = g(&Sample {
                    x: &x,
                    rel: &rel,
                    r: node.r,
                    dir: omega,
                    jet: &jet,
                });
                v.map(|c| c * w)
            })
            .collect();
        let s = par::pairwise_sum_rows(&per_dir);
        let scale = node.w * node.r.powi(n as i32 - 1);
        s.map(|c| c * scale)
    });

    let nlev = segments.last().map(|s| s.2 + 1).unwrap_or(0);
    let mut level_sums = Vec::with_capacity(nlev);
    let mut start = 0;
    for lev in 0..nlev {
        let end = start
            + radial[start..]
                .iter()
                .take_while(|r| r.level == lev)
                .count();
        level_sums.push(par::pairwise_sum_rows(&rows[start..end]));
        start = end;
    }
    let mut total = par::pairwise_sum_rows(&level_sums);
    if extrapolate && level_sums.len() >= 2 {
        let last = level_sums[level_sums.len() - 1];
        let prev = level_sums[level_sums.len() - 2];
        for c in 0..K {
            if prev[c] != 0.0 {
                let q = last[c] / prev[c];
                if (0.0..1.0).contains(&q) {
                    total[c] += last[c] * q / (1.0 - q);
                }
            }
        }
    }
    Ok(total)
}

/// ∫_{∂B_r(c)} g dσ.
pub fn integrate_sphere<const K: usize, G>(
    f: &QField,
    center: &[f64],
    radius: f64,
    quad: &QuadratureSpec,
    g: G,
) -> Result<[f64; K]>
where
    G: Fn(&Sample) -> [f64; K] + Sync + Send,
{
    quad.validate()?;
    if center.len() != f.n() {
        return Err(Error::DimensionMismatch(format!(
            "centre has {} coordinates, n = {}",
            center.len(),
            f.n()
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Parameter(format!(
            "sphere radius must be positive, got {radius}"
        )));
    }
    check_branch(f, center, radius, radius, quad)?;
    let n = f.n();
    let dirs = sphere_rule(n, quad);
    let rows: Vec<[f64; K]> = par::map_indexed_min(dirs.len(), 256, |di| {
        let (omega, w) = &dirs[di];
        let rel: Vec<f64> = omega.iter().map(|o| radius * o).collect();
        let x: Vec<f64> = center.iter().zip(&rel).map(|(c, r)| c + r).collect();
        let jet = f.jet(&x);
        g(&Sample {
            x: &x,
            rel: &rel,
            r: radius,
            dir: omega,
            jet: &jet,
        })
        .map(|c| c * w)
    });
    let s = par::pairwise_sum_rows(&rows);
    let scale = radius.powi(n as i32 - 1);
    Ok(s.map(|c| c * scale))
}

/// Volume of the unit ball in R^n.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

pub fn annulus_volume(n: usize, inner: f64, outer: f64) -> f64 {
    unit_ball_volume(n) * (outer.powi(n as i32) - inner.powi(n as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldSpec;

    fn field(s: &str) -> QField {
        s.parse::<FieldSpec>().unwrap().build().unwrap()
    }

    #[test]
    fn sphere_rules_integrate_polynomials() {
        let q = QuadratureSpec::reference();
        for n in 2..=4 {
            let rule = sphere_rule(n, &q);
            let area: f64 = rule.iter().map(|(_, w)| w).sum();
            let expect = n as f64 * unit_ball_volume(n);
            assert!((area - expect).abs() < 1e-12 * expect, "n={n}");
            let second: f64 = rule.iter().map(|(x, w)| x[0] * x[0] * w).sum();
            assert!((second - expect / n as f64).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn ball_and_annulus_volumes() {
        let f = field("harmonic:x1");
        let q = QuadratureSpec::reference();
        let [v] = integrate(&f, &Region::ball(&[0.3, 0.1], 0.7), &q, &[], |_| [1.0]).unwrap();
        assert!((v - PI * 0.49).abs() < 1e-13);
        let [a] = integrate(
            &f,
            &Region::annulus(&[0.0, 0.0], 0.01, 0.9),
            &q,
            &[0.1, 0.5],
            |_| [1.0],
        )
        .unwrap();
        assert!((a - annulus_volume(2, 0.01, 0.9)).abs() < 1e-13);
        let g = field("harmonic/3:x1*x2");
        let [v3] = integrate(&g, &Region::ball(&[0.0, 0.0, 0.0], 2.0), &q, &[], |_| [1.0]).unwrap();
        assert!((v3 - unit_ball_volume(3) * 8.0).abs() < 1e-11);
    }

    #[test]
    fn branch_mass_matches_radial_oracle() {
        let (k, qq, amp) = (3u32, 2u32, 0.8);
        let f = QField::branch(k, qq, amp).unwrap();
        let quad = QuadratureSpec::reference();
        let p = 2.0 * k as f64 / qq as f64 + 2.0;
        let oracle =
            |a: f64, b: f64| 2.0 * PI * qq as f64 * amp * amp * (b.powf(p) - a.powf(p)) / p;
        let [ann] = integrate(
            &f,
            &Region::annulus(&[0.0, 0.0], 0.2, 0.7),
            &quad,
            &[],
            |s| [s.jet.norm_sq()],
        )
        .unwrap();
        assert!((ann - oracle(0.2, 0.7)).abs() < 1e-13 * oracle(0.2, 0.7));
        let [ball] = integrate(&f, &Region::ball(&[0.0, 0.0], 0.7), &quad, &[], |s| {
            [s.jet.norm_sq()]
        })
        .unwrap();
        assert!((ball - oracle(0.0, 0.7)).abs() < 1e-13 * oracle(0.0, 0.7));
    }

    #[test]
    fn singular_gradient_tail_is_recovered() {
        // branch(1,2): each sheet has |Df|² = 2·|α w/z|² = 1/(2r), so Dir(B_R) = 2πR
        let f = QField::branch(1, 2, 1.0).unwrap();
        let [d] = integrate(
            &f,
            &Region::ball(&[0.0, 0.0], 0.6),
            &QuadratureSpec::reference(),
            &[],
            |s| [s.jet.grad_norm_sq()],
        )
        .unwrap();
        assert!((d - 2.0 * PI * 0.6).abs() < 1e-12, "{d}");
    }

    #[test]
    fn off_centre_branch_point_is_rejected() {
        let f = QField::branch(3, 2, 1.0).unwrap();
        let q = QuadratureSpec::reference();
        let err = integrate(&f, &Region::ball(&[0.2, 0.0], 0.5), &q, &[], |_| [1.0]).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(integrate(&f, &Region::ball(&[0.2, 0.0], 0.19995), &q, &[], |_| [1.0]).is_err());
        assert!(integrate(&f, &Region::ball(&[0.2, 0.0], 0.15), &q, &[], |_| [1.0]).is_ok());
        assert!(integrate_sphere(&f, &[0.2, 0.0], 0.2, &q, |_| [1.0]).is_err());
    }

    #[test]
    fn sphere_height_of_linear_field() {
        let f = field("harmonic:x1");
        let r: f64 = 0.3;
        let [h] = integrate_sphere(&f, &[0.0, 0.0], r, &QuadratureSpec::reference(), |s| {
            [s.jet.norm_sq()]
        })
        .unwrap();
        assert!((h - PI * r.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn backends_agree_bitwise() {
        let f = random();
        let q = QuadratureSpec::reference();
        let run = || {
            integrate(&f, &Region::ball(&[0.0, 0.0], 0.9), &q, &[], |s| {
                [s.jet.grad_norm_sq(), s.jet.norm_sq()]
            })
            .unwrap()
        };
        let a = par::with_parallel(true, run);
        let b = par::with_parallel(false, run);
        assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
    }

    fn random() -> QField {
        crate::fields::random_wound_field(5, 3, 4, 2.0).unwrap()
    }
}
