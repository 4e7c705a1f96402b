//! Height, Dirichlet and frequency functions, vanishing order and the
//! homogeneity deficit.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::QField;
use crate::par;
use crate::qcore::metric_g;
use crate::quadrature::{annulus_volume, integrate, QuadratureSpec, Region};
use crate::report::{CheckReport, Verdict};
use crate::stats::linear_fit;
use crate::variational::{dirichlet_energy, l2_mass, sphere_mass};

/// Sharp: H = ∫_{∂B_r}|f|², D = ∫_{B_r}|Df|². Linear cutoff: with
/// φ = 1 on [0,1], 2 − t on [1,2], D_φ = ∫φ(|y|/r)|Df|² and
/// H_φ = ∫_{B_{2r}∖B_r}|f|²/|y|; the ramp on [r, 2r] is our choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyVariant {
    Sharp,
    LinearCutoff,
}

impl FrequencyVariant {
    pub fn tag(&self) -> &'static str {
        match self {
            FrequencyVariant::Sharp => "sharp",
            FrequencyVariant::LinearCutoff => "linear-cutoff",
        }
    }
}

pub fn height(
    f: &QField,
    x: &[f64],
    r: f64,
    quad: &QuadratureSpec,
    variant: FrequencyVariant,
) -> Result<f64> {
    match variant {
        FrequencyVariant::Sharp => sphere_mass(f, x, r, quad),
        FrequencyVariant::LinearCutoff => {
            let [h] = integrate(f, &Region::annulus(x, r, 2.0 * r), quad, &[], |s| {
                [s.jet.norm_sq() / s.r]
            })?;
            Ok(h)
        }
    }
}

pub fn dirichlet_r(
    f: &QField,
    x: &[f64],
    r: f64,
    quad: &QuadratureSpec,
    variant: FrequencyVariant,
) -> Result<f64> {
    match variant {
        FrequencyVariant::Sharp => dirichlet_energy(f, &Region::ball(x, r), quad),
        FrequencyVariant::LinearCutoff => {
            let inner = dirichlet_energy(f, &Region::ball(x, r), quad)?;
            let [ramp] = integrate(f, &Region::annulus(x, r, 2.0 * r), quad, &[], |s| {
                [(2.0 - s.r / r) * s.jet.grad_norm_sq()]
            })?;
            Ok(inner + ramp)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyValue {
    pub h: f64,
    pub d: f64,
    /// r·D/H; None when H = 0 (trivial on the sphere).
    pub i: Option<f64>,
}

pub fn frequency(
    f: &QField,
    x: &[f64],
    r: f64,
    quad: &QuadratureSpec,
    variant: FrequencyVariant,
) -> Result<FrequencyValue> {
    let h = height(f, x, r, quad, variant)?;
    let d = dirichlet_r(f, x, r, quad, variant)?;
    Ok(FrequencyValue {
        h,
        d,
        i: if h > 0.0 { Some(r * d / h) } else { None },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    H,
    D,
    I,
    KappaFit,
    W,
    Deficit,
}

impl ProfileKind {
    pub fn column(&self) -> &'static str {
        match self {
            ProfileKind::H => "H",
            ProfileKind::D => "D",
            ProfileKind::I => "I",
            ProfileKind::KappaFit => "kappa_fit",
            ProfileKind::W => "W",
            ProfileKind::Deficit => "deficit",
        }
    }
}

/// Per-radius values at decreasing radii. Missing values are NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: ProfileKind,
    pub resolution: String,
    pub variant: String,
}

impl RadialProfile {
    /// CSV with columns r, <kind>, resolution, variant.
    pub fn to_csv(&self) -> Result<String> {
        if self.radii.is_empty() {
            return Err(Error::Parameter("empty profile".into()));
        }
        let mut s = format!("r,{},resolution,variant\n", self.kind.column());
        for (r, v) in self.radii.iter().zip(&self.values) {
            let _ = writeln!(
                s,
                "{r:e},{},{},{}",
                fmt_num(*v),
                self.resolution,
                self.variant
            );
        }
        Ok(s)
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:e}")
    }
}

/// 2^{-from}, …, 2^{-to}.
pub fn dyadic_radii(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

pub fn frequency_profile(
    f: &QField,
    x: &[f64],
    radii: &[f64],
    quad: &QuadratureSpec,
    variant: FrequencyVariant,
) -> Result<RadialProfile> {
    let values = par::map_indexed_min(radii.len(), 2, |k| frequency(f, x, radii[k], quad, variant))
        .into_iter()
        .map(|v| v.map(|v| v.i.unwrap_or(f64::NAN)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RadialProfile {
        center: x.to_vec(),
        radii: radii.to_vec(),
        values,
        kind: ProfileKind::I,
        resolution: quad.label(),
        variant: variant.tag().into(),
    })
}

/// Annular mass below which the order is treated as infinite.
pub const UNDERFLOW_MASS: f64 = 1e-280;
/// Local slope above which, on two consecutive windows, the order is
/// treated as infinite.
pub const MAX_SLOPE: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaEstimate {
    /// None when the infinite-order flag is raised.
    pub kappa: Option<f64>,
    /// (smallest, largest) radius of the fit.
    pub window: (f64, f64),
    pub residual: f64,
    /// Slopes between consecutive radii, largest radius first.
    pub slopes: Vec<f64>,
    /// |κ(first half) − κ(second half)|.
    pub stability: f64,
    pub infinite_order: bool,
    pub masses: Vec<f64>,
}

/// Fits log(⨍_{B_{2r}∖B_r(x)}|f|²) against 2 log r.
pub fn vanishing_order(
    f: &QField,
    x: &[f64],
    radii: &[f64],
    quad: &QuadratureSpec,
) -> Result<KappaEstimate> {
    if radii.len() < 4 {
        return Err(Error::Parameter(format!(
            "need at least 4 radii (got {})",
            radii.len()
        )));
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Parameter("radii must be positive".into()));
    }
    let n = f.n();
    let masses = par::map_indexed_min(radii.len(), 2, |k| {
        let r = radii[k];
        let [m] = integrate(f, &Region::annulus(x, r, 2.0 * r), quad, &[], |s| {
            [s.jet.norm_sq()]
        })?;
        Ok(m)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let window = (
        radii.iter().cloned().fold(f64::INFINITY, f64::min),
        radii.iter().cloned().fold(0.0, f64::max),
    );
    let xs: Vec<f64> = radii.iter().map(|r| 2.0 * r.ln()).collect();
    let underflow = masses.iter().any(|&m| !(m >= UNDERFLOW_MASS));
    if underflow {
        return Ok(KappaEstimate {
            kappa: None,
            window,
            residual: f64::NAN,
            slopes: vec![],
            stability: f64::NAN,
            infinite_order: true,
            masses,
        });
    }
    let ys: Vec<f64> = radii
        .iter()
        .zip(&masses)
        .map(|(&r, &m)| (m / annulus_volume(n, r, 2.0 * r)).ln())
        .collect();
    let slopes: Vec<f64> = (1..xs.len())
        .map(|k| (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]))
        .collect();
    let steep = slopes
        .windows(2)
        .any(|w| w[0] > MAX_SLOPE && w[1] > MAX_SLOPE);
    let fit = linear_fit(&xs, &ys);
    let half = xs.len() / 2;
    let a = linear_fit(&xs[..half.max(2)], &ys[..half.max(2)]);
    let b = linear_fit(&xs[half.min(xs.len() - 2)..], &ys[half.min(xs.len() - 2)..]);
    Ok(KappaEstimate {
        kappa: if steep { None } else { Some(fit.slope) },
        window,
        residual: fit.residual,
        slopes,
        stability: (a.slope - b.slope).abs(),
        infinite_order: steep,
        masses,
    })
}

/// Default radii for vanishing-order fits: 2^{-24}, …, 2^{-40}.
pub fn default_order_radii() -> Vec<f64> {
    dyadic_radii(24, 40)
}

/// Compares log(H(r)/r^{n−1}) − log(H(s)/s^{n−1}) with ∫_s^r 2I(t)/t dt,
/// the latter by composite Gauss–Legendre in log t.
pub fn frequency_identity_check(
    f: &QField,
    x: &[f64],
    s: f64,
    r: f64,
    quad: &QuadratureSpec,
) -> Result<CheckReport> {
    if !(s > 0.0 && s < r) {
        return Err(Error::Parameter(format!(
            "need 0 < s < r (got s = {s}, r = {r})"
        )));
    }
    let n = f.n() as f64;
    let variant = FrequencyVariant::Sharp;
    let hs = height(f, x, s, quad, variant)?;
    let hr = height(f, x, r, quad, variant)?;
    let res = quad.label();
    let base = CheckReport::new("frequency-identity", f.tag())
        .param("center", x)
        .param_num("s", s)
        .param_num("r", r)
        .param("quadrature", quad);
    if !(hs > 0.0 && hr > 0.0) {
        return Ok(base
            .note("H vanishes on [s, r]")
            .verdict(Verdict::Diagnostic)
            .finish());
    }
    let lhs = (hr / r.powf(n - 1.0)).ln() - (hs / s.powf(n - 1.0)).ln();
    let span = (r / s).ln();
    let pieces = (span / 2f64.ln()).ceil().max(1.0) as usize;
    let rule = GaussLegendre::new(NonZeroUsize::new(16).unwrap());
    let nodes: Vec<(f64, f64)> = rule.nodes().copied().zip(rule.weights().copied()).collect();
    let width = span / pieces as f64;
    let pts: Vec<(f64, f64)> = (0..pieces)
        .flat_map(|p| {
            let a = s.ln() + p as f64 * width;
            nodes
                .iter()
                .map(move |(t, w)| (a + width * (t + 1.0) / 2.0, w * width / 2.0))
                .collect::<Vec<_>>()
        })
        .collect();
    let vals = par::map_indexed_min(pts.len(), 2, |k| {
        frequency(f, x, pts[k].0.exp(), quad, variant)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    if vals.iter().any(|v| v.i.is_none()) {
        return Ok(base
            .note("H vanishes inside [s, r]")
            .verdict(Verdict::Diagnostic)
            .finish());
    }
    let terms: Vec<f64> = vals
        .iter()
        .zip(&pts)
        .map(|(v, (_, w))| 2.0 * v.i.unwrap() * w)
        .collect();
    let rhs = par::pairwise_sum(&terms);
    let disc = (lhs - rhs).abs();
    Ok(base
        .qty("lhs", lhs, &res)
        .qty("rhs", rhs, &res)
        .qty("discrepancy", disc, &res)
        .verdict(Verdict::from_bool(disc <= 1e-6))
        .finish())
}

/// ∫_{B_{2r}∖B_r(x)} Σ|Df_i·(y−x) − κf_i|² / ∫_{B_{2r}∖B_r(x)} Σ|f_i|²;
/// None when the denominator vanishes.
pub fn homogeneity_deficit(
    f: &QField,
    x: &[f64],
    r: f64,
    kappa: f64,
    quad: &QuadratureSpec,
) -> Result<Option<f64>> {
    let [num, den] = integrate(f, &Region::annulus(x, r, 2.0 * r), quad, &[], |s| {
        [s.jet.directional_defect(s.rel, kappa), s.jet.norm_sq()]
    })?;
    Ok(if den > 0.0 { Some(num / den) } else { None })
}

pub fn deficit_profile(
    f: &QField,
    x: &[f64],
    radii: &[f64],
    kappa: f64,
    quad: &QuadratureSpec,
) -> Result<RadialProfile> {
    let values = par::map_indexed_min(radii.len(), 2, |k| {
        homogeneity_deficit(f, x, radii[k], kappa, quad)
    })
    .into_iter()
    .map(|v| v.map(|v| v.unwrap_or(f64::NAN)))
    .collect::<Result<Vec<_>>>()?;
    Ok(RadialProfile {
        center: x.to_vec(),
        radii: radii.to_vec(),
        values,
        kind: ProfileKind::Deficit,
        resolution: quad.label(),
        variant: format!("kappa={kappa}"),
    })
}

pub const DEFAULT_EPS_USC: f64 = 1e-3;

/// Spot check of upper semicontinuity: κ at x versus κ at 8 points on the
/// circle of radius δ around x in the x1x2 plane.
pub fn semicontinuity_probe(
    f: &QField,
    x: &[f64],
    delta: f64,
    radii: &[f64],
    eps_usc: f64,
    quad: &QuadratureSpec,
) -> Result<CheckReport> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!(
            "probe radius must be positive (got {delta})"
        )));
    }
    let at_x = vanishing_order(f, x, radii, quad)?;
    let probes: Vec<Vec<f64>> = (0..8)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / 8.0;
            let mut y = x.to_vec();
            y[0] += delta * t.cos();
            y[1] += delta * t.sin();
            y
        })
        .collect();
    let ests = par::map_indexed_min(8, 2, |j| vanishing_order(f, &probes[j], radii, quad))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let res = quad.label();
    let mut rep = CheckReport::new("semicontinuity", f.tag())
        .param("center", x)
        .param_num("delta", delta)
        .param_num("eps_usc", eps_usc)
        .param("quadrature", quad);
    let kx = at_x.kappa;
    rep = rep.qty("kappa_x", kx.unwrap_or(f64::INFINITY), &res);
    let mut worst = f64::NEG_INFINITY;
    let mut infinite = at_x.infinite_order;
    for (j, e) in ests.iter().enumerate() {
        rep = rep.qty(
            &format!("kappa_y{j}"),
            e.kappa.unwrap_or(f64::INFINITY),
            &res,
        );
        infinite |= e.infinite_order;
        if let (Some(ky), Some(kx)) = (e.kappa, kx) {
            worst = worst.max(ky - kx);
        }
    }
    if infinite {
        return Ok(rep
            .note("infinite-order flag raised at some probe")
            .verdict(Verdict::Diagnostic)
            .finish());
    }
    Ok(rep
        .qty("max_difference", worst, &res)
        .verdict(Verdict::from_bool(worst <= eps_usc))
        .finish())
}

/// Sample points x = ρ(cos t, sin t, 0, …) of the sup-distance comparison.
fn blowup_samples(n: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for i in 1..=4 {
        let rho = 0.25 * i as f64;
        for k in 0..16 {
            let t = 2.0 * PI * (k as f64 + 0.5) / 16.0;
            let mut x = vec![0.0; n];
            x[0] = rho * t.cos();
            x[1] = rho * t.sin();
            pts.push(x);
        }
    }
    pts
}

/// Mass of a blow-up on B_1 counts as unit within this relative error.
pub const BLOWUP_MASS_TOL: f64 = 1e-6;

/// Blow-ups f_{y,ρ} along `rhos` (decreasing). Each must have unit L² mass
/// on B_1; with a `limit` field, the sampled sup of G(f_{y,ρ}, limit_{0,1})
/// must not increase along the sequence.
pub fn blowup_check(
    f: &QField,
    y: &[f64],
    rhos: &[f64],
    limit: Option<&QField>,
    quad: &QuadratureSpec,
) -> Result<CheckReport> {
    if rhos.is_empty() {
        return Err(Error::Parameter("need at least one blow-up radius".into()));
    }
    if rhos.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Parameter("blow-up radii must decrease".into()));
    }
    let n = f.n();
    let origin = vec![0.0; n];
    let res = quad.label();
    let target = match limit {
        Some(l) => {
            if l.n() != n || l.m() != f.m() || l.q() != f.q() {
                return Err(Error::DimensionMismatch(
                    "limit field must share n, m and Q with the field".into(),
                ));
            }
            let norm = l2_mass(l, &Region::ball(&origin, 1.0), quad)?.sqrt();
            Some(QField::blowup_rescale(l, &origin, 1.0, norm)?)
        }
        None => None,
    };
    let pts = blowup_samples(n);
    let mut rep = CheckReport::new("blowup", f.tag())
        .param("center", y)
        .param("rhos", rhos)
        .param("limit", limit.map(|l| l.tag().to_string()))
        .param("quadrature", quad);
    let mut ok = true;
    let mut dists = Vec::new();
    for &rho in rhos {
        let norm = l2_mass(f, &Region::ball(y, rho), quad)?.sqrt();
        let g = QField::blowup_rescale(f, y, rho, norm)?;
        let mass = l2_mass(&g, &Region::ball(&origin, 1.0), quad)?;
        ok &= (mass - 1.0).abs() <= BLOWUP_MASS_TOL;
        rep = rep.qty(&format!("mass@{rho:e}"), mass, &res);
        if let Some(t) = &target {
            let mut d: f64 = 0.0;
            for x in &pts {
                d = d.max(metric_g(&g.eval(x), &t.eval(x))?);
            }
            rep = rep.qty(&format!("sup_distance@{rho:e}"), d, &res);
            dists.push(d);
        }
    }
    if !ok {
        rep = rep.note(format!(
            "a blow-up misses unit mass on B_1 by more than {BLOWUP_MASS_TOL:e}"
        ));
    }
    if dists.windows(2).any(|w| w[1] > w[0] + 1e-12) {
        ok = false;
        rep = rep.note("sampled distance to the limit increases along the sequence");
    }
    Ok(rep.verdict(Verdict::from_bool(ok)).finish())
}
