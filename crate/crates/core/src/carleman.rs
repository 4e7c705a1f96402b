//! Carleman weights, both sides of the weighted estimates and their proof
//! chain, the three-sphere and doubling inequalities, and bent weights.

use serde::Serialize;

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::fields::QField;
use crate::quadrature::{integrate, QuadratureSpec, Region};
use crate::report::{CheckReport, Verdict};
use crate::variational::l2_mass;

/// Exponent of |x| in the ε-term of the left side: 2τ+2−2ε (proof) or
/// 2τ+2−ε (statement).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExponentVariant {
    #[default]
    Proof,
    Statement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightSpec {
    pub tau: f64,
    pub eps: f64,
    pub variant: ExponentVariant,
}

impl WeightSpec {
    pub fn new(tau: f64, eps: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Parameter(format!("τ must be positive (got {tau})")));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Parameter(format!(
                "ε must be non-negative (got {eps})"
            )));
        }
        Ok(Self {
            tau,
            eps,
            variant: ExponentVariant::Proof,
        })
    }

    pub fn with_variant(mut self, variant: ExponentVariant) -> Self {
        self.variant = variant;
        self
    }

    /// η = (2τ − n + 2)/2.
    pub fn eta(&self, n: usize) -> f64 {
        (2.0 * self.tau - n as f64 + 2.0) / 2.0
    }

    pub fn lhs_exponent(&self, variant: ExponentVariant) -> f64 {
        match variant {
            ExponentVariant::Proof => 2.0 * self.tau + 2.0 - 2.0 * self.eps,
            ExponentVariant::Statement => 2.0 * self.tau + 2.0 - self.eps,
        }
    }
}

/// ε = 1/sqrt(1 + log(hi/lo)²) for a cutoff plateau [lo, hi].
pub fn corollary_eps(lo: f64, hi: f64) -> f64 {
    1.0 / (1.0 + (hi / lo).ln().powi(2)).sqrt()
}

/// Two-resolution relative disagreement above which a report is flagged.
pub const CONVERGENCE_TOL: f64 = 1e-4;

fn check_cutoff(f: &QField, chi: &CutoffProfile) -> Result<()> {
    if chi.center.len() != f.n() {
        return Err(Error::DimensionMismatch(format!(
            "cutoff centre has {} coordinates, n = {}",
            chi.center.len(),
            f.n()
        )));
    }
    if !(chi.a_in > 0.0) {
        return Err(Error::Precondition(
            "the cutoff must vanish near its centre (a_in > 0)".into(),
        ));
    }
    Ok(())
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Columns of the sweep table, one row per report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub field: String,
    pub tau: f64,
    pub eps: f64,
    pub r_params: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub case: String,
    pub resolution: String,
    pub verdict: Verdict,
}

/// Integrates `g` (returning [lhs terms…, rhs]) at `quad` and its doubling
/// and assembles the common part of a Carleman-type report.
fn two_resolution<const K: usize, G>(
    f: &QField,
    chi: &CutoffProfile,
    quad: &QuadratureSpec,
    g: G,
) -> Result<([f64; K], [f64; K])>
where
    G: Fn(&crate::quadrature::Sample, f64, f64) -> [f64; K] + Sync + Send,
{
    let breaks = chi.breakpoints();
    let run = |q: &QuadratureSpec| {
        integrate(f, &chi.region(), q, &breaks, |s| {
            let (c, dc) = chi.radial(s.r);
            g(s, c, dc.abs())
        })
    };
    Ok((run(quad)?, run(&quad.doubled())?))
}

fn finish_sides(
    mut rep: CheckReport,
    lhs: (f64, f64),
    rhs: (f64, f64),
    quad: &QuadratureSpec,
) -> CheckReport {
    let (r0, r1) = (quad.label(), quad.doubled().label());
    let (q0, q1) = (ratio(lhs.0, rhs.0), ratio(lhs.1, rhs.1));
    rep = rep
        .qty("lhs", lhs.0, &r0)
        .qty("rhs", rhs.0, &r0)
        .qty("ratio", q0, &r0)
        .qty("lhs", lhs.1, &r1)
        .qty("rhs", rhs.1, &r1)
        .qty("ratio", q1, &r1);
    // differences below 1e-12·rhs are rounding, not drift
    let floor = 1e-12 * rhs.0.abs().max(rhs.1.abs());
    let drift = ((lhs.0 - lhs.1).abs()
        / lhs
            .0
            .abs()
            .max(lhs.1.abs())
            .max(floor)
            .max(f64::MIN_POSITIVE))
    .max(rel_diff(rhs.0, rhs.1));
    rep = rep.qty("resolution_drift", drift, "exact");
    if rhs.0 == 0.0 && lhs.0 > 0.0 {
        return rep
            .note("rhs vanishes while lhs is positive")
            .verdict(Verdict::Fail);
    }
    if drift > CONVERGENCE_TOL {
        return rep
            .note(format!(
                "quadrature not converged: two-resolution drift {drift:e}"
            ))
            .verdict(Verdict::Diagnostic);
    }
    rep.verdict(Verdict::from_bool(q0.is_finite()))
}

/// lhs = ∫χ Σ(ε²|f|²/|x|^E + |Df·x − ηf|²/|x|^{2τ+2}),
/// rhs = ∫|Dχ| Σ(|Df|²/|x|^{2τ−1} + |f|²/|x|^{2τ+1}).
pub fn carleman_sides(
    f: &QField,
    w: &WeightSpec,
    chi: &CutoffProfile,
    quad: &QuadratureSpec,
) -> Result<CheckReport> {
    check_cutoff(f, chi)?;
    let eta = w.eta(f.n());
    let (tau, eps) = (w.tau, w.eps);
    let (ep, es) = (
        w.lhs_exponent(ExponentVariant::Proof),
        w.lhs_exponent(ExponentVariant::Statement),
    );
    let (a, b) = two_resolution::<4, _>(f, chi, quad, |s, c, dc| {
        let r = s.r;
        let m = s.jet.norm_sq();
        let sq = s.jet.directional_defect(s.rel, eta) / r.powf(2.0 * tau + 2.0);
        let rhs =
            dc * (s.jet.grad_norm_sq() / r.powf(2.0 * tau - 1.0) + m / r.powf(2.0 * tau + 1.0));
        [
            c * sq,
            c * eps * eps * m / r.powf(ep),
            c * eps * eps * m / r.powf(es),
            rhs,
        ]
    })?;
    let pick = |v: &[f64; 4]| match w.variant {
        ExponentVariant::Proof => v[0] + v[1],
        ExponentVariant::Statement => v[0] + v[2],
    };
    let res = quad.label();
    let mut rep = CheckReport::new("carleman", f.tag())
        .param_num("tau", tau)
        .param_num("eps", eps)
        .param_num("eta", eta)
        .param("lhs_exponent_variant", w.variant)
        .param("cutoff", chi)
        .param("quadrature", quad)
        .qty("square_term", a[0], &res)
        .qty("eps_term_proof", a[1], &res)
        .qty("eps_term_statement", a[2], &res);
    if eps > 0.0 {
        rep = rep.note("ε-exponent variants differ for ε > 0; both ε-terms are reported");
    }
    Ok(finish_sides(rep, (pick(&a), pick(&b)), (a[3], b[3]), quad).finish())
}

/// The square term alone: lhs = ∫χ Σ|Df·x − ηf|²/|x|^{2τ+2}.
pub fn first_carleman_sides(
    f: &QField,
    tau: f64,
    chi: &CutoffProfile,
    quad: &QuadratureSpec,
) -> Result<CheckReport> {
    check_cutoff(f, chi)?;
    let w = WeightSpec::new(tau, 0.0)?;
    let eta = w.eta(f.n());
    let (a, b) = two_resolution::<2, _>(f, chi, quad, |s, c, dc| {
        let r = s.r;
        [
            c * s.jet.directional_defect(s.rel, eta) / r.powf(2.0 * tau + 2.0),
            dc * (s.jet.grad_norm_sq() / r.powf(2.0 * tau - 1.0)
                + s.jet.norm_sq() / r.powf(2.0 * tau + 1.0)),
        ]
    })?;
    let rep = CheckReport::new("first-carleman", f.tag())
        .param_num("tau", tau)
        .param_num("eta", eta)
        .param("cutoff", chi)
        .param("quadrature", quad);
    Ok(finish_sides(rep, (a[0], b[0]), (a[1], b[1]), quad).finish())
}

/// lhs = ∫χ Σ(|∂_r f|²/|x|^{2τ} − η²|f|²/|x|^{2τ+2}) against the same
/// right side as [`carleman_sides`].
pub fn pre_carleman_sides(
    f: &QField,
    tau: f64,
    chi: &CutoffProfile,
    quad: &QuadratureSpec,
) -> Result<CheckReport> {
    check_cutoff(f, chi)?;
    let w = WeightSpec::new(tau, 0.0)?;
    let eta = w.eta(f.n());
    let (a, b) = two_resolution::<2, _>(f, chi, quad, |s, c, dc| {
        let r = s.r;
        [
            c * (s.jet.directional_defect(s.dir, 0.0) / r.powf(2.0 * tau)
                - eta * eta * s.jet.norm_sq() / r.powf(2.0 * tau + 2.0)),
            dc * (s.jet.grad_norm_sq() / r.powf(2.0 * tau - 1.0)
                + s.jet.norm_sq() / r.powf(2.0 * tau + 1.0)),
        ]
    })?;
    let rep = CheckReport::new("pre-carleman", f.tag())
        .param_num("tau", tau)
        .param_num("eta", eta)
        .param("cutoff", chi)
        .param("quadrature", quad);
    // lhs may be negative; the ratio then trivially satisfies any bound
    Ok(finish_sides(rep, (a[0], b[0]), (a[1], b[1]), quad).finish())
}

fn annular_mass(f: &QField, x: &[f64], r: f64, quad: &QuadratureSpec) -> Result<f64> {
    l2_mass(f, &Region::annulus(x, r, 2.0 * r), quad)
}

/// Entire fields are checked as if defined on B_4.
pub const DEFAULT_DOMAIN_RADIUS: f64 = 4.0;

/// [1/(1+log(r3/r2)²) + 1/(1+log(r2/r1)²)]·M(r2)/r2^{2τ} against
/// M(r1)/r1^{2τ} + M(r3)/r3^{2τ}, with M(r) the L² mass on B_{2r}∖B_r(x).
pub fn three_sphere_check(
    f: &QField,
    x: &[f64],
    radii: [f64; 3],
    tau: f64,
    domain_radius: f64,
    quad: &QuadratureSpec,
) -> Result<CheckReport> {
    let [r1, r2, r3] = radii;
    let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(0.0 < r1 && r1 < r2 && r2 < r3) {
        return Err(Error::Precondition(format!(
            "radii must increase: r1={r1}, r2={r2}, r3={r3}"
        )));
    }
    if !(r3 < (domain_radius - xn) / 2.0) {
        return Err(Error::Precondition(format!(
            "r3 = {r3} must be below (R − |x|)/2 = {}",
            (domain_radius - xn) / 2.0
        )));
    }
    if !(r2 / r1 > 2.0) {
        return Err(Error::Precondition(format!(
            "ratio r2/r1 = {} must exceed 2",
            r2 / r1
        )));
    }
    if !(r3 / r2 > 2.0) {
        return Err(Error::Precondition(format!(
            "ratio r3/r2 = {} must exceed 2",
            r3 / r2
        )));
    }
    if !(tau > 0.0) {
        return Err(Error::Parameter(format!("τ must be positive (got {tau})")));
    }
    let (l32, l21) = ((r3 / r2).ln(), (r2 / r1).ln());
    let case = if l32 > l21 { "I" } else { "II" };
    let weight = 1.0 / (1.0 + l32 * l32) + 1.0 / (1.0 + l21 * l21);
    let m = [
        annular_mass(f, x, r1, quad)?,
        annular_mass(f, x, r2, quad)?,
        annular_mass(f, x, r3, quad)?,
    ];
    let lhs = weight * m[1] / r2.powf(2.0 * tau);
    let rhs = m[0] / r1.powf(2.0 * tau) + m[2] / r3.powf(2.0 * tau);
    let c = ratio(lhs, rhs);
    let res = quad.label();
    let mut rep = CheckReport::new("three-sphere", f.tag())
        .param("center", x)
        .param("radii", radii)
        .param_num("tau", tau)
        .param_num("domain_radius", domain_radius)
        .param("case", case)
        .param("quadrature", quad)
        .qty("mass_r1", m[0], &res)
        .qty("mass_r2", m[1], &res)
        .qty("mass_r3", m[2], &res)
        .qty("lhs", lhs, &res)
        .qty("rhs", rhs, &res)
        .qty("c_est", c, &res);
    if rhs == 0.0 && lhs > 0.0 {
        rep = rep.note("rhs vanishes while lhs is positive");
    }
    Ok(rep.verdict(Verdict::from_bool(c.is_finite())).finish())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingOptions {
    /// η in the absorption step; τ = (2κ + n + 4η)/2.
    pub eta: f64,
    /// Further dyadic levels evaluated once ε^{2η} < 1/2.
    pub scan: usize,
    /// Relative change allowed between the last two levels.
    pub stability: f64,
}

impl Default for DoublingOptions {
    fn default() -> Self {
        Self {
            eta: 0.05,
            scan: 4,
            stability: 1e-2,
        }
    }
}

/// ∫_{B_{2ε}(x)}|f|² / ∫_{B_ε(x)}|f|² at dyadic ε ≤ r, starting where
/// ε^{2η} < 1/2.
pub fn doubling_check(
    f: &QField,
    x: &[f64],
    r: f64,
    kappa: f64,
    opts: &DoublingOptions,
    quad: &QuadratureSpec,
) -> Result<CheckReport> {
    if !(r > 0.0) || !(opts.eta > 0.0) {
        return Err(Error::Parameter(format!(
            "need r > 0 and η > 0 (got r = {r}, η = {})",
            opts.eta
        )));
    }
    let n = f.n() as f64;
    let mut eps = r;
    while eps.powf(2.0 * opts.eta) >= 0.5 {
        eps /= 2.0;
    }
    let r_x = eps;
    let res = quad.label();
    let mut rep = CheckReport::new("doubling", f.tag())
        .param("center", x)
        .param_num("r", r)
        .param_num("kappa", kappa)
        .param_num("eta", opts.eta)
        .param_num("tau", (2.0 * kappa + n + 4.0 * opts.eta) / 2.0)
        .param("scan", opts.scan)
        .param("quadrature", quad)
        .qty("r_x", r_x, "exact");
    let mut ests = Vec::new();
    for _ in 0..=opts.scan {
        let inner = l2_mass(f, &Region::ball(x, eps), quad)?;
        let outer = l2_mass(f, &Region::ball(x, 2.0 * eps), quad)?;
        if !(inner > 1e-300) {
            return Ok(rep
                .note(format!(
                    "trivial near x: ∫_{{B_ε}}|f|² underflows at ε = {eps:e}"
                ))
                .verdict(Verdict::Diagnostic)
                .finish());
        }
        let c = outer / inner;
        rep = rep.qty(&format!("c_est@{eps:e}"), c, &res);
        ests.push(c);
        eps /= 2.0;
    }
    let last = ests[ests.len() - 1];
    let prev = ests[ests.len().saturating_sub(2)];
    let change = rel_diff(last, prev);
    Ok(rep
        .qty("c_est", last, &res)
        .qty("relative_change", change, "exact")
        .verdict(Verdict::from_bool(
            last.is_finite() && change <= opts.stability,
        ))
        .finish())
}

/// φ(t) = t + δ b(t), b(t) = A + B(t − t_m)² with t = log|x| and
/// t_m = log sqrt(r1 r2). The three conditions are
/// φ ≥ (1−δ)t on [log r1, log 2r1] ∪ [log r2, log 2r2],
/// φ ≤ (1+2δ)t on [t_m, t_m + log 2], and
/// |φ′ − 1| + |φ″| ≤ Cδ (the display has |φ′| + |φ″|, which cannot hold for
/// φ ≈ t; the deviation from the identity is what is bounded here).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BentWeight {
    pub delta: f64,
    pub r1: f64,
    pub r2: f64,
    pub t_m: f64,
    pub a: f64,
    pub b: f64,
    /// sup |φ′ − 1| over [log r1, log 2r2].
    pub sup_dphi: f64,
    pub sup_ddphi: f64,
}

impl BentWeight {
    pub fn phi(&self, t: f64) -> f64 {
        t + self.delta * (self.a + self.b * (t - self.t_m).powi(2))
    }

    pub fn dphi(&self, t: f64) -> f64 {
        1.0 + 2.0 * self.delta * self.b * (t - self.t_m)
    }

    pub fn ddphi(&self, _t: f64) -> f64 {
        2.0 * self.delta * self.b
    }

    /// sup|1 − φ′| + sup|φ″|.
    pub fn bulk_coefficient(&self) -> f64 {
        self.sup_dphi + self.sup_ddphi
    }
}

pub fn build_phi_delta(delta: f64, r1: f64, r2: f64) -> Result<BentWeight> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::BentWeight(format!(
            "δ must lie in [0, 1) (got {delta})"
        )));
    }
    if !(r1 > 0.0 && r2 < 1.0 && r2 / r1 > 16.0) {
        return Err(Error::BentWeight(format!(
            "need 0 < r1, r2 < 1 and r2/r1 > 16 (got r1 = {r1}, r2 = {r2})"
        )));
    }
    let ln2 = 2f64.ln();
    let (t1, t2) = (r1.ln(), r2.ln());
    let t_m = (t1 + t2) / 2.0;
    let samples = 256;
    // b(t) = 2t_m + B[(t−t_m)² − ln2²] must dominate −t on both end windows
    let mut need: f64 = 0.0;
    for t0 in [t1, t2] {
        for k in 0..=samples {
            let t = t0 + ln2 * k as f64 / samples as f64;
            let gap = (t - t_m).powi(2) - ln2 * ln2;
            need = need.max((-t - 2.0 * t_m) / gap);
        }
    }
    let b = 1.01 * need;
    let a = 2.0 * t_m - b * ln2 * ln2;
    let span = (t1 - t_m).abs().max((t2 + ln2 - t_m).abs());
    let w = BentWeight {
        delta,
        r1,
        r2,
        t_m,
        a,
        b,
        sup_dphi: 2.0 * delta * b * span,
        sup_ddphi: 2.0 * delta * b,
    };

    let mut violated = Vec::new();
    for k in 0..=samples {
        let s = ln2 * k as f64 / samples as f64;
        for t in [t1 + s, t2 + s] {
            if w.phi(t) < (1.0 - delta) * t - 1e-12 * t.abs() {
                violated.push(format!("φ(t) ≥ (1−δ)t fails at t = {t}"));
            }
        }
        let t = t_m + s;
        if w.phi(t) > (1.0 + 2.0 * delta) * t + 1e-12 * t.abs() {
            violated.push(format!("φ(t) ≤ (1+2δ)t fails at t = {t}"));
        }
    }
    if !(w.sup_dphi.is_finite() && w.sup_ddphi.is_finite()) {
        violated.push("derivative bounds are not finite".into());
    }
    if let Some(first) = violated.first() {
        return Err(Error::BentWeight(format!(
            "{first} ({} violations)",
            violated.len()
        )));
    }
    Ok(w)
}

/// Both sides of the modified estimate with weight e^{−2τφ(log|x|)}:
/// lhs = ∫χ Σ|∂_r f − ηf/|x||² e^{−2τφ},
/// r1 = ∫|Dχ| Σ(|x||Df|² + |f|²/|x|) e^{−2τφ},
/// r2 = ∫χ Σ(|Df|² + |f|²/|x|²) e^{−2τφ},
/// rhs = r1 + (sup|1−φ′| + sup|φ″|)·r2.
pub fn modified_carleman_sides(
    f: &QField,
    tau: f64,
    bent: &BentWeight,
    chi: &CutoffProfile,
    quad: &QuadratureSpec,
) -> Result<CheckReport> {
    check_cutoff(f, chi)?;
    let eta = (2.0 * tau - f.n() as f64 + 2.0) / 2.0;
    let coef = bent.bulk_coefficient();
    let (a, b) = two_resolution::<3, _>(f, chi, quad, |s, c, dc| {
        let r = s.r;
        let wgt = (-2.0 * tau * bent.phi(r.ln())).exp();
        let m = s.jet.norm_sq();
        let g = s.jet.grad_norm_sq();
        [
            c * s.jet.directional_defect(s.dir, eta / r) * wgt,
            dc * (r * g + m / r) * wgt,
            c * (g + m / (r * r)) * wgt,
        ]
    })?;
    let res = quad.label();
    let rep = CheckReport::new("modified-carleman", f.tag())
        .param_num("tau", tau)
        .param_num("eta", eta)
        .param("bent", bent)
        .param("cutoff", chi)
        .param("quadrature", quad)
        .qty("cutoff_term", a[1], &res)
        .qty("bulk_term", a[2], &res)
        .qty("bulk_coefficient", coef, "exact");
    Ok(finish_sides(
        rep,
        (a[0], b[0]),
        (a[1] + coef * a[2], b[1] + coef * b[2]),
        quad,
    )
    .finish())
}

/// The proof's cutoff: 1 on [2r1, r2], linear to 0 at r1 and 2r2.
pub fn bent_cutoff(center: &[f64], r1: f64, r2: f64) -> Result<CutoffProfile> {
    CutoffProfile::annulus(center, r1, 2.0 * r1, r2, 2.0 * r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldSpec;

    fn field(s: &str) -> QField {
        s.parse::<FieldSpec>().unwrap().build().unwrap()
    }

    fn chi() -> CutoffProfile {
        "annulus:0.1,0.2,0.6,0.8".parse().unwrap()
    }

    #[test]
    fn euler_identity_kills_the_square() {
        let q = QuadratureSpec::reference();
        let rep = first_carleman_sides(&field("harmonic:x1"), 1.0, &chi(), &q).unwrap();
        assert!(rep.get("lhs").unwrap() < 1e-20);
        let f = QField::branch(3, 2, 1.0).unwrap();
        let w = WeightSpec::new(1.5, 0.0).unwrap();
        let rep = carleman_sides(&f, &w, &chi(), &q).unwrap();
        assert!(rep.get("lhs").unwrap() < 1e-10);
        assert!(rep.get("rhs").unwrap() > 0.0);
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn trivial_field_sides_vanish() {
        let q = QuadratureSpec::reference();
        let w = WeightSpec::new(2.0, 0.3).unwrap();
        let rep = carleman_sides(&field("trivial:2"), &w, &chi(), &q).unwrap();
        assert_eq!(
            (rep.get("lhs"), rep.get("rhs"), rep.get("ratio")),
            (Some(0.0), Some(0.0), Some(0.0))
        );
    }

    #[test]
    fn variants_agree_without_eps() {
        let q = QuadratureSpec::reference();
        let f = QField::branch(5, 3, 1.0).unwrap();
        let p = carleman_sides(&f, &WeightSpec::new(2.0, 0.0).unwrap(), &chi(), &q).unwrap();
        let s = carleman_sides(
            &f,
            &WeightSpec::new(2.0, 0.0)
                .unwrap()
                .with_variant(ExponentVariant::Statement),
            &chi(),
            &q,
        )
        .unwrap();
        assert_eq!(p.get("lhs"), s.get("lhs"));
    }

    #[test]
    fn rejects_cutoff_touching_centre() {
        let q = QuadratureSpec::reference();
        let c: CutoffProfile = "annulus:0,0.2,0.6,0.8".parse().unwrap();
        assert!(matches!(
            first_carleman_sides(&field("harmonic:x1"), 1.0, &c, &q),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn three_sphere_homogeneous_oracle() {
        let q = QuadratureSpec::reference();
        let f = QField::branch(3, 2, 1.0).unwrap();
        let tau = 1.5 + 1.0;
        let rep = three_sphere_check(
            &f,
            &[0.0, 0.0],
            [1.0 / 64.0, 1.0 / 16.0, 0.25],
            tau,
            DEFAULT_DOMAIN_RADIUS,
            &q,
        )
        .unwrap();
        let l = 4f64.ln();
        let oracle = 1.0 / (1.0 + l * l);
        assert!((rep.get("c_est").unwrap() - oracle).abs() < 1e-8 * oracle);
        let err = three_sphere_check(&f, &[0.0, 0.0], [0.1, 0.15, 0.4], tau, 1.0, &q).unwrap_err();
        assert!(err.to_string().contains("r2/r1"));
    }

    #[test]
    fn doubling_homogeneous_oracle() {
        let q = QuadratureSpec::reference();
        let f = QField::branch(3, 2, 1.0).unwrap();
        let rep =
            doubling_check(&f, &[0.0, 0.0], 0.5, 1.5, &DoublingOptions::default(), &q).unwrap();
        assert!((rep.get("c_est").unwrap() - 32.0).abs() < 1e-9 * 32.0);
        let z = doubling_check(
            &field("trivial:2"),
            &[0.0, 0.0],
            0.5,
            1.0,
            &DoublingOptions::default(),
            &q,
        )
        .unwrap();
        assert_eq!(z.verdict, Verdict::Diagnostic);
    }

    #[test]
    fn bent_weight_conditions() {
        let w = build_phi_delta(0.05, 1e-4, 0.5).unwrap();
        assert!(w.b > 0.0);
        let flat = build_phi_delta(0.0, 1e-4, 0.5).unwrap();
        assert_eq!(flat.phi(-3.0), -3.0);
        assert_eq!(flat.bulk_coefficient(), 0.0);
        assert!(matches!(
            build_phi_delta(0.05, 0.1, 0.5),
            Err(Error::BentWeight(_))
        ));
    }

    #[test]
    fn flat_bent_weight_reduces_to_power_weight() {
        let q = QuadratureSpec::reference();
        let f = QField::branch(5, 3, 1.0).unwrap();
        let (r1, r2) = (0.01, 0.4);
        let c = bent_cutoff(&[0.0, 0.0], r1, r2).unwrap();
        let tau = 2.0;
        let flat = build_phi_delta(0.0, r1, r2).unwrap();
        let m = modified_carleman_sides(&f, tau, &flat, &c, &q).unwrap();
        let first = first_carleman_sides(&f, tau, &c, &q).unwrap();
        let (a, b) = (m.get("lhs").unwrap(), first.get("lhs").unwrap());
        assert!((a - b).abs() <= 1e-10 * b.abs(), "{a} vs {b}");
    }
}
