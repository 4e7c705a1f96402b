//! Evaluable Q-valued fields with per-sheet first-order jets.

mod probe;
mod spec;

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::poly::{Poly, PolyMap};
use crate::qcore::QPoint;
use crate::weiss2d::{FourierMode, FourierPiece};

pub use probe::{singular_set_probe, ProbeGrid, SingularProbe};
pub use spec::FieldSpec;

/// Values and gradients of every sheet at one point. Gradients are stored
/// row-major, `m × n` per sheet.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub q: usize,
    pub m: usize,
    pub n: usize,
    pub values: Vec<f64>,
    pub grads: Vec<f64>,
}

impl Jet {
    pub fn zeros(q: usize, m: usize, n: usize) -> Self {
        Self {
            q,
            m,
            n,
            values: vec![0.0; q * m],
            grads: vec![0.0; q * m * n],
        }
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn grad(&self, i: usize) -> &[f64] {
        let s = self.m * self.n;
        &self.grads[i * s..(i + 1) * s]
    }

    pub fn to_qpoint(&self) -> QPoint {
        QPoint::from_flat(self.q, self.m, self.values.clone()).expect("jet shape is consistent")
    }

    /// Σ_i |f_i|².
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Σ_i |Df_i|².
    pub fn grad_norm_sq(&self) -> f64 {
        self.grads.iter().map(|v| v * v).sum()
    }

    /// Σ_i |Df_i·e − c f_i|² for a direction `e`.
    pub fn directional_defect(&self, e: &[f64], c: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.q {
            let v = self.value(i);
            let g = self.grad(i);
            for a in 0..self.m {
                let d: f64 = (0..self.n).map(|k| g[a * self.n + k] * e[k]).sum::<f64>() - c * v[a];
                acc += d * d;
            }
        }
        acc
    }
}

#[derive(Debug, Clone)]
struct HarmonicSheet {
    map: PolyMap,
    /// `∂_k` of component `a` at index `a * n + k`.
    partials: Vec<Poly>,
}

impl HarmonicSheet {
    fn new(map: PolyMap, n: usize) -> Self {
        let partials = map
            .components
            .iter()
            .flat_map(|p| (0..n).map(move |k| p.derivative(k)))
            .collect();
        Self { map, partials }
    }

    fn write(&self, x: &[f64], val: &mut [f64], grad: &mut [f64]) {
        self.map.eval_into(x, val);
        for (g, p) in grad.iter_mut().zip(&self.partials) {
            *g = p.eval(x);
        }
    }

    fn add(&self, x: &[f64], val: &mut [f64], grad: &mut [f64]) {
        for (v, p) in val.iter_mut().zip(&self.map.components) {
            *v += p.eval(x);
        }
        for (g, p) in grad.iter_mut().zip(&self.partials) {
            *g += p.eval(x);
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Trivial,
    Harmonic(Vec<HarmonicSheet>),
    Branch {
        k: u32,
        q: u32,
        amp: f64,
    },
    Superpose {
        base: Arc<QField>,
        h: HarmonicSheet,
    },
    Wound(Vec<FourierPiece>),
    Blowup {
        base: Arc<QField>,
        y: Vec<f64>,
        rho: f64,
        scale: f64,
    },
    HomogeneousExtension {
        base: Arc<QField>,
        kappa: f64,
    },
}

/// A Q-valued map from R^n to A_Q(R^m).
#[derive(Debug, Clone)]
pub struct QField {
    n: usize,
    m: usize,
    q: usize,
    kind: Kind,
    branch_set: Vec<Vec<f64>>,
    tag: String,
}

impl QField {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn branch_set(&self) -> &[Vec<f64>] {
        &self.branch_set
    }

    /// Describes the construction; for spec-built fields this is the spec.
    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    /// True when the field is Q⟦0⟧ by construction.
    pub fn is_trivial(&self) -> bool {
        match &self.kind {
            Kind::Trivial => true,
            Kind::Harmonic(s) => s.iter().all(|h| h.map.components.iter().all(Poly::is_zero)),
            Kind::Wound(p) => p.iter().all(|p| {
                p.a0.iter().all(|&v| v == 0.0) && p.modes.iter().all(FourierMode::is_zero)
            }),
            Kind::Blowup { base, .. } | Kind::HomogeneousExtension { base, .. } => {
                base.is_trivial()
            }
            _ => false,
        }
    }

    /// The Fourier pieces when the field is a wound competitor.
    pub fn pieces(&self) -> Option<&[FourierPiece]> {
        match &self.kind {
            Kind::Wound(p) => Some(p),
            _ => None,
        }
    }

    pub fn trivial(q: usize, n: usize, m: usize) -> Result<Self> {
        if q == 0 || n < 2 || m == 0 {
            return Err(Error::Parameter(format!(
                "trivial field needs Q ≥ 1, n ≥ 2, m ≥ 1 (got Q={q}, n={n}, m={m})"
            )));
        }
        Ok(Self {
            n,
            m,
            q,
            kind: Kind::Trivial,
            branch_set: vec![],
            tag: format!("trivial:{q}"),
        })
    }

    /// Q sheets, each a harmonic polynomial map R^n → R^m.
    pub fn harmonic_sheets(sheets: Vec<PolyMap>, n: usize) -> Result<Self> {
        let q = sheets.len();
        if q == 0 {
            return Err(Error::Parameter("need at least one sheet".into()));
        }
        let m = sheets[0].m();
        if let Some(s) = sheets.iter().find(|s| s.m() != m) {
            return Err(Error::DimensionMismatch(format!(
                "sheet `{s}` has {} components, expected {m}",
                s.m()
            )));
        }
        if let Some(s) = sheets.iter().find(|s| s.nvars() > n) {
            return Err(Error::DimensionMismatch(format!(
                "sheet `{s}` uses x{} but n = {n}",
                s.nvars()
            )));
        }
        if n < 2 {
            return Err(Error::Parameter(
                "domain dimension must be at least 2".into(),
            ));
        }
        for s in &sheets {
            s.check_harmonic(n)?;
        }
        let tag = format!(
            "harmonic/{n}:{}",
            sheets
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join("|")
        );
        let sheets = sheets
            .into_iter()
            .map(|s| HarmonicSheet::new(s, n))
            .collect();
        Ok(Self {
            n,
            m,
            q,
            kind: Kind::Harmonic(sheets),
            branch_set: vec![],
            tag,
        })
    }

    /// Σ_i ⟦amp·r^{k/Q}(cos(k(θ+2πi)/Q), sin(k(θ+2πi)/Q))⟧ on R².
    pub fn branch(k: u32, q: u32, amp: f64) -> Result<Self> {
        if k == 0 || q == 0 {
            return Err(Error::Parameter(format!(
                "branch field needs k, Q ≥ 1 (got k={k}, Q={q})"
            )));
        }
        if !amp.is_finite() {
            return Err(Error::Parameter(format!(
                "amplitude must be finite (got {amp})"
            )));
        }
        Ok(Self {
            n: 2,
            m: 2,
            q: q as usize,
            kind: Kind::Branch { k, q, amp },
            branch_set: vec![vec![0.0, 0.0]],
            tag: format!("branch:{k}/{q}:{amp}"),
        })
    }

    /// Adds the single-valued harmonic map `h` to every sheet.
    pub fn superpose(base: QField, h: PolyMap) -> Result<Self> {
        if h.m() != base.m {
            return Err(Error::DimensionMismatch(format!(
                "h has {} components, field has m = {}",
                h.m(),
                base.m
            )));
        }
        if h.nvars() > base.n {
            return Err(Error::DimensionMismatch(format!(
                "h uses x{} but n = {}",
                h.nvars(),
                base.n
            )));
        }
        h.check_harmonic(base.n)?;
        let tag = format!("superpose({},{h})", base.tag);
        Ok(Self {
            n: base.n,
            m: base.m,
            q: base.q,
            branch_set: base.branch_set.clone(),
            kind: Kind::Superpose {
                h: HarmonicSheet::new(h, base.n),
                base: Arc::new(base),
            },
            tag,
        })
    }

    /// The wound competitor built sheetwise from unwound harmonic
    /// extensions: piece j with winding Q_j contributes the sheets
    /// ζ_j(r^{1/Q_j}, (θ+2πi)/Q_j), i = 0..Q_j−1.
    pub fn wound(pieces: Vec<FourierPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Boundary("no pieces".into()));
        }
        let m = pieces[0].a0.len();
        for p in &pieces {
            p.validate(m)?;
        }
        let q = pieces.iter().map(|p| p.winding as usize).sum();
        let tag = format!(
            "wound[{}]",
            pieces
                .iter()
                .map(|p| p.winding.to_string())
                .collect::<Vec<_>>()
                .join("+")
        );
        Ok(Self {
            n: 2,
            m,
            q,
            kind: Kind::Wound(pieces),
            branch_set: vec![vec![0.0, 0.0]],
            tag,
        })
    }

    /// f_{y,ρ}(x) = ρ^{n/2} f(y+ρx) / norm, where `norm` is the L² norm of f
    /// on B_ρ(y).
    pub fn blowup_rescale(f: &QField, y: &[f64], rho: f64, norm: f64) -> Result<Self> {
        if y.len() != f.n {
            return Err(Error::DimensionMismatch(format!(
                "centre has {} coordinates, n = {}",
                y.len(),
                f.n
            )));
        }
        if !(rho > 0.0) {
            return Err(Error::Parameter(format!("ρ must be positive (got {rho})")));
        }
        if !(norm > 0.0) {
            return Err(Error::ZeroMass {
                center: y.to_vec(),
                radius: rho,
            });
        }
        let scale = rho.powf(f.n as f64 / 2.0) / norm;
        Ok(Self::rescaled(
            f,
            y,
            rho,
            scale,
            format!("blowup({},{y:?},{rho})", f.tag),
        ))
    }

    /// x ↦ scale · f(y + ρx); used for blow-ups and for f_{x,r} = f(x+r·)/r^κ.
    pub fn rescaled(f: &QField, y: &[f64], rho: f64, scale: f64, tag: String) -> Self {
        let branch_set = f
            .branch_set
            .iter()
            .map(|b| b.iter().zip(y).map(|(bi, yi)| (bi - yi) / rho).collect())
            .collect();
        Self {
            n: f.n,
            m: f.m,
            q: f.q,
            kind: Kind::Blowup {
                base: Arc::new(f.clone()),
                y: y.to_vec(),
                rho,
                scale,
            },
            branch_set,
            tag,
        }
    }

    /// x ↦ |x|^κ f(x/|x|), the κ-homogeneous extension of the trace of `f`
    /// on the unit sphere.
    pub fn homogeneous_extension(f: &QField, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::Parameter(format!(
                "κ must be positive (got {kappa})"
            )));
        }
        Ok(Self {
            n: f.n,
            m: f.m,
            q: f.q,
            kind: Kind::HomogeneousExtension {
                base: Arc::new(f.clone()),
                kappa,
            },
            branch_set: vec![vec![0.0; f.n]],
            tag: format!("hext({},{kappa})", f.tag),
        })
    }

    pub fn eval(&self, x: &[f64]) -> QPoint {
        let mut jet = Jet::zeros(self.q, self.m, self.n);
        self.jet_into(x, &mut jet);
        jet.to_qpoint()
    }

    pub fn jet(&self, x: &[f64]) -> Jet {
        let mut jet = Jet::zeros(self.q, self.m, self.n);
        self.jet_into(x, &mut jet);
        jet
    }

    /// Writes the jet at `x` into `out`, which must have this field's shape.
    pub fn jet_into(&self, x: &[f64], out: &mut Jet) {
        debug_assert_eq!(x.len(), self.n);
        let (m, n) = (self.m, self.n);
        match &self.kind {
            Kind::Trivial => {
                out.values.fill(0.0);
                out.grads.fill(0.0);
            }
            Kind::Harmonic(sheets) => {
                for (i, s) in sheets.iter().enumerate() {
                    s.write(
                        x,
                        &mut out.values[i * m..(i + 1) * m],
                        &mut out.grads[i * m * n..(i + 1) * m * n],
                    );
                }
            }
            Kind::Branch { k, q, amp } => branch_jet(*k, *q, *amp, x, out),
            Kind::Superpose { base, h } => {
                base.jet_into(x, out);
                for i in 0..self.q {
                    h.add(
                        x,
                        &mut out.values[i * m..(i + 1) * m],
                        &mut out.grads[i * m * n..(i + 1) * m * n],
                    );
                }
            }
            Kind::Wound(pieces) => wound_jet(pieces, x, out),
            Kind::Blowup {
                base,
                y,
                rho,
                scale,
            } => {
                let z: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| yi + rho * xi).collect();
                base.jet_into(&z, out);
                out.values.iter_mut().for_each(|v| *v *= scale);
                out.grads.iter_mut().for_each(|g| *g *= scale * rho);
            }
            Kind::HomogeneousExtension { base, kappa } => {
                let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if s == 0.0 {
                    out.values.fill(0.0);
                    out.grads.fill(0.0);
                    return;
                }
                let u: Vec<f64> = x.iter().map(|v| v / s).collect();
                base.jet_into(&u, out);
                let sk = s.powf(*kappa);
                let sk1 = sk / s;
                for i in 0..self.q {
                    for a in 0..m {
                        let v = out.values[i * m + a];
                        let row = &mut out.grads[(i * m + a) * n..(i * m + a + 1) * n];
                        let gu: f64 = row.iter().zip(&u).map(|(g, ui)| g * ui).sum();
                        for k in 0..n {
                            row[k] = kappa * sk1 * v * u[k] + sk1 * (row[k] - gu * u[k]);
                        }
                        out.values[i * m + a] = sk * v;
                    }
                }
            }
        }
    }
}

fn branch_jet(k: u32, q: u32, amp: f64, x: &[f64], out: &mut Jet) {
    let (x0, x1) = (x[0], x[1]);
    let r = x0.hypot(x1);
    let theta = x1.atan2(x0);
    let alpha = k as f64 / q as f64;
    let rk = amp * r.powf(alpha);
    for i in 0..q as usize {
        let phase = k as f64 * (theta + 2.0 * PI * i as f64) / q as f64;
        let (s, c) = phase.sin_cos();
        let (wr, wi) = (rk * c, rk * s);
        out.values[2 * i] = wr;
        out.values[2 * i + 1] = wi;
        // g' = α w / z
        let (gr, gi) = if r > 0.0 {
            let d = r * r;
            (
                alpha * (wr * x0 + wi * x1) / d,
                alpha * (wi * x0 - wr * x1) / d,
            )
        } else if k == q {
            (amp * c, amp * s)
        } else {
            (0.0, 0.0)
        };
        let g = &mut out.grads[4 * i..4 * i + 4];
        g[0] = gr;
        g[1] = -gi;
        g[2] = gi;
        g[3] = gr;
    }
}

fn wound_jet(pieces: &[FourierPiece], x: &[f64], out: &mut Jet) {
    let m = out.m;
    let (x0, x1) = (x[0], x[1]);
    let r = x0.hypot(x1);
    let theta = x1.atan2(x0);
    let (st, ct) = theta.sin_cos();
    let mut sheet = 0;
    for p in pieces {
        let qj = p.winding as f64;
        let rho = r.powf(1.0 / qj);
        for i in 0..p.winding as usize {
            let phi = (theta + 2.0 * PI * i as f64) / qj;
            let val = &mut out.values[sheet * m..(sheet + 1) * m];
            for (v, a0) in val.iter_mut().zip(&p.a0) {
                *v = a0 / 2.0;
            }
            let grad = &mut out.grads[sheet * m * 2..(sheet + 1) * m * 2];
            grad.fill(0.0);
            for mode in &p.modes {
                let rl = rho.powi(mode.l as i32);
                let l = mode.l as f64;
                let (s, c) = (l * phi).sin_cos();
                for a in 0..m {
                    let ang = mode.a[a] * s + mode.b[a] * c;
                    let dang = mode.a[a] * c - mode.b[a] * s;
                    val[a] += rl * ang;
                    if r > 0.0 {
                        // ∂_r and (1/r)∂_θ, both carrying ρ^ℓ / (Q_j r)
                        let f = l * rl / (qj * r);
                        let dr = f * ang;
                        let dt = f * dang;
                        grad[a * 2] += ct * dr - st * dt;
                        grad[a * 2 + 1] += st * dr + ct * dt;
                    }
                }
            }
            sheet += 1;
        }
    }
}

/// Deterministic random wound field: a random composition of Q into
/// windings, zero means, and mode-ℓ coefficients uniform in ±ℓ^{−decay}.
pub fn random_wound_field(seed: u64, q: usize, l_max: usize, decay: f64) -> Result<QField> {
    Ok(QField::wound(random_wound_pieces(seed, q, l_max, decay)?)?
        .with_tag(format!("wound:{seed},{q},{l_max},{decay}")))
}

pub fn random_wound_pieces(
    seed: u64,
    q: usize,
    l_max: usize,
    decay: f64,
) -> Result<Vec<FourierPiece>> {
    if q == 0 {
        return Err(Error::Parameter("Q must be at least 1".into()));
    }
    if !(decay > 1.0) {
        return Err(Error::Parameter(format!(
            "decay must exceed 1 (got {decay})"
        )));
    }
    let m = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = q;
    let mut pieces = Vec::new();
    while remaining > 0 {
        let w = rng.random_range(1..=remaining);
        remaining -= w;
        let modes = (1..=l_max)
            .map(|l| {
                let bound = (l as f64).powf(-decay);
                let mut draw = || {
                    (0..m)
                        .map(|_| bound * rng.random_range(-1.0..=1.0))
                        .collect::<Vec<f64>>()
                };
                let a = draw();
                let b = draw();
                FourierMode { l: l as u32, a, b }
            })
            .collect();
        pieces.push(FourierPiece {
            winding: w as u32,
            a0: vec![0.0; m],
            modes,
        });
    }
    Ok(pieces)
}
