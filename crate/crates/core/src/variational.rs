//! Dirichlet energy, outer and inner variations, and the Caccioppoli check.

use std::sync::Arc;

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::fields::QField;
use crate::quadrature::{integrate, integrate_sphere, QuadratureSpec, Region};
use crate::report::{CheckReport, Verdict};

pub fn dirichlet_energy(f: &QField, region: &Region, quad: &QuadratureSpec) -> Result<f64> {
    let [d] = integrate(f, region, quad, &[], |s| [s.jet.grad_norm_sq()])?;
    Ok(d)
}

pub fn l2_mass(f: &QField, region: &Region, quad: &QuadratureSpec) -> Result<f64> {
    let [m] = integrate(f, region, quad, &[], |s| [s.jet.norm_sq()])?;
    Ok(m)
}

/// ∫_{∂B_r(x)} |f|².
pub fn sphere_mass(f: &QField, x: &[f64], r: f64, quad: &QuadratureSpec) -> Result<f64> {
    let [h] = integrate_sphere(f, x, r, quad, |s| [s.jet.norm_sq()])?;
    Ok(h)
}

/// ψ(x,u) together with D_xψ (m×n, row-major) and D_uψ (m×m).
#[derive(Debug, Clone)]
pub struct OuterEval {
    pub psi: Vec<f64>,
    pub dx: Vec<f64>,
    pub du: Vec<f64>,
}

impl OuterEval {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            psi: vec![0.0; m],
            dx: vec![0.0; m * n],
            du: vec![0.0; m * m],
        }
    }
}

pub type OuterFn = dyn Fn(&[f64], &[f64], &mut OuterEval) + Send + Sync;
pub type InnerFn = dyn Fn(&[f64], &mut [f64], &mut [f64]) + Send + Sync;

/// An outer deformation f_i ↦ f_i + tψ(x, f_i), compactly supported in x.
#[derive(Clone)]
pub struct OuterTestField {
    pub name: String,
    pub support: Region,
    /// C with |D_uψ| ≤ C and |ψ| + |D_xψ| ≤ C(1 + |u|).
    pub growth: f64,
    pub func: Arc<OuterFn>,
}

/// An inner deformation x ↦ x + tφ(x); `func` writes φ (n) and
/// Dφ (n×n, entry k·n + l holding ∂_l φ_k).
#[derive(Clone)]
pub struct InnerVectorField {
    pub name: String,
    pub support: Region,
    pub func: Arc<InnerFn>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterResult {
    pub value: f64,
    /// Measure of the quadrature nodes at which the growth certificate failed.
    pub growth_violation: f64,
}

/// O(f,ψ) = ∫ Σ_i ⟨Df_i : D_xψ(x,f_i)⟩ + ⟨Df_i : D_uψ(x,f_i)·Df_i⟩.
pub fn outer_variation(
    f: &QField,
    psi: &OuterTestField,
    quad: &QuadratureSpec,
) -> Result<OuterResult> {
    let (q, m, n) = (f.q(), f.m(), f.n());
    let [value, viol] = integrate(f, &psi.support, quad, &[], |s| {
        let mut ev = OuterEval::zeros(m, n);
        let mut acc = 0.0;
        let mut bad = false;
        for i in 0..q {
            let u = s.jet.value(i);
            let g = s.jet.grad(i);
            (psi.func)(s.x, u, &mut ev);
            for a in 0..m {
                for k in 0..n {
                    let mut t = ev.dx[a * n + k];
                    for b in 0..m {
                        t += ev.du[a * m + b] * g[b * n + k];
                    }
                    acc += g[a * n + k] * t;
                }
            }
            let norm = |v: &[f64]| v.iter().map(|z| z * z).sum::<f64>().sqrt();
            let c = psi.growth;
            if norm(&ev.du) > c * (1.0 + 1e-12)
                || norm(&ev.psi) + norm(&ev.dx) > c * (1.0 + norm(u)) * (1.0 + 1e-12)
            {
                bad = true;
            }
        }
        [acc, if bad { 1.0 } else { 0.0 }]
    })?;
    Ok(OuterResult {
        value,
        growth_violation: viol,
    })
}

/// I(f,φ) = 2∫ Σ_i ⟨Df_i : Df_i·Dφ⟩ − ∫ |Df|² div φ.
pub fn inner_variation(f: &QField, phi: &InnerVectorField, quad: &QuadratureSpec) -> Result<f64> {
    let (q, m, n) = (f.q(), f.m(), f.n());
    let [v] = integrate(f, &phi.support, quad, &[], |s| {
        let mut p = vec![0.0; n];
        let mut dp = vec![0.0; n * n];
        (phi.func)(s.x, &mut p, &mut dp);
        let div: f64 = (0..n).map(|k| dp[k * n + k]).sum();
        let mut acc = 0.0;
        for i in 0..q {
            let g = s.jet.grad(i);
            for a in 0..m {
                for l in 0..n {
                    let t: f64 = (0..n).map(|k| g[a * n + k] * dp[k * n + l]).sum();
                    acc += 2.0 * g[a * n + l] * t;
                }
            }
        }
        [acc - s.jet.grad_norm_sq() * div]
    })?;
    Ok(v)
}

/// χ(x) = (1 − |x−c|²/R²)^4 on B_R(c), with gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Bump {
    pub fn eval(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let r2 = self.radius * self.radius;
        let s2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            / r2;
        if s2 >= 1.0 {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return 0.0;
        }
        let t = 1.0 - s2;
        let d = -8.0 * t * t * t / r2;
        for (g, (a, c)) in grad.iter_mut().zip(x.iter().zip(&self.center)) {
            *g = d * (a - c);
        }
        t.powi(4)
    }

    pub fn region(&self) -> Region {
        Region::ball(&self.center, self.radius)
    }
}

/// ψ = χu, ψ = χv (constant v) and ψ_a = χ sin(u_a + x_1).
pub fn outer_battery(n: usize, m: usize, bump: &Bump) -> Vec<OuterTestField> {
    let b = Arc::new(bump.clone());
    let max_grad = 8.0 / bump.radius;
    let mut out = Vec::new();

    let bb = b.clone();
    out.push(OuterTestField {
        name: "chi_u".into(),
        support: bump.region(),
        growth: 1.0 + max_grad,
        func: Arc::new(move |x, u, ev| {
            let mut g = vec![0.0; n];
            let c = bb.eval(x, &mut g);
            ev.du.fill(0.0);
            for a in 0..m {
                ev.psi[a] = c * u[a];
                ev.du[a * m + a] = c;
                for k in 0..n {
                    ev.dx[a * n + k] = g[k] * u[a];
                }
            }
        }),
    });

    let bb = b.clone();
    let v: Vec<f64> = (0..m).map(|a| 1.0 / (a + 1) as f64).collect();
    let vn = v.iter().map(|z| z * z).sum::<f64>().sqrt();
    out.push(OuterTestField {
        name: "chi_const".into(),
        support: bump.region(),
        growth: vn * (1.0 + max_grad),
        func: Arc::new(move |x, _u, ev| {
            let mut g = vec![0.0; n];
            let c = bb.eval(x, &mut g);
            ev.du.fill(0.0);
            for a in 0..m {
                ev.psi[a] = c * v[a];
                for k in 0..n {
                    ev.dx[a * n + k] = g[k] * v[a];
                }
            }
        }),
    });

    let bb = b;
    out.push(OuterTestField {
        name: "chi_sin".into(),
        support: bump.region(),
        growth: (m as f64).sqrt() * (2.0 + max_grad),
        func: Arc::new(move |x, u, ev| {
            let mut g = vec![0.0; n];
            let c = bb.eval(x, &mut g);
            ev.du.fill(0.0);
            for a in 0..m {
                let (s, co) = (u[a] + x[0]).sin_cos();
                ev.psi[a] = c * s;
                ev.du[a * m + a] = c * co;
                for k in 0..n {
                    ev.dx[a * n + k] = g[k] * s;
                }
                ev.dx[a * n] += c * co;
            }
        }),
    });
    out
}

/// φ = χ·g for g a dilation about the bump centre, a translation, a
/// rotation in the x1x2 plane, and a quadratic polynomial field.
pub fn inner_battery(n: usize, bump: &Bump) -> Vec<InnerVectorField> {
    type Gen = fn(&[f64], &[f64], &mut [f64], &mut [f64]);
    let gens: [(&str, Gen); 4] = [
        ("dilation", |x, c, g, dg| {
            let n = x.len();
            for k in 0..n {
                g[k] = x[k] - c[k];
                dg[k * n + k] = 1.0;
            }
        }),
        ("translation", |_x, _c, g, _dg| {
            g[0] = 1.0;
        }),
        ("rotation", |x, c, g, dg| {
            let n = x.len();
            g[0] = -(x[1] - c[1]);
            g[1] = x[0] - c[0];
            dg[1] = -1.0;
            dg[n] = 1.0;
        }),
        ("polynomial", |x, _c, g, dg| {
            let n = x.len();
            g[0] = x[1] * x[1];
            g[1] = x[0] * x[1];
            dg[1] = 2.0 * x[1];
            dg[n] = x[1];
            dg[n + 1] = x[0];
        }),
    ];
    gens.into_iter()
        .map(|(name, gen)| {
            let b = bump.clone();
            let func: Arc<InnerFn> =
                Arc::new(move |x: &[f64], phi: &mut [f64], dphi: &mut [f64]| {
                    let mut dchi = vec![0.0; n];
                    let chi = b.eval(x, &mut dchi);
                    let mut g = vec![0.0; n];
                    let mut dg = vec![0.0; n * n];
                    gen(x, &b.center, &mut g, &mut dg);
                    for k in 0..n {
                        phi[k] = chi * g[k];
                        for l in 0..n {
                            dphi[k * n + l] = g[k] * dchi[l] + chi * dg[k * n + l];
                        }
                    }
                });
            InnerVectorField {
                name: name.into(),
                support: bump.region(),
                func,
            }
        })
        .collect()
}

/// Default support of the stationarity battery.
pub fn battery_bump(n: usize) -> Bump {
    let mut center = vec![0.0; n];
    center[0] = 0.4;
    center[1] = 0.1;
    Bump {
        center,
        radius: 0.3,
    }
}

/// Residual threshold relative to the Dirichlet energy on the support.
pub const STATIONARITY_REL_TOL: f64 = 1e-6;

/// Runs the 3 × 4 deformation battery at `quad` and at its doubling.
/// A pair (ψ_a, φ_b) has residual max(|O(f,ψ_a)|, |I(f,φ_b)|); it passes when
/// that is at most 1e-6·Dir(f, supp) and does not grow under refinement.
pub fn stationarity_check(f: &QField, bump: &Bump, quad: &QuadratureSpec) -> Result<CheckReport> {
    let (n, m) = (f.n(), f.m());
    if bump.center.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "support centre has {} coordinates, n = {n}",
            bump.center.len()
        )));
    }
    let outer = outer_battery(n, m, bump);
    let inner = inner_battery(n, bump);
    let fine = quad.doubled();
    let (res_ref, res_fine) = (quad.label(), fine.label());
    let dir = dirichlet_energy(f, &bump.region(), quad)?;
    let threshold = STATIONARITY_REL_TOL * dir;
    let floor = 1e-10 * dir;

    let mut rep = CheckReport::new("stationarity", f.tag())
        .param("support_center", &bump.center)
        .param_num("support_radius", bump.radius)
        .param_num("rel_tol", STATIONARITY_REL_TOL)
        .param("quadrature", quad)
        .qty("dirichlet_support", dir, &res_ref)
        .qty("threshold", threshold, &res_ref);
    let mut o = Vec::new();
    for psi in &outer {
        let a = outer_variation(f, psi, quad)?;
        let b = outer_variation(f, psi, &fine)?;
        if a.growth_violation > 0.0 {
            rep = rep.note(format!(
                "warning: growth certificate of {} violated on sampled nodes",
                psi.name
            ));
        }
        rep = rep
            .qty(&format!("outer_{}", psi.name), a.value, &res_ref)
            .qty(&format!("outer_{}", psi.name), b.value, &res_fine);
        o.push((a.value.abs(), b.value.abs()));
    }
    let mut i = Vec::new();
    for phi in &inner {
        let a = inner_variation(f, phi, quad)?;
        let b = inner_variation(f, phi, &fine)?;
        rep = rep.qty(&format!("inner_{}", phi.name), a, &res_ref).qty(
            &format!("inner_{}", phi.name),
            b,
            &res_fine,
        );
        i.push((a.abs(), b.abs()));
    }
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (pa, oa) in outer.iter().zip(&o) {
        for (pb, ib) in inner.iter().zip(&i) {
            let r_ref = oa.0.max(ib.0);
            let r_fine = oa.1.max(ib.1);
            worst = worst.max(r_ref);
            let small = r_ref <= threshold;
            let decays = r_fine <= (0.5 * r_ref).max(floor);
            if !(small && decays) {
                ok = false;
                rep = rep.note(format!(
                    "pair ({}, {}): residual {r_ref:e} -> {r_fine:e} (threshold {threshold:e})",
                    pa.name, pb.name
                ));
            }
        }
    }
    Ok(rep
        .qty("max_residual", worst, &res_ref)
        .verdict(Verdict::from_bool(ok))
        .finish())
}

pub const CACCIOPPOLI_C_MAX: f64 = 4.0;

/// lhs = ∫χ²|Df|², rhs = ∫|Dχ|²|f|², C_est = lhs/rhs.
pub fn caccioppoli_check(
    f: &QField,
    chi: &CutoffProfile,
    c_max: f64,
    quad: &QuadratureSpec,
) -> Result<CheckReport> {
    if chi.center.len() != f.n() {
        return Err(Error::DimensionMismatch(format!(
            "cutoff centre has {} coordinates, n = {}",
            chi.center.len(),
            f.n()
        )));
    }
    let breaks = chi.breakpoints();
    let side = |quad: &QuadratureSpec| {
        integrate(f, &chi.region(), quad, &breaks, |s| {
            let (c, dc) = chi.radial(s.r);
            [c * c * s.jet.grad_norm_sq(), dc * dc * s.jet.norm_sq()]
        })
    };
    let [lhs, rhs] = side(quad)?;
    let fine = quad.doubled();
    let [lhs2, rhs2] = side(&fine)?;
    let est = |l: f64, r: f64| {
        if l == 0.0 {
            0.0
        } else if r == 0.0 {
            f64::INFINITY
        } else {
            l / r
        }
    };
    let (c, c2) = (est(lhs, rhs), est(lhs2, rhs2));
    let res = quad.label();
    let mut rep = CheckReport::new("caccioppoli", f.tag())
        .param("cutoff", chi)
        .param_num("c_max", c_max)
        .param("quadrature", quad)
        .qty("lhs", lhs, &res)
        .qty("rhs", rhs, &res)
        .qty("c_est", c, &res)
        .qty("lhs", lhs2, &fine.label())
        .qty("rhs", rhs2, &fine.label())
        .qty("c_est", c2, &fine.label());
    if rhs == 0.0 && lhs > 0.0 {
        rep = rep.note("rhs vanishes while lhs is positive");
    }
    Ok(rep
        .verdict(Verdict::from_bool(c.is_finite() && c <= c_max))
        .finish())
}
