//! Boundary-adjusted Weiss energy and its derivative formula.

use crate::error::{Error, Result};
use crate::fields::QField;
use crate::quadrature::{integrate_sphere, QuadratureSpec, Region};
use crate::report::{CheckReport, Verdict};
use crate::variational::{dirichlet_energy, sphere_mass};

/// The exponents are written with the domain dimension n; `literal_m`
/// substitutes the target dimension m instead.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WeissOptions {
    pub literal_m: bool,
}

impl WeissOptions {
    fn dim(&self, f: &QField) -> f64 {
        if self.literal_m {
            f.m() as f64
        } else {
            f.n() as f64
        }
    }
}

/// W(r) = r^{−(d+2κ−2)} ∫_{B_r}|Df|² − κ r^{−(d+2κ−1)} ∫_{∂B_r}|f|².
pub fn weiss_energy(
    f: &QField,
    x: &[f64],
    kappa: f64,
    r: f64,
    quad: &QuadratureSpec,
    opts: WeissOptions,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Parameter(format!(
            "radius must be positive (got {r})"
        )));
    }
    let d = opts.dim(f);
    let dir = dirichlet_energy(f, &Region::ball(x, r), quad)?;
    let h = sphere_mass(f, x, r, quad)?;
    Ok(r.powf(-(d + 2.0 * kappa - 2.0)) * dir - kappa * r.powf(-(d + 2.0 * kappa - 1.0)) * h)
}

pub fn weiss_profile(
    f: &QField,
    x: &[f64],
    kappa: f64,
    radii: &[f64],
    quad: &QuadratureSpec,
    opts: WeissOptions,
) -> Result<Vec<f64>> {
    radii
        .iter()
        .map(|&r| weiss_energy(f, x, kappa, r, quad, opts))
        .collect()
}

/// Compares a Richardson-extrapolated central difference of W at r with
/// (d+2κ−2)/r·[Dir(g^κ) − Dir(g)] + (1/r)∫_{∂B_1}|Dg·y − κg|², where
/// g = f(x + r·)/r^κ and g^κ is its κ-homogeneous extension.
pub fn weiss_derivative_check(
    f: &QField,
    x: &[f64],
    kappa: f64,
    r: f64,
    h: f64,
    quad: &QuadratureSpec,
    opts: WeissOptions,
) -> Result<CheckReport> {
    if !(kappa > 0.0) {
        return Err(Error::Parameter(format!(
            "κ must be positive (got {kappa})"
        )));
    }
    if !(h > 0.0 && h < r) {
        return Err(Error::Parameter(format!(
            "step must satisfy 0 < h < r (got h = {h}, r = {r})"
        )));
    }
    let w = |s: f64| weiss_energy(f, x, kappa, s, quad, opts);
    let d_h = (w(r + h)? - w(r - h)?) / (2.0 * h);
    let d_h2 = (w(r + h / 2.0)? - w(r - h / 2.0)?) / h;
    if (d_h - d_h2).abs() > 10.0 * (d_h2.abs() + 1e-8) {
        return Err(Error::StepSize(format!(
            "differences at h = {h} and h/2 disagree: {d_h:e} vs {d_h2:e}"
        )));
    }
    let fd = (4.0 * d_h2 - d_h) / 3.0;

    let dim = opts.dim(f);
    let g = QField::rescaled(f, x, r, r.powf(-kappa), format!("rescaled({})", f.tag()));
    let origin = vec![0.0; f.n()];
    let unit = Region::ball(&origin, 1.0);
    let dir_g = dirichlet_energy(&g, &unit, quad)?;
    let dir_hom = dirichlet_energy(&QField::homogeneous_extension(&g, kappa)?, &unit, quad)?;
    let [defect] = integrate_sphere(&g, &origin, 1.0, quad, |s| {
        [s.jet.directional_defect(s.dir, kappa)]
    })?;
    let rhs = (dim + 2.0 * kappa - 2.0) / r * (dir_hom - dir_g) + defect / r;
    let tol = 1e-5_f64.max(1e-2 * rhs.abs());
    let res = quad.label();
    Ok(CheckReport::new("weiss-derivative", f.tag())
        .param_num("kappa", kappa)
        .param("center", x)
        .param_num("r", r)
        .param_num("h", h)
        .param("literal_m", opts.literal_m)
        .param("quadrature", quad)
        .qty("weiss", w(r)?, &res)
        .qty("fd_h", d_h, &res)
        .qty("fd_h2", d_h2, &res)
        .qty("lhs", fd, &res)
        .qty("energy_gap", dir_hom - dir_g, &res)
        .qty("boundary_defect", defect, &res)
        .qty("rhs", rhs, &res)
        .qty("discrepancy", (fd - rhs).abs(), &res)
        .qty("tolerance", tol, "exact")
        .verdict(Verdict::from_bool((fd - rhs).abs() <= tol))
        .finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_minimizer_has_zero_weiss_energy() {
        let f = QField::branch(3, 2, 1.0).unwrap();
        let q = QuadratureSpec::reference();
        for r in [0.2, 0.5, 0.9] {
            let w = weiss_energy(&f, &[0.0, 0.0], 1.5, r, &q, WeissOptions::default()).unwrap();
            assert!(w.abs() < 1e-10, "W({r}) = {w}");
        }
        let rep =
            weiss_derivative_check(&f, &[0.0, 0.0], 1.5, 0.5, 0.05, &q, WeissOptions::default())
                .unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(rep.get("rhs").unwrap().abs() < 1e-9);
    }

    #[test]
    fn single_mode_derivative() {
        // W(r) = π(ℓ−κ) r^{2ℓ−2κ} for a single unit mode of winding 1
        let p = crate::weiss2d::FourierPiece {
            winding: 1,
            a0: vec![0.0, 0.0],
            modes: vec![crate::weiss2d::FourierMode {
                l: 2,
                a: vec![1.0, 0.0],
                b: vec![0.0, 0.0],
            }],
        };
        let f = QField::wound(vec![p]).unwrap();
        let q = QuadratureSpec::reference();
        let rep =
            weiss_derivative_check(&f, &[0.0, 0.0], 1.0, 0.5, 0.02, &q, WeissOptions::default())
                .unwrap();
        let exact = 2.0 * std::f64::consts::PI * 0.5;
        assert!((rep.get("rhs").unwrap() - exact).abs() < 1e-9);
        assert_eq!(rep.verdict, Verdict::Pass);
    }
}
