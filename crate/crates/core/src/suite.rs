//! The example library, perturbed variants, and carleman sweeps.

use std::fmt::Write as _;

use crate::carleman::{carleman_sides, corollary_eps, SweepRow, WeightSpec};
use crate::cutoff::CutoffProfile;
use crate::error::Result;
use crate::fields::{FieldSpec, QField};
use crate::par;
use crate::poly::PolyMap;
use crate::quadrature::QuadratureSpec;
use crate::report::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Trivial,
    Harmonic,
    Branch,
    Wound,
    Perturbed,
}

#[derive(Debug, Clone)]
pub struct LibraryEntry {
    pub spec: String,
    pub field: QField,
    pub kind: EntryKind,
    /// Vanishing order at the origin when known in closed form.
    pub kappa: Option<f64>,
    pub homogeneous: bool,
}

impl LibraryEntry {
    pub fn origin(&self) -> Vec<f64> {
        vec![0.0; self.field.n()]
    }

    /// Minimizing among its competitors: single sheets, branch fields and
    /// wound fields.
    pub fn minimizing(&self) -> bool {
        matches!(self.kind, EntryKind::Branch | EntryKind::Wound) || self.spec == "harmonic:x1"
    }
}

pub const BRANCH_FAMILY: [(u32, u32); 4] = [(1, 2), (3, 2), (2, 3), (5, 3)];

pub fn wound_specs() -> Vec<String> {
    (1..=10)
        .map(|s| format!("wound:{s},{},4,2", if s % 2 == 1 { 2 } else { 3 }))
        .collect()
}

/// Degree-3 harmonic map Re/Im of z³/2.
pub fn cubic_perturbation() -> PolyMap {
    "0.5*x1^3-1.5*x1*x2^2;1.5*x1^2*x2-0.5*x2^3"
        .parse()
        .expect("valid polynomial")
}

/// Degree-2 harmonic map Re/Im of z²/2.
pub fn quadratic_perturbation() -> PolyMap {
    "0.5*x1^2-0.5*x2^2;x1*x2".parse().expect("valid polynomial")
}

fn entry(
    spec: &str,
    kind: EntryKind,
    kappa: Option<f64>,
    homogeneous: bool,
) -> Result<LibraryEntry> {
    let field = spec.parse::<FieldSpec>()?.build()?;
    Ok(LibraryEntry {
        spec: spec.into(),
        field,
        kind,
        kappa,
        homogeneous,
    })
}

/// Trivial, harmonic sheets (Q ≤ 3), branch(k,Q) for k/Q ∈ {1/2, 3/2, 2/3,
/// 5/3} and ten seeded wound fields.
pub fn library() -> Result<Vec<LibraryEntry>> {
    let mut out = vec![
        entry("trivial:2", EntryKind::Trivial, None, true)?,
        entry("harmonic:x1", EntryKind::Harmonic, Some(1.0), true)?,
        entry(
            "harmonic:1+x1;x2|-1+x1;-x2",
            EntryKind::Harmonic,
            Some(0.0),
            false,
        )?,
        entry(
            "harmonic/3:x1^2-x3^2|x1*x2|1+x2*x3",
            EntryKind::Harmonic,
            Some(0.0),
            false,
        )?,
    ];
    for (k, q) in BRANCH_FAMILY {
        out.push(entry(
            &format!("branch:{k}/{q}"),
            EntryKind::Branch,
            Some(k as f64 / q as f64),
            true,
        )?);
    }
    for spec in wound_specs() {
        let field = spec.parse::<FieldSpec>()?.build()?;
        let pieces = field.pieces().expect("wound field").to_vec();
        let kappa = crate::weiss2d::exact_vanishing_order(&pieces);
        let homogeneous = pieces
            .iter()
            .all(|p| p.modes.iter().filter(|m| !m.is_zero()).count() <= 1);
        out.push(LibraryEntry {
            spec,
            field,
            kind: EntryKind::Wound,
            kappa,
            homogeneous,
        });
    }
    Ok(out)
}

/// branch(k,Q) ⊕ cubic harmonic for the family, plus branch(3,2) ⊕ quadratic.
pub fn perturbed_library() -> Result<Vec<LibraryEntry>> {
    let mut out = Vec::new();
    for (k, q) in BRANCH_FAMILY {
        let spec = format!("superpose(branch:{k}/{q},{})", cubic_perturbation());
        out.push(entry(
            &spec,
            EntryKind::Perturbed,
            Some(k as f64 / q as f64),
            false,
        )?);
    }
    let spec = format!("superpose(branch:3/2,{})", quadratic_perturbation());
    out.push(entry(&spec, EntryKind::Perturbed, Some(1.5), false)?);
    Ok(out)
}

/// The three annular cutoffs of the carleman sweep.
pub fn sweep_cutoffs() -> Vec<CutoffProfile> {
    [
        "annulus:0.1,0.2,0.6,0.8",
        "annulus:0.05,0.1,0.3,0.4",
        "annulus:0.2,0.3,0.5,0.7",
    ]
    .iter()
    .map(|s| s.parse().expect("valid cutoff"))
    .collect()
}

pub const SWEEP_TAUS: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];

/// carleman_sides over fields × τ × cutoffs, with ε from the plateau of
/// each cutoff. Rows come out in grid order.
pub fn carleman_sweep(
    fields: &[QField],
    taus: &[f64],
    cutoffs: &[CutoffProfile],
    quad: &QuadratureSpec,
) -> Result<Vec<SweepRow>> {
    let mut grid = Vec::new();
    for f in fields {
        for &tau in taus {
            for c in cutoffs {
                grid.push((f, tau, c.clone().with_center(&vec![0.0; f.n()])));
            }
        }
    }
    par::map_indexed_min(grid.len(), 2, |k| {
        let (f, tau, chi) = &grid[k];
        let eps = corollary_eps(chi.lo, chi.hi);
        let rep = carleman_sides(f, &WeightSpec::new(*tau, eps)?, chi, quad)?;
        Ok(SweepRow {
            field: f.tag().into(),
            tau: *tau,
            eps,
            r_params: chi.to_string(),
            lhs: rep.get("lhs").unwrap_or(f64::NAN),
            rhs: rep.get("rhs").unwrap_or(f64::NAN),
            ratio: rep.get("ratio").unwrap_or(f64::NAN),
            case: "-".into(),
            resolution: quad.label(),
            verdict: rep.verdict,
        })
    })
    .into_iter()
    .collect()
}

pub const SWEEP_HEADER: &str = "field,tau,eps,r_params,lhs,rhs,ratio,case,resolution,verdict";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Sweep table rows in the fixed column order of [`SWEEP_HEADER`].
pub fn sweep_csv(rows: &[SweepRow], with_header: bool) -> String {
    let mut s = String::new();
    if with_header {
        s.push_str(SWEEP_HEADER);
        s.push('\n');
    }
    for r in rows {
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Diagnostic => "diagnostic",
        };
        let _ = writeln!(
            s,
            "{},{:e},{:e},{},{:e},{:e},{:e},{},{},{}",
            csv_field(&r.field),
            r.tau,
            r.eps,
            csv_field(&r.r_params),
            r.lhs,
            r.rhs,
            r.ratio,
            csv_field(&r.case),
            r.resolution,
            verdict
        );
    }
    s
}

/// Max ratio per τ, in the order of `taus`.
pub fn max_ratio_by_tau(rows: &[SweepRow], taus: &[f64]) -> Vec<f64> {
    taus.iter()
        .map(|&t| {
            rows.iter()
                .filter(|r| r.tau == t)
                .map(|r| r.ratio)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_is_complete() {
        let lib = library().unwrap();
        assert_eq!(lib.len(), 18);
        assert_eq!(
            lib.iter().filter(|e| e.kind == EntryKind::Wound).count(),
            10
        );
        for e in &lib {
            assert_eq!(e.field.tag(), e.spec, "tags round-trip");
        }
        assert_eq!(perturbed_library().unwrap().len(), 5);
    }

    #[test]
    fn csv_quotes_commas() {
        let row = SweepRow {
            field: "superpose(branch:3/2,x1)".into(),
            tau: 1.0,
            eps: 0.5,
            r_params: "annulus:0.1,0.2,0.6,0.8".into(),
            lhs: 1.0,
            rhs: 2.0,
            ratio: 0.5,
            case: "-".into(),
            resolution: "gl16x4-a64-p24".into(),
            verdict: Verdict::Pass,
        };
        let csv = sweep_csv(&[row], true);
        let mut rd = csv.lines();
        assert_eq!(rd.next(), Some(SWEEP_HEADER));
        assert!(rd
            .next()
            .unwrap()
            .starts_with("\"superpose(branch:3/2,x1)\",1e0,5e-1,\"annulus:0.1,0.2,0.6,0.8\""));
    }
}
