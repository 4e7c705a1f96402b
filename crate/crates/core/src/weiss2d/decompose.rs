//! Circle traces: sheet continuation, monodromy cycles and discrete Fourier
//! analysis of the unwound curves.

use std::f64::consts::PI;

use super::{FourierMode, FourierPiece};
use crate::error::{Error, Result};
use crate::fields::QField;
use crate::qcore::{optimal_matching, ranked_matchings, QPoint, EXHAUSTIVE_MAX_Q};

/// A Q-valued function sampled at θ_k = 2πk/N on a circle.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub values: Vec<QPoint>,
}

impl BoundaryTrace {
    pub fn new(values: Vec<QPoint>) -> Result<Self> {
        let first = values
            .first()
            .ok_or_else(|| Error::Parameter("empty trace".into()))?;
        let (q, m) = (first.q(), first.m());
        if values.iter().any(|v| v.q() != q || v.m() != m) {
            return Err(Error::DimensionMismatch(
                "trace values must share Q and m".into(),
            ));
        }
        Ok(Self { values })
    }

    /// Samples `f` on ∂B_radius(center) at `nodes` equispaced angles.
    pub fn sample(f: &QField, center: &[f64], radius: f64, nodes: usize) -> Result<Self> {
        if f.n() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "traces need n = 2, field has n = {}",
                f.n()
            )));
        }
        if nodes < 4 {
            return Err(Error::Parameter(format!(
                "need at least 4 trace nodes (got {nodes})"
            )));
        }
        let values = (0..nodes)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / nodes as f64;
                f.eval(&[center[0] + radius * t.cos(), center[1] + radius * t.sin()])
            })
            .collect();
        Self::new(values)
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn q(&self) -> usize {
        self.values[0].q()
    }

    pub fn m(&self) -> usize {
        self.values[0].m()
    }
}

/// One monodromy cycle: the unwound curve γ_j sampled at φ_k = 2πk/(N·Q_j).
#[derive(Debug, Clone, PartialEq)]
pub struct WindingSkeleton {
    pub winding: u32,
    pub samples: Vec<Vec<f64>>,
}

/// Ambiguity is declared when the second-best matching is within this
/// relative margin of the best and moves some sheet elsewhere.
const TIE_REL: f64 = 1e-10;

fn continue_sheets(prev: &QPoint, next: &QPoint, node: usize) -> Result<Vec<usize>> {
    if prev.q() > EXHAUSTIVE_MAX_Q {
        return Ok(optimal_matching(prev, next)?.permutation);
    }
    let mut ranked = ranked_matchings(prev, next)?;
    // stable: exact ties keep the lexicographically smallest first
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best, cost) = &ranked[0];
    let scale = 1e-12 * (1.0 + next.diameter());
    for (perm, c) in &ranked[1..] {
        if c - cost > TIE_REL * (1.0 + c) {
            break;
        }
        let differs = best.iter().zip(perm).any(|(&i, &j)| {
            let (a, b) = (next.point(i), next.point(j));
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
                > scale
        });
        if differs {
            return Err(Error::AmbiguousContinuation {
                node,
                gap: c - cost,
            });
        }
    }
    Ok(best.clone())
}

/// Continues the sheets once around the circle and splits them into the
/// cycles of the monodromy permutation, ordered by their first sheet at θ=0.
pub fn irreducible_decompose(trace: &BoundaryTrace) -> Result<Vec<WindingSkeleton>> {
    let n = trace.nodes();
    let q = trace.q();
    if n < 4 {
        return Err(Error::Parameter("need at least 4 trace nodes".into()));
    }
    // traj[i][k]: point at node k of the sheet that starts at index i
    let mut traj: Vec<Vec<Vec<f64>>> = (0..q)
        .map(|i| vec![trace.values[0].point(i).to_vec()])
        .collect();
    let mut cur: Vec<usize> = (0..q).collect();
    let mut last: Option<Vec<usize>> = None;
    for k in 0..n {
        let next = &trace.values[(k + 1) % n];
        // linear prediction from the previous two nodes keeps transversal
        // crossings from swapping sheets
        let predicted: Vec<Vec<f64>> = cur
            .iter()
            .enumerate()
            .map(|(s, &i)| {
                let p = trace.values[k].point(i);
                match &last {
                    Some(l) => p
                        .iter()
                        .zip(trace.values[k - 1].point(l[s]))
                        .map(|(a, b)| 2.0 * a - b)
                        .collect(),
                    None => p.to_vec(),
                }
            })
            .collect();
        let perm = continue_sheets(&QPoint::new(&predicted)?, next, k)?;
        last = Some(std::mem::replace(&mut cur, perm));
        if k + 1 < n {
            for (i, t) in traj.iter_mut().enumerate() {
                t.push(next.point(cur[i]).to_vec());
            }
        }
    }
    let sigma = cur;
    let mut seen = vec![false; q];
    let mut out = Vec::new();
    for start in 0..q {
        if seen[start] {
            continue;
        }
        let mut samples = Vec::new();
        let mut s = start;
        let mut winding = 0;
        loop {
            seen[s] = true;
            samples.extend(traj[s].iter().cloned());
            winding += 1;
            s = sigma[s];
            if s == start {
                break;
            }
        }
        out.push(WindingSkeleton { winding, samples });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierFit {
    pub piece: FourierPiece,
    /// Max over nodes of the reconstruction error.
    pub reconstruction_error: f64,
}

/// Coefficients below this fraction of the largest sample are roundoff and
/// are set to zero; left in, they decide fitted vanishing orders.
pub const COEFF_FLOOR: f64 = 1e-12;

/// Discrete Fourier coefficients up to mode `l_max` of a closed curve
/// sampled at φ_k = 2πk/N.
pub fn fourier_decompose(samples: &[Vec<f64>], l_max: u32, winding: u32) -> Result<FourierFit> {
    let n = samples.len();
    if n < 4 * l_max.max(1) as usize {
        return Err(Error::Precondition(format!(
            "{n} samples cannot resolve modes up to {l_max}; need at least {}",
            4 * l_max.max(1)
        )));
    }
    let m = samples[0].len();
    let nf = n as f64;
    let mut a0 = vec![0.0; m];
    for y in samples {
        for (a, v) in a0.iter_mut().zip(y) {
            *a += v;
        }
    }
    a0.iter_mut().for_each(|a| *a *= 2.0 / nf);
    let modes: Vec<FourierMode> = (1..=l_max)
        .map(|l| {
            let (mut a, mut b) = (vec![0.0; m], vec![0.0; m]);
            for (k, y) in samples.iter().enumerate() {
                // reduce the phase index to keep the argument small
                let phase = 2.0 * PI * ((l as usize * k) % n) as f64 / nf;
                let (s, c) = phase.sin_cos();
                for d in 0..m {
                    a[d] += y[d] * s;
                    b[d] += y[d] * c;
                }
            }
            a.iter_mut()
                .chain(b.iter_mut())
                .for_each(|v| *v *= 2.0 / nf);
            FourierMode { l, a, b }
        })
        .collect();
    let mut piece = FourierPiece { winding, a0, modes };
    let floor = COEFF_FLOOR
        * samples
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let chop = |v: &mut f64| {
        if v.abs() <= floor {
            *v = 0.0;
        }
    };
    piece.a0.iter_mut().for_each(chop);
    for md in &mut piece.modes {
        md.a.iter_mut().chain(md.b.iter_mut()).for_each(chop);
    }
    let mut buf = vec![0.0; m];
    let mut err: f64 = 0.0;
    for (k, y) in samples.iter().enumerate() {
        piece.curve(2.0 * PI * k as f64 / nf, &mut buf);
        for d in 0..m {
            err = err.max((buf[d] - y[d]).abs());
        }
    }
    Ok(FourierFit {
        piece,
        reconstruction_error: err,
    })
}

/// Irreducible decomposition followed by Fourier analysis of every piece.
pub fn decompose_trace(trace: &BoundaryTrace, l_max: u32) -> Result<Vec<FourierFit>> {
    irreducible_decompose(trace)?
        .into_iter()
        .map(|s| fourier_decompose(&s.samples, l_max, s.winding))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weiss2d::FourierMode;

    #[test]
    fn identical_sheets_split_into_windings_of_one() {
        let f = QField::trivial(3, 2, 2).unwrap();
        let t = BoundaryTrace::sample(&f, &[0.0, 0.0], 1.0, 16).unwrap();
        let pieces = irreducible_decompose(&t).unwrap();
        assert_eq!(
            pieces.iter().map(|p| p.winding).collect::<Vec<_>>(),
            vec![1, 1, 1]
        );
    }

    #[test]
    fn branch_monodromy() {
        for (k, q, expect) in [
            (3, 2, vec![2]),
            (2, 3, vec![3]),
            (2, 2, vec![1, 1]),
            (5, 3, vec![3]),
        ] {
            let f = QField::branch(k, q, 1.0).unwrap();
            let t = BoundaryTrace::sample(&f, &[0.0, 0.0], 1.0, 256).unwrap();
            let w: Vec<u32> = irreducible_decompose(&t)
                .unwrap()
                .iter()
                .map(|p| p.winding)
                .collect();
            assert_eq!(w, expect, "branch({k},{q})");
        }
    }

    #[test]
    fn pure_mode_is_recovered() {
        let samples: Vec<Vec<f64>> = (0..32)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 32.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let fit = fourier_decompose(&samples, 4, 1).unwrap();
        let m1 = &fit.piece.modes[0];
        assert!((m1.weight() - 2.0).abs() < 1e-14);
        assert!(fit.piece.modes[1..].iter().all(|m| m.weight() < 1e-28));
        assert!(fit.piece.a0.iter().all(|a| a.abs() < 1e-15));
        assert!(fourier_decompose(&samples, 9, 1).is_err());
    }

    #[test]
    fn branch_traces_have_exact_orders() {
        for (k, q) in [(3, 2), (2, 3), (5, 3), (1, 2)] {
            let f = QField::branch(k, q, 1.0).unwrap();
            let t = BoundaryTrace::sample(&f, &[0.0, 0.0], 1.0, 256).unwrap();
            let pieces: Vec<FourierPiece> = decompose_trace(&t, 8)
                .unwrap()
                .into_iter()
                .map(|fit| fit.piece)
                .collect();
            assert!(pieces.iter().all(|p| p.a0.iter().all(|&a| a == 0.0)));
            let order = crate::weiss2d::exact_vanishing_order(&pieces).unwrap();
            assert!(
                (order - k as f64 / q as f64).abs() < 1e-15,
                "{k}/{q}: {order}"
            );
        }
    }

    #[test]
    fn crossing_sheets_are_not_swapped() {
        // a circle and an ellipse with the same centre cross four times
        let circle = FourierPiece {
            winding: 1,
            a0: vec![0.0, 0.0],
            modes: vec![FourierMode {
                l: 1,
                a: vec![0.0, 1.0],
                b: vec![1.0, 0.0],
            }],
        };
        let ellipse = FourierPiece {
            winding: 1,
            a0: vec![0.0, 0.0],
            modes: vec![FourierMode {
                l: 1,
                a: vec![0.0, 0.5],
                b: vec![2.0, 0.0],
            }],
        };
        let f = QField::wound(vec![circle, ellipse]).unwrap();
        let t = BoundaryTrace::sample(&f, &[0.0, 0.0], 1.0, 64).unwrap();
        let w: Vec<u32> = irreducible_decompose(&t)
            .unwrap()
            .iter()
            .map(|p| p.winding)
            .collect();
        assert_eq!(w, vec![1, 1]);
        for seed in [5, 6, 10] {
            let pieces = crate::fields::random_wound_pieces(seed, 2, 4, 2.0).unwrap();
            let f = QField::wound(pieces.clone()).unwrap();
            let t = BoundaryTrace::sample(&f, &[0.0, 0.0], 1.0, 256).unwrap();
            assert_eq!(
                decompose_trace(&t, 4).unwrap().len(),
                pieces.len(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn wound_trace_round_trip() {
        let pieces = vec![
            FourierPiece {
                winding: 2,
                a0: vec![0.0, 0.0],
                modes: vec![
                    FourierMode {
                        l: 1,
                        a: vec![1.0, 0.2],
                        b: vec![-0.3, 0.5],
                    },
                    FourierMode {
                        l: 2,
                        a: vec![0.1, 0.0],
                        b: vec![0.0, 0.2],
                    },
                ],
            },
            FourierPiece {
                winding: 1,
                a0: vec![3.0, -1.0],
                modes: vec![FourierMode {
                    l: 1,
                    a: vec![0.4, 0.0],
                    b: vec![0.0, 0.4],
                }],
            },
        ];
        let f = QField::wound(pieces.clone()).unwrap();
        let t = BoundaryTrace::sample(&f, &[0.0, 0.0], 1.0, 128).unwrap();
        let fits = decompose_trace(&t, 2).unwrap();
        assert_eq!(fits.len(), 2);
        for (fit, p) in fits.iter().zip(&pieces) {
            assert_eq!(fit.piece.winding, p.winding);
            for (a, b) in fit.piece.a0.iter().zip(&p.a0) {
                assert!((a - b).abs() < 1e-12);
            }
            for md in &p.modes {
                let got = &fit.piece.modes[md.l as usize - 1];
                for d in 0..2 {
                    assert!(
                        (got.a[d] - md.a[d]).abs() < 1e-12 && (got.b[d] - md.b[d]).abs() < 1e-12
                    );
                }
            }
        }
    }
}
