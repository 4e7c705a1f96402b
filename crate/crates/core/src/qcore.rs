//! The value space of unordered Q-tuples of points in R^m.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest multiplicity for which matchings are found by exhaustive search.
pub const EXHAUSTIVE_MAX_Q: usize = 6;

/// An unordered Q-tuple of points of R^m, stored flat (entry `i` occupies
/// `coords[i*m..(i+1)*m]`). Equality in the multiset sense is [`QPoint::same_as`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QPoint {
    q: usize,
    m: usize,
    coords: Vec<f64>,
}

impl QPoint {
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        let q = points.len();
        if q == 0 {
            return Err(Error::Parameter(
                "a Q-point needs at least one entry".into(),
            ));
        }
        let m = points[0].len();
        if m == 0 || points.iter().any(|p| p.len() != m) {
            return Err(Error::DimensionMismatch(
                "all entries of a Q-point must share one positive dimension".into(),
            ));
        }
        Ok(Self {
            q,
            m,
            coords: points.concat(),
        })
    }

    pub fn from_flat(q: usize, m: usize, coords: Vec<f64>) -> Result<Self> {
        if q == 0 || m == 0 || coords.len() != q * m {
            return Err(Error::DimensionMismatch(format!(
                "flat buffer of length {} cannot hold {q} points in R^{m}",
                coords.len()
            )));
        }
        Ok(Self { q, m, coords })
    }

    /// `Q⟦y⟧`.
    pub fn repeated(q: usize, y: &[f64]) -> Self {
        Self {
            q,
            m: y.len(),
            coords: y.repeat(q),
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.m..(i + 1) * self.m]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.m)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Σ_i |p_i|².
    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.m];
        for p in self.points() {
            for (a, b) in mu.iter_mut().zip(p) {
                *a += b;
            }
        }
        mu.iter_mut().for_each(|a| *a /= self.q as f64);
        mu
    }

    pub fn subtract_mean(&self) -> Self {
        let mu = self.mean();
        let mut coords = self.coords.clone();
        for chunk in coords.chunks_exact_mut(self.m) {
            for (c, s) in chunk.iter_mut().zip(&mu) {
                *c -= s;
            }
        }
        Self {
            q: self.q,
            m: self.m,
            coords,
        }
    }

    /// Entries reordered so that entry `i` of the output is entry `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let coords = perm
            .iter()
            .flat_map(|&j| self.point(j).iter().copied())
            .collect();
        Self {
            q: self.q,
            m: self.m,
            coords,
        }
    }

    /// Entrywise map `p_i ↦ s·p_i`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            q: self.q,
            m: self.m,
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    pub fn separation_and_diameter(&self) -> SeparationDiameter {
        let mut sep = f64::INFINITY;
        let mut diam: f64 = 0.0;
        for i in 0..self.q {
            for j in (i + 1)..self.q {
                let d = dist_sq(self.point(i), self.point(j)).sqrt();
                diam = diam.max(d);
                if d > 0.0 {
                    sep = sep.min(d);
                }
            }
        }
        SeparationDiameter { sep, diam }
    }

    pub fn diameter(&self) -> f64 {
        self.separation_and_diameter().diam
    }

    /// Multiset equality up to `metric_g < 1e-12·(1 + diam)`.
    pub fn same_as(&self, other: &QPoint) -> bool {
        match metric_g(self, other) {
            Ok(d) => d < 1e-12 * (1.0 + self.diameter().max(other.diameter())),
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationDiameter {
    /// Minimal distance between distinct values, `+inf` when all entries agree.
    pub sep: f64,
    pub diam: f64,
}

/// A minimising bijection between the entries of two Q-points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingPlan {
    /// Entry `i` of the first point is matched with entry `permutation[i]` of the second.
    pub permutation: Vec<usize>,
    /// Σ_i |p_i − q_σ(i)|².
    pub cost: f64,
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_compatible(p: &QPoint, q: &QPoint) -> Result<()> {
    if p.q != q.q || p.m != q.m {
        return Err(Error::DimensionMismatch(format!(
            "cannot compare A_{}(R^{}) with A_{}(R^{})",
            p.q, p.m, q.q, q.m
        )));
    }
    Ok(())
}

fn cost_matrix(p: &QPoint, q: &QPoint) -> Vec<f64> {
    let n = p.q;
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            c[i * n + j] = dist_sq(p.point(i), q.point(j));
        }
    }
    c
}

/// The matching metric on A_Q(R^m).
pub fn metric_g(p: &QPoint, q: &QPoint) -> Result<f64> {
    Ok(optimal_matching(p, q)?.cost.sqrt())
}

/// Minimal-cost matching. For `Q ≤ 6` all permutations are enumerated in
/// lexicographic order and the first minimiser wins; beyond that a Hungarian
/// solver is used.
pub fn optimal_matching(p: &QPoint, q: &QPoint) -> Result<MatchingPlan> {
    check_compatible(p, q)?;
    let n = p.q;
    let c = cost_matrix(p, q);
    if n <= EXHAUSTIVE_MAX_Q {
        let (permutation, cost) = all_permutations(n)
            .into_iter()
            .map(|perm| {
                let cost = perm_cost(&c, n, &perm);
                (perm, cost)
            })
            .fold((Vec::new(), f64::INFINITY), |best, cand| {
                if cand.1 < best.1 {
                    cand
                } else {
                    best
                }
            });
        return Ok(MatchingPlan { permutation, cost });
    }
    let permutation = hungarian(&c, n);
    let cost = perm_cost(&c, n, &permutation);
    Ok(MatchingPlan { permutation, cost })
}

/// Every matching cost, in lexicographic permutation order. Used by callers
/// that need to detect near-ties.
pub(crate) fn ranked_matchings(p: &QPoint, q: &QPoint) -> Result<Vec<(Vec<usize>, f64)>> {
    check_compatible(p, q)?;
    let n = p.q;
    if n > EXHAUSTIVE_MAX_Q {
        return Err(Error::Parameter(format!(
            "ranked matchings need Q ≤ {EXHAUSTIVE_MAX_Q}"
        )));
    }
    let c = cost_matrix(p, q);
    Ok(all_permutations(n)
        .into_iter()
        .map(|perm| {
            let cost = perm_cost(&c, n, &perm);
            (perm, cost)
        })
        .collect())
}

fn perm_cost(c: &[f64], n: usize, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| c[i * n + j]).sum()
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// Shortest augmenting path assignment with potentials, O(n³).
fn hungarian(c: &[f64], n: usize) -> Vec<usize> {
    // 1-based internal indexing; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = c[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qp(rows: &[&[f64]]) -> QPoint {
        QPoint::new(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random_qpoint(rng: &mut ChaCha8Rng, q: usize, m: usize) -> QPoint {
        let coords = (0..q * m).map(|_| rng.random_range(-2.0..2.0)).collect();
        QPoint::from_flat(q, m, coords).unwrap()
    }

    fn brute_min(p: &QPoint, q: &QPoint) -> f64 {
        let c = cost_matrix(p, q);
        all_permutations(p.q())
            .iter()
            .map(|s| perm_cost(&c, p.q(), s))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn identical_points_are_at_distance_zero() {
        let p = qp(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert_eq!(metric_g(&p, &p).unwrap(), 0.0);
        let plan = optimal_matching(&p, &p).unwrap();
        assert_eq!(plan.permutation, vec![0, 1]);
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn metric_examples() {
        let p = qp(&[&[0.0], &[0.0]]);
        let q = qp(&[&[1.0], &[-1.0]]);
        assert_eq!(metric_g(&p, &q).unwrap(), 2f64.sqrt());
        let p = qp(&[&[0.0], &[2.0]]);
        let q = qp(&[&[1.0], &[1.0]]);
        assert_eq!(metric_g(&p, &q).unwrap(), 2f64.sqrt());
    }

    #[test]
    fn ties_resolve_to_identity() {
        let p = qp(&[&[0.0], &[2.0]]);
        let q = qp(&[&[1.0], &[1.0]]);
        let plan = optimal_matching(&p, &q).unwrap();
        assert_eq!(plan.permutation, vec![0, 1]);
        assert_eq!(plan.cost, 2.0);
    }

    #[test]
    fn q3_matches_factorial_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_qpoint(&mut rng, 3, 2);
        let q = random_qpoint(&mut rng, 3, 2);
        let plan = optimal_matching(&p, &q).unwrap();
        assert_eq!(plan.cost, brute_min(&p, &q));
    }

    #[test]
    fn hungarian_agrees_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for q in 2..=7 {
            for _ in 0..20 {
                let a = random_qpoint(&mut rng, q, 2);
                let b = random_qpoint(&mut rng, q, 2);
                let c = cost_matrix(&a, &b);
                let h = perm_cost(&c, q, &hungarian(&c, q));
                let e = brute_min(&a, &b);
                assert!((h - e).abs() <= 1e-12 * (1.0 + e), "Q={q}: {h} vs {e}");
            }
        }
    }

    #[test]
    fn large_q_uses_assignment_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_qpoint(&mut rng, 9, 3);
        let shuffled: Vec<usize> = vec![3, 1, 8, 0, 2, 7, 6, 5, 4];
        let b = a.permuted(&shuffled);
        let plan = optimal_matching(&a, &b).unwrap();
        assert!(plan.cost < 1e-24);
        assert!(a.same_as(&b));
    }

    #[test]
    fn mismatched_dimensions_error() {
        let p = qp(&[&[0.0], &[0.0]]);
        let q = qp(&[&[0.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(metric_g(&p, &q), Err(Error::DimensionMismatch(_))));
        let r = qp(&[&[0.0], &[0.0], &[1.0]]);
        assert!(matches!(
            optimal_matching(&p, &r),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn mean_and_subtraction() {
        let p = qp(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        assert_eq!(p.mean(), vec![0.0, 0.0]);
        assert_eq!(p.subtract_mean(), p);
        let p = qp(&[&[2.0], &[4.0]]);
        assert_eq!(p.mean(), vec![3.0]);
        assert_eq!(p.subtract_mean(), qp(&[&[-1.0], &[1.0]]));
    }

    #[test]
    fn separation_examples() {
        let all_equal = QPoint::repeated(3, &[0.5, -1.0]);
        let sd = all_equal.separation_and_diameter();
        assert_eq!(sd.diam, 0.0);
        assert_eq!(sd.sep, f64::INFINITY);
        let sd = qp(&[&[0.0], &[1.0]]).separation_and_diameter();
        assert_eq!((sd.sep, sd.diam), (1.0, 1.0));
        let sd = qp(&[&[0.0], &[0.0], &[3.0]]).separation_and_diameter();
        assert_eq!((sd.sep, sd.diam), (3.0, 3.0));
    }

    #[test]
    fn lexicographic_permutations() {
        let perms = all_permutations(3);
        assert_eq!(perms.len(), 6);
        assert_eq!(perms[0], vec![0, 1, 2]);
        assert_eq!(perms[1], vec![0, 2, 1]);
        assert_eq!(perms[5], vec![2, 1, 0]);
    }
}
