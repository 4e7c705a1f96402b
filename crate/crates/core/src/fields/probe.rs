//! Sampling probe for Σ_{Q,f} = {x : f(x) = Q⟦y⟧} with a box-counting
//! dimension estimate.

use std::collections::BTreeSet;

use super::QField;
use crate::error::{Error, Result};
use crate::par;
use crate::stats::linear_fit;

/// Lattice on the cube [−w, w]^n with 2^levels cells per side; box counts
/// use every level from `min_level` to `levels`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeGrid {
    pub half_width: f64,
    pub levels: u32,
    pub min_level: u32,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        Self {
            half_width: 1.0,
            levels: 8,
            min_level: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularProbe {
    pub flagged: Vec<Vec<f64>>,
    /// (cell size h_j, number of level-j cells containing a flagged node).
    pub counts: Vec<(f64, usize)>,
    /// Slope of log N against log(1/h), when at least 3 levels are usable.
    pub dimension: Option<f64>,
    /// Every lattice node was flagged.
    pub trivial_field: bool,
    pub nodes: usize,
}

pub fn singular_set_probe(f: &QField, grid: &ProbeGrid, tol: f64) -> Result<SingularProbe> {
    if grid.levels == 0 || grid.min_level > grid.levels || !(grid.half_width > 0.0) {
        return Err(Error::Parameter(format!("invalid probe grid {grid:?}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance must be positive (got {tol})"
        )));
    }
    let n = f.n();
    let side = (1usize << grid.levels) + 1;
    let total = side
        .checked_pow(n as u32)
        .filter(|&t| t <= 50_000_000)
        .ok_or_else(|| Error::Parameter(format!("lattice with {side}^{n} nodes is too large")))?;
    let h = 2.0 * grid.half_width / (side - 1) as f64;
    let index = |mut k: usize| {
        let mut idx = vec![0usize; n];
        for d in 0..n {
            idx[d] = k % side;
            k /= side;
        }
        idx
    };
    let hits = par::map_indexed(total, |k| {
        let idx = index(k);
        let x: Vec<f64> = idx
            .iter()
            .map(|&i| -grid.half_width + i as f64 * h)
            .collect();
        f.eval(&x).diameter() < tol
    });
    let flagged_idx: Vec<Vec<usize>> = (0..total).filter(|&k| hits[k]).map(index).collect();
    let flagged = flagged_idx
        .iter()
        .map(|idx| {
            idx.iter()
                .map(|&i| -grid.half_width + i as f64 * h)
                .collect()
        })
        .collect();

    let mut counts = Vec::new();
    for j in grid.min_level..=grid.levels {
        let cells_per_side = 1usize << j;
        let stride = 1usize << (grid.levels - j);
        let mut cells = BTreeSet::new();
        for idx in &flagged_idx {
            // closed cells containing the node, per axis
            let ranges: Vec<Vec<usize>> = idx
                .iter()
                .map(|&i| {
                    let c = i / stride;
                    let mut r = Vec::with_capacity(2);
                    if i % stride == 0 && c > 0 {
                        r.push(c - 1);
                    }
                    if c < cells_per_side {
                        r.push(c);
                    }
                    r
                })
                .collect();
            let mut cur = vec![0usize; n];
            collect_product(&ranges, 0, &mut cur, &mut cells);
        }
        counts.push((2.0 * grid.half_width / cells_per_side as f64, cells.len()));
    }
    let usable: Vec<(f64, f64)> = counts
        .iter()
        .filter(|(_, c)| *c > 0)
        .map(|&(h, c)| ((1.0 / h).ln(), (c as f64).ln()))
        .collect();
    let dimension = if usable.len() >= 3 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
        Some(linear_fit(&xs, &ys).slope)
    } else {
        None
    };
    Ok(SingularProbe {
        trivial_field: flagged_idx.len() == total,
        flagged,
        counts,
        dimension,
        nodes: total,
    })
}

fn collect_product(
    ranges: &[Vec<usize>],
    d: usize,
    cur: &mut Vec<usize>,
    out: &mut BTreeSet<Vec<usize>>,
) {
    if d == ranges.len() {
        out.insert(cur.clone());
        return;
    }
    for &c in &ranges[d] {
        cur[d] = c;
        collect_product(ranges, d + 1, cur, out);
    }
}
