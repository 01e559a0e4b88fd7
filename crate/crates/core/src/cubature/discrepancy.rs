//! Exact star discrepancy for small point sets. Test oracles only.

use super::{NodeSource, PointSet};
use crate::{Error, Result};

/// Point budget of the two-dimensional sweep.
pub const MAX_POINTS_2D: usize = 10_000;

/// `D*` of points in `[0,1]`: `1/(2M) + max_i |x_(i) - (2i - 1)/(2M)|`.
pub fn star_discrepancy_1d(points: &[f64]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::input("discrepancy of an empty set"));
    }
    let mut x = points.to_vec();
    x.sort_by(f64::total_cmp);
    let m = x.len() as f64;
    let worst = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| (xi - (2 * i + 1) as f64 / (2.0 * m)).abs())
        .fold(0.0, f64::max);
    Ok(0.5 / m + worst)
}

/// `D*` of points in `[0,1]^2` over anchored boxes `[0,a) × [0,b)`.
///
/// Both the half-open count (`x < a, y < b`) and the closed count
/// (`x ≤ a, y ≤ b`) are checked at every corner built from point
/// coordinates and `1`, which gives the supremum exactly. Cost `O(M²)`.
pub fn star_discrepancy_2d(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let m = xs.len();
    if m == 0 || ys.len() != m {
        return Err(Error::input(
            "need equally many, and some, x and y coordinates",
        ));
    }
    if m > MAX_POINTS_2D {
        return Err(Error::Budget(format!(
            "2-D discrepancy limited to {MAX_POINTS_2D} points, got {m}"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ygrid: Vec<f64> = ys.to_vec();
    ygrid.push(1.0);
    ygrid.sort_by(f64::total_cmp);
    ygrid.dedup();
    let rank = |y: f64| ygrid.partition_point(|&g| g < y);
    let mut below = vec![0usize; ygrid.len()];
    let mut upto = vec![0usize; ygrid.len()];
    let mf = m as f64;
    let mut worst: f64 = 0.0;
    let mut k = 0;
    let mut corners: Vec<f64> = xs.to_vec();
    corners.push(1.0);
    corners.sort_by(f64::total_cmp);
    corners.dedup();
    for &a in &corners {
        // `below` counts x < a; `upto` counts x ≤ a.
        while k < m && xs[order[k]] < a {
            below[rank(ys[order[k]])] += 1;
            k += 1;
        }
        upto.copy_from_slice(&below);
        let mut j = k;
        while j < m && xs[order[j]] == a {
            upto[rank(ys[order[j]])] += 1;
            j += 1;
        }
        let (mut open, mut closed) = (0usize, 0usize);
        for (r, &b) in ygrid.iter().enumerate() {
            // open: y < b uses counts strictly below rank r.
            let vol = a * b;
            worst = worst.max(vol - open as f64 / mf);
            closed += upto[r];
            worst = worst.max(closed as f64 / mf - vol);
            open += below[r];
        }
    }
    Ok(worst)
}

/// Exact `D*` for `d ≤ 2`.
pub fn star_discrepancy_bruteforce(points: &PointSet) -> Result<f64> {
    match points.dim() {
        1 => star_discrepancy_1d(points.as_slice()),
        2 => star_discrepancy_2d(&points.column(0), &points.column(1)),
        d => Err(Error::input(format!(
            "exact discrepancy only for d <= 2, got {d}"
        ))),
    }
}
