//! Cranley–Patterson rotations: `x ↦ (x + Δ) mod 1` with one uniform `Δ` per replicate.

use std::ops::Range;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::random::unit_f64;
use super::{NodeSource, PointSet};
use crate::{Error, Result};

/// Shift vector of replicate `r`, drawn from its own ChaCha8 stream.
///
/// Streams are offset from the pseudorandom node streams so a Monte Carlo
/// rule and a shift with the same seed never share words.
pub fn shift_vector(dim: usize, seed: u64, replicate: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate | 1 << 63);
    (0..dim).map(|_| unit_f64(rng.next_u64())).collect()
}

#[inline]
fn wrap(x: f64, s: f64) -> f64 {
    let y = x + s;
    if y >= 1.0 {
        y - 1.0
    } else {
        y
    }
}

/// A node source rotated by a fixed vector.
pub struct Shifted<S> {
    inner: S,
    shift: Vec<f64>,
}

impl<S: NodeSource> Shifted<S> {
    pub fn new(inner: S, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != inner.dim() {
            return Err(Error::input(format!(
                "shift of length {} for a rule of dimension {}",
                shift.len(),
                inner.dim()
            )));
        }
        if shift.iter().any(|s| !(0.0..1.0).contains(s)) {
            return Err(Error::input("shift components must lie in [0, 1)"));
        }
        Ok(Shifted { inner, shift })
    }
}

impl<S: NodeSource> NodeSource for Shifted<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn len(&self) -> usize {
        self.inner.len()
    }

    fn for_each_node(&self, range: Range<usize>, f: &mut dyn FnMut(&[f64], f64)) {
        let mut buf = vec![0.0; self.shift.len()];
        self.inner.for_each_node(range, &mut |u, w| {
            for ((o, &x), &s) in buf.iter_mut().zip(u).zip(&self.shift) {
                *o = wrap(x, s);
            }
            f(&buf, w);
        });
    }
}

/// Applies the shift of replicate `r` to a materialised point set.
pub fn cranley_patterson_shift(points: &PointSet, seed: u64, replicate: u64) -> PointSet {
    let shift = shift_vector(points.dim(), seed, replicate);
    apply_shift(points, &shift)
}

pub(crate) fn apply_shift(points: &PointSet, shift: &[f64]) -> PointSet {
    let dim = points.dim();
    let data = points
        .as_slice()
        .iter()
        .enumerate()
        .map(|(k, &x)| wrap(x, shift[k % dim]))
        .collect();
    PointSet::new(dim, data).expect("same shape")
}
