//! Counter-based pseudorandom points.
//!
//! Node `i` of replicate `r` reads words `2 d i .. 2 d (i + 1)` of the ChaCha8
//! stream `r` keyed by the seed, so any index range can be generated on its
//! own and gives the same values as a full sequential pass.

use std::ops::Range;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NodeSource, PointSet};

/// `M` i.i.d. uniform points in `[0,1)^d`.
#[derive(Debug, Clone)]
pub struct RandomPoints {
    len: usize,
    dim: usize,
    seed: u64,
    stream: u64,
}

impl RandomPoints {
    pub fn new(len: usize, dim: usize, seed: u64, replicate: u64) -> Self {
        RandomPoints {
            len,
            dim,
            seed,
            stream: replicate,
        }
    }

    fn rng_at(&self, node: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(2 * (node as u128) * (self.dim as u128));
        rng
    }
}

/// Uniform double in `[0,1)` from the top 53 bits.
#[inline]
pub(crate) fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl NodeSource for RandomPoints {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.len
    }

    fn for_each_node(&self, range: Range<usize>, f: &mut dyn FnMut(&[f64], f64)) {
        if range.is_empty() {
            return;
        }
        let w = 1.0 / self.len as f64;
        let mut rng = self.rng_at(range.start);
        let mut u = vec![0.0; self.dim];
        for _ in range {
            u.iter_mut().for_each(|x| *x = unit_f64(rng.next_u64()));
            f(&u, w);
        }
    }
}

/// Points of replicate `r` as a row-major matrix.
pub fn mc_points(len: usize, dim: usize, seed: u64, replicate: u64) -> PointSet {
    PointSet::collect(&RandomPoints::new(len, dim, seed, replicate))
}
