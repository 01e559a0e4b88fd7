//! Halton sequence with optional digit scrambling.
//!
//! Coordinate `j` is the radical inverse of the point index in the `j`-th
//! prime base. Scrambling applies a fixed permutation `π_b` of the digits
//! `0..b` in every position, with `π_b(0) = 0` so that trailing zero digits
//! stay zero and the sum stays finite. Index 0 is skipped, as for Sobol'.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{NodeSource, PointSet};

/// Digit scrambling choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltonScramble {
    /// Plain radical inverses.
    None,
    /// Per-base permutations drawn from this seed.
    Seeded(u64),
}

/// The first `n` primes.
pub fn first_primes(n: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(n);
    let mut k = 2u64;
    while primes.len() < n {
        if primes
            .iter()
            .take_while(|&&p| p * p <= k)
            .all(|&p| !k.is_multiple_of(p))
        {
            primes.push(k);
        }
        k += 1;
    }
    primes
}

/// Radical inverse of `index` in `base` with digits mapped through `perm`.
pub fn radical_inverse(mut index: u64, base: u64, perm: Option<&[u32]>) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut x = 0.0;
    while index > 0 {
        let digit = (index % base) as usize;
        let d = perm.map_or(digit as u32, |p| p[digit]);
        x += d as f64 * scale;
        index /= base;
        scale *= inv;
    }
    x
}

fn digit_permutation(base: u64, seed: u64, coordinate: usize) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(coordinate as u64);
    let mut perm: Vec<u32> = (0..base as u32).collect();
    perm[1..].shuffle(&mut rng);
    perm
}

/// The first `M` nonzero Halton points in `d` dimensions.
#[derive(Debug, Clone)]
pub struct Halton {
    len: usize,
    bases: Vec<u64>,
    perms: Option<Vec<Vec<u32>>>,
}

impl Halton {
    pub fn new(len: usize, dim: usize, scramble: HaltonScramble) -> Self {
        let bases = first_primes(dim);
        let perms = match scramble {
            HaltonScramble::None => None,
            HaltonScramble::Seeded(seed) => Some(
                bases
                    .iter()
                    .enumerate()
                    .map(|(j, &b)| digit_permutation(b, seed, j))
                    .collect(),
            ),
        };
        Halton { len, bases, perms }
    }

    pub fn bases(&self) -> &[u64] {
        &self.bases
    }
}

impl NodeSource for Halton {
    fn dim(&self) -> usize {
        self.bases.len()
    }

    fn len(&self) -> usize {
        self.len
    }

    fn for_each_node(&self, range: Range<usize>, f: &mut dyn FnMut(&[f64], f64)) {
        let w = 1.0 / self.len as f64;
        let mut u = vec![0.0; self.bases.len()];
        for i in range {
            let index = i as u64 + 1;
            for (j, (o, &b)) in u.iter_mut().zip(&self.bases).enumerate() {
                let perm = self.perms.as_ref().map(|p| p[j].as_slice());
                *o = radical_inverse(index, b, perm);
            }
            f(&u, w);
        }
    }
}

/// Halton points `1..=M` as a row-major matrix.
pub fn halton_scrambled_points(len: usize, dim: usize, scramble: HaltonScramble) -> PointSet {
    PointSet::collect(&Halton::new(len, dim, scramble))
}
