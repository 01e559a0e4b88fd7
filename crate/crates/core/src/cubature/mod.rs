//! Cubature rules on the unit cube.
//!
//! Every rule is a [`NodeSource`]: an indexed list of nodes with weights that
//! can be walked over any index range. Equal-weight rules (Sobol', Halton,
//! pseudorandom) give each node weight `1/M`. Nodes are generated on the fly
//! from their index, so disjoint ranges can be evaluated on different threads
//! without changing any value.

mod discrepancy;
mod gauss;
mod halton;
mod random;
mod shift;
mod sobol;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

pub use discrepancy::{
    star_discrepancy_1d, star_discrepancy_2d, star_discrepancy_bruteforce, MAX_POINTS_2D,
};
pub use gauss::{gauss_legendre, GaussProduct, MAX_GAUSS_NODES, MAX_GAUSS_ORDER};
pub use halton::{first_primes, halton_scrambled_points, radical_inverse, Halton, HaltonScramble};
pub use random::{mc_points, RandomPoints};
pub use shift::{cranley_patterson_shift, shift_vector, Shifted};
pub use sobol::{sobol_points, DirectionNumbers, Sobol, MAX_SOBOL_BITS};

use crate::{Error, Result};

/// A finite weighted node set on `[0,1]^d`.
pub trait NodeSource: Sync {
    fn dim(&self) -> usize;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `f(node, weight)` for each index in `range`, in index order.
    fn for_each_node(&self, range: Range<usize>, f: &mut dyn FnMut(&[f64], f64));
}

/// Rule family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Mc,
    Sobol,
    ScrambledHalton,
    GaussProduct,
}

impl RuleKind {
    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Mc => "mc",
            RuleKind::Sobol => "sobol",
            RuleKind::ScrambledHalton => "halton",
            RuleKind::GaussProduct => "gauss",
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" | "random" => Ok(RuleKind::Mc),
            "sobol" => Ok(RuleKind::Sobol),
            "halton" | "scrambled-halton" | "scrambledhalton" => Ok(RuleKind::ScrambledHalton),
            "gauss" | "gaussproduct" | "gauss-product" => Ok(RuleKind::GaussProduct),
            other => Err(Error::input(format!("unknown cubature method '{other}'"))),
        }
    }
}

/// Rule choice plus budget.
///
/// `points` is the node count `M`, except for [`RuleKind::GaussProduct`]
/// where it is the number of Gauss points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubatureSpec {
    pub kind: RuleKind,
    pub points: usize,
    pub dim: usize,
    pub seed: u64,
    pub replicates: usize,
}

impl CubatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::input("cubature dimension must be at least 1"));
        }
        if self.points == 0 {
            return Err(Error::input("cubature rule has no nodes (M = 0)"));
        }
        if self.replicates == 0 {
            return Err(Error::input("replicate count must be at least 1"));
        }
        Ok(())
    }

    /// Node set of replicate `r` before any random shift.
    ///
    /// Randomisation follows the rule family: pseudorandom points are
    /// reseeded per replicate, quasi-random sets are shared and shifted by
    /// the caller, Gauss rules are deterministic.
    pub fn base_rule(&self, replicate: usize) -> Result<Box<dyn NodeSource>> {
        self.validate()?;
        Ok(match self.kind {
            RuleKind::Mc => Box::new(RandomPoints::new(
                self.points,
                self.dim,
                self.seed,
                replicate as u64,
            )),
            RuleKind::Sobol => Box::new(Sobol::new(self.points, self.dim)?),
            RuleKind::ScrambledHalton => Box::new(Halton::new(
                self.points,
                self.dim,
                HaltonScramble::Seeded(self.seed),
            )),
            RuleKind::GaussProduct => Box::new(GaussProduct::new(self.points, self.dim)?),
        })
    }

    /// Node set of replicate `r` including its Cranley–Patterson shift, if any.
    pub fn replicate_rule(&self, replicate: usize) -> Result<Box<dyn NodeSource>> {
        let base = self.base_rule(replicate)?;
        let shifted = matches!(self.kind, RuleKind::Sobol | RuleKind::ScrambledHalton)
            && self.replicates >= 2;
        if shifted {
            let shift = shift_vector(self.dim, self.seed, replicate as u64);
            Ok(Box::new(Shifted::new(base, shift)?))
        } else {
            Ok(base)
        }
    }

    /// Number of independent replicates that are actually run.
    pub fn effective_replicates(&self) -> usize {
        match self.kind {
            RuleKind::GaussProduct => 1,
            _ => self.replicates,
        }
    }
}

/// Row-major `M × d` matrix of points with equal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::input(format!(
                "point data of length {} does not split into rows of {dim}",
                data.len()
            )));
        }
        Ok(PointSet { dim, data })
    }

    /// Materialises the first `source.len()` nodes of a rule.
    pub fn collect(source: &dyn NodeSource) -> Self {
        let mut data = Vec::with_capacity(source.len() * source.dim());
        source.for_each_node(0..source.len(), &mut |u, _| data.extend_from_slice(u));
        PointSet {
            dim: source.dim(),
            data,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Column `k` as a vector.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows().map(|r| r[k]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl NodeSource for PointSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    fn for_each_node(&self, range: Range<usize>, f: &mut dyn FnMut(&[f64], f64)) {
        let w = 1.0 / self.len() as f64;
        for i in range {
            f(self.row(i), w);
        }
    }
}

impl<T: NodeSource + ?Sized> NodeSource for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn len(&self) -> usize {
        (**self).len()
    }

    fn for_each_node(&self, range: Range<usize>, f: &mut dyn FnMut(&[f64], f64)) {
        (**self).for_each_node(range, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_kind_parses() {
        assert_eq!("Sobol".parse::<RuleKind>().unwrap(), RuleKind::Sobol);
        assert_eq!(
            "halton".parse::<RuleKind>().unwrap(),
            RuleKind::ScrambledHalton
        );
        assert_eq!("mc".parse::<RuleKind>().unwrap(), RuleKind::Mc);
        assert_eq!("gauss".parse::<RuleKind>().unwrap(), RuleKind::GaussProduct);
        assert!("lattice".parse::<RuleKind>().is_err());
        for k in [
            RuleKind::Mc,
            RuleKind::Sobol,
            RuleKind::ScrambledHalton,
            RuleKind::GaussProduct,
        ] {
            assert_eq!(k.name().parse::<RuleKind>().unwrap(), k);
        }
    }

    #[test]
    fn spec_rejects_empty_rules() {
        let spec = CubatureSpec {
            kind: RuleKind::Sobol,
            points: 0,
            dim: 4,
            seed: 1,
            replicates: 1,
        };
        assert!(spec.base_rule(0).is_err());
    }

    #[test]
    fn point_set_round_trips_rows() {
        let s = Sobol::new(8, 3).unwrap();
        let p = PointSet::collect(&s);
        assert_eq!(p.len(), 8);
        assert_eq!(p.row(0), &[0.5, 0.5, 0.5]);
        assert_eq!(p.column(0)[..4], [0.5, 0.25, 0.75, 0.125]);
        assert!(PointSet::new(3, vec![0.0; 7]).is_err());
    }
}
