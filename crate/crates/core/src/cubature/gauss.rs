//! Gauss–Legendre rules on `[0,1]` and their tensor products.

use std::ops::Range;

use super::NodeSource;
use crate::{Error, Result};

pub const MAX_GAUSS_ORDER: usize = 64;
/// Largest tensor rule that will be enumerated.
pub const MAX_GAUSS_NODES: usize = 10_000_000;

/// `m`-point Gauss–Legendre nodes (ascending) and weights on `[0,1]`.
pub fn gauss_legendre(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 || m > MAX_GAUSS_ORDER {
        return Err(Error::input(format!(
            "Gauss order must be in 1..={MAX_GAUSS_ORDER}, got {m}"
        )));
    }
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Newton on P_m from the Tricomi-type initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root; mirror for the smallest.
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[m - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.5;
    }
    Ok((nodes, weights))
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor product of one `m`-point rule in each of `d` coordinates.
///
/// Node index `i` is read in base `m` with the last coordinate varying fastest.
#[derive(Debug, Clone)]
pub struct GaussProduct {
    order: usize,
    dim: usize,
    len: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussProduct {
    pub fn new(order: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("Gauss product dimension must be at least 1"));
        }
        let (nodes, weights) = gauss_legendre(order)?;
        let len = (0..dim)
            .try_fold(1usize, |acc, _| acc.checked_mul(order))
            .filter(|&n| n <= MAX_GAUSS_NODES)
            .ok_or_else(|| {
                Error::Budget(format!(
                    "{order}^{dim} Gauss nodes exceed the limit of {MAX_GAUSS_NODES}"
                ))
            })?;
        Ok(GaussProduct {
            order,
            dim,
            len,
            nodes,
            weights,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

impl NodeSource for GaussProduct {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.len
    }

    fn for_each_node(&self, range: Range<usize>, f: &mut dyn FnMut(&[f64], f64)) {
        let mut u = vec![0.0; self.dim];
        for i in range {
            let mut rest = i;
            let mut w = 1.0;
            for j in (0..self.dim).rev() {
                let k = rest % self.order;
                rest /= self.order;
                u[j] = self.nodes[k];
                w *= self.weights[k];
            }
            f(&u, w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules() {
        let (x, w) = gauss_legendre(1).unwrap();
        assert_eq!((x[0], w[0]), (0.5, 1.0));
        let (x, w) = gauss_legendre(2).unwrap();
        let h = 0.5 / 3f64.sqrt();
        assert!((x[0] - (0.5 - h)).abs() < 1e-15 && (x[1] - (0.5 + h)).abs() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
        let cube: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x * x).sum();
        assert!((cube - 0.25).abs() <= 1e-15);
    }

    #[test]
    fn every_order_is_exact_to_its_degree() {
        for m in 1..=MAX_GAUSS_ORDER {
            let (x, w) = gauss_legendre(m).unwrap();
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!(x.iter().all(|&t| t > 0.0 && t < 1.0));
            assert!(w.iter().all(|&t| t > 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14, "m={m}");
            // Shifted Legendre polynomials are orthogonal to 1, so ∫ (2x-1)^k = 1/(k+1) for even k.
            for k in 0..2 * m {
                let got: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(x, w)| w * (2.0 * x - 1.0).powi(k as i32))
                    .sum();
                let exact = if k % 2 == 0 {
                    1.0 / (k as f64 + 1.0)
                } else {
                    0.0
                };
                assert!((got - exact).abs() < 1e-13, "m={m} k={k}: {got}");
            }
        }
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(65).is_err());
    }

    #[test]
    fn tensor_rule_weights_and_budget() {
        let g = GaussProduct::new(5, 3).unwrap();
        assert_eq!(g.len(), 125);
        let mut total = 0.0;
        let mut moment = 0.0;
        g.for_each_node(0..g.len(), &mut |u, w| {
            total += w;
            moment += w * u[0] * u[1].powi(3) * u[2].powi(9);
        });
        assert!((total - 1.0).abs() < 1e-14);
        assert!((moment - 1.0 / (2.0 * 4.0 * 10.0)).abs() < 1e-14);
        assert!(matches!(GaussProduct::new(32, 6), Err(Error::Budget(_))));
    }
}
