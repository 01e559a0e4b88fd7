//! Iterated-integral form of the truncated value and its estimators.
//!
//! With `ℋ` the discounted reward collected before the first jump and `𝒢`
//! the one-jump propagator, `V = Σ_{i<n} 𝒢^i ℋ + 𝒢ⁿ V`. The `i`-th term is an
//! integral over `2i - 1` variables (jump times and claim sizes), and all `n`
//! terms are evaluated from one point `(v₁, z₁, …, v_n, z_n)` of the unit
//! cube of dimension `2n`: term `i` uses the first `i - 1` pairs for the path
//! and `v_i` for the time of its final reward integral.

use std::time::Instant;

use crate::cubature::{CubatureSpec, GaussProduct, NodeSource, RuleKind};
use crate::loan::{SmoothedLoanModel, Substitution};
use crate::parallel::{map_chunks, Execution, Moments, CHUNK_LEN};
use crate::{Error, Result};

/// A point of `[0,1]^{2n}` laid out as `(v₁, z₁, …, v_n, z_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IteratedPoint {
    coords: Vec<f64>,
}

impl IteratedPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || !coords.len().is_multiple_of(2) {
            return Err(Error::input(format!(
                "iterated point needs an even, positive length, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|u| !(0.0..=1.0).contains(u)) {
            return Err(Error::input(
                "iterated point coordinates must lie in [0, 1]",
            ));
        }
        Ok(IteratedPoint { coords })
    }

    /// Number of jumps `n`.
    pub fn jumps(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Result of one estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Standard error of `value` over randomised replicates; `None` for a
    /// single deterministic or single-replicate run.
    pub std_error: Option<f64>,
    /// Bound on the error from truncating after `n` jumps.
    pub bias_bound: f64,
    /// Nodes per replicate.
    pub nodes: usize,
    pub dim: usize,
    pub replicates: usize,
    pub wall_ms: f64,
}

/// `L^ε(-ln v, y)`: discounted reward along the flow from `y` up to time `-ln v`.
pub fn h_inner(y: f64, v: f64, model: &SmoothedLoanModel) -> f64 {
    model.flow().reward_integral(y, time_from_unit(v))
}

#[inline]
fn time_from_unit(v: f64) -> f64 {
    if v <= 0.0 {
        f64::INFINITY
    } else {
        -v.ln()
    }
}

/// Walks the point once, calling `on_term(i, value)` for every term.
#[inline]
fn accumulate(
    u: &[f64],
    x0: f64,
    model: &SmoothedLoanModel,
    mut on_term: impl FnMut(usize, f64),
) -> f64 {
    let p = model.params();
    let flow = model.flow();
    let claims = p.claims();
    let (lam, delta, shift) = (p.claim_intensity, p.discount, -p.floor());
    let n = u.len() / 2;
    let mut chi = x0;
    let mut weight = 1.0;
    let mut total = 0.0;
    for j in 0..n {
        let (v, z) = (u[2 * j], u[2 * j + 1]);
        let last = j + 1 == n;
        match model.substitution() {
            Substitution::PowerWeighted => {
                let t = time_from_unit(v);
                let (chi_minus, reward) = flow.advance(chi, t);
                let term = weight * lam * v.powf(lam - 1.0) * reward;
                total += term;
                on_term(j, term);
                if last {
                    break;
                }
                let r = chi_minus + shift;
                let y = r * z;
                weight *= lam * v.powf(lam + delta - 1.0) * claims.pdf(y) * r;
                chi = chi_minus - y;
            }
            Substitution::InverseCdf => {
                let t = time_from_unit(v) / lam;
                let (chi_minus, reward) = flow.advance(chi, t);
                let term = weight * reward;
                total += term;
                on_term(j, term);
                if last {
                    break;
                }
                let r = chi_minus + shift;
                let survive = claims.cdf(r);
                weight *= (-delta * t).exp() * survive;
                let y = claims.quantile(z * survive).min(r);
                chi = chi_minus - y;
            }
        }
        debug_assert!(chi >= -shift, "state {chi} left the surplus component");
        if weight == 0.0 {
            for k in j + 1..n {
                on_term(k, 0.0);
            }
            break;
        }
    }
    total
}

/// Sum over all `n` terms at one point, in a single forward pass.
pub fn iterated_integrand(point: &IteratedPoint, x0: f64, model: &SmoothedLoanModel) -> f64 {
    accumulate(point.coords(), x0, model, |_, _| {})
}

/// Unchecked slice form of [`iterated_integrand`] for hot loops.
pub fn iterated_integrand_slice(u: &[f64], x0: f64, model: &SmoothedLoanModel) -> f64 {
    accumulate(u, x0, model, |_, _| {})
}

/// The individual terms `i = 1..=n` at one point.
pub fn iterated_terms(point: &IteratedPoint, x0: f64, model: &SmoothedLoanModel) -> Vec<f64> {
    let mut terms = vec![0.0; point.jumps()];
    accumulate(point.coords(), x0, model, |i, v| terms[i] = v);
    terms
}

fn check_start(x0: f64, model: &SmoothedLoanModel) -> Result<()> {
    let p = model.params();
    if !(x0 > p.floor()) || !x0.is_finite() {
        return Err(Error::input(format!(
            "start surplus {x0} must lie above the ruin level {}",
            p.floor()
        )));
    }
    if !(p.claim_intensity > 0.0) {
        return Err(Error::input(
            "the iterated integral needs a positive claim intensity",
        ));
    }
    Ok(())
}

/// Weighted node sum of the integrand, chunked in index order.
fn rule_mean(rule: &dyn NodeSource, x0: f64, model: &SmoothedLoanModel, exec: Execution) -> f64 {
    map_chunks(rule.len(), CHUNK_LEN, exec, |range| {
        let mut acc = 0.0;
        rule.for_each_node(range, &mut |u, w| {
            acc += w * iterated_integrand_slice(u, x0, model)
        });
        acc
    })
    .into_iter()
    .sum()
}

/// Truncated-sum estimate of `V(x0)` with `n = spec.dim / 2` jumps.
pub fn estimate_value(
    model: &SmoothedLoanModel,
    x0: f64,
    jumps: usize,
    spec: &CubatureSpec,
) -> Result<Estimate> {
    estimate_value_with(model, x0, jumps, spec, Execution::default())
}

/// [`estimate_value`] with an explicit scheduling choice.
///
/// Monte Carlo replicates use fresh streams; Sobol' and Halton replicates
/// are Cranley–Patterson shifts of one point set when `R ≥ 2` and the plain
/// set when `R = 1`; Gauss products are deterministic and run once. A start
/// above the barrier is paid out at once: `V(x0) = x0 - b + V(b)`.
pub fn estimate_value_with(
    model: &SmoothedLoanModel,
    x0: f64,
    jumps: usize,
    spec: &CubatureSpec,
    exec: Execution,
) -> Result<Estimate> {
    let started = Instant::now();
    spec.validate()?;
    if jumps == 0 || spec.dim != 2 * jumps {
        return Err(Error::input(format!(
            "rule dimension {} does not match 2 x {jumps} jumps",
            spec.dim
        )));
    }
    check_start(x0, model)?;
    let b = model.params().barrier;
    let (start, lump) = if x0 > b { (b, x0 - b) } else { (x0, 0.0) };
    let reps = spec.effective_replicates();
    let mut moments = Moments::default();
    let mut nodes = 0;
    for r in 0..reps {
        let rule = spec.replicate_rule(r)?;
        nodes = rule.len();
        moments.push(rule_mean(rule.as_ref(), start, model, exec));
    }
    let std_error = moments.sample_variance().map(|v| (v / reps as f64).sqrt());
    Ok(Estimate {
        value: moments.mean + lump,
        std_error,
        bias_bound: model.params().bias_bound(jumps),
        nodes,
        dim: spec.dim,
        replicates: reps,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Full tensor Gauss–Legendre evaluation of the truncated sum for `n ≤ 3`.
pub fn gauss_validate(
    model: &SmoothedLoanModel,
    x0: f64,
    jumps: usize,
    order: usize,
) -> Result<f64> {
    gauss_validate_with(model, x0, jumps, order, Execution::default())
}

pub fn gauss_validate_with(
    model: &SmoothedLoanModel,
    x0: f64,
    jumps: usize,
    order: usize,
    exec: Execution,
) -> Result<f64> {
    if jumps == 0 || jumps > 3 {
        return Err(Error::input(format!(
            "Gauss validation supports 1..=3 jumps, got {jumps}"
        )));
    }
    let nodes = (order as f64).powi(2 * jumps as i32);
    if nodes > crate::cubature::MAX_GAUSS_NODES as f64 {
        return Err(Error::input(format!(
            "{order}^{} Gauss nodes exceed the budget of {}",
            2 * jumps,
            crate::cubature::MAX_GAUSS_NODES
        )));
    }
    let spec = CubatureSpec {
        kind: RuleKind::GaussProduct,
        points: order,
        dim: 2 * jumps,
        seed: 0,
        replicates: 1,
    };
    Ok(estimate_value_with(model, x0, jumps, &spec, exec)?.value)
}

/// Tensor Gauss rule of the given order for `n` jumps, for callers that
/// want partial sums per term.
pub fn gauss_term_sums(
    model: &SmoothedLoanModel,
    x0: f64,
    jumps: usize,
    order: usize,
) -> Result<Vec<f64>> {
    check_start(x0, model)?;
    let rule = GaussProduct::new(order, 2 * jumps)?;
    let mut sums = vec![0.0; jumps];
    rule.for_each_node(0..rule.len(), &mut |u, w| {
        accumulate(u, x0, model, |i, v| sums[i] += w * v);
    });
    Ok(sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loan::LoanParams;

    fn model(sub: Substitution) -> SmoothedLoanModel {
        SmoothedLoanModel::with_substitution(LoanParams::reference(), sub).unwrap()
    }

    #[test]
    fn h_inner_limits() {
        let m = model(Substitution::InverseCdf);
        let b = m.params().barrier;
        assert_eq!(h_inner(0.0, 1.0, &m), 0.0);
        let far = h_inner(b, 0.0, &m);
        assert!((far - 250.0).abs() < 0.25, "{far}");
        assert_eq!(h_inner(-50.0, 0.9, &m), 0.0);
    }

    #[test]
    fn first_term_ignores_its_claim_coordinate() {
        for sub in [Substitution::PowerWeighted, Substitution::InverseCdf] {
            let m = model(sub);
            let a = iterated_integrand(&IteratedPoint::new(vec![0.3, 0.1]).unwrap(), 0.0, &m);
            let b = iterated_integrand(&IteratedPoint::new(vec![0.3, 0.9]).unwrap(), 0.0, &m);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn paths_that_cannot_reach_the_band_earn_nothing() {
        let m = model(Substitution::PowerWeighted);
        let x0 = m.params().floor() + 1e-6;
        let p = IteratedPoint::new(vec![0.9, 0.5]).unwrap();
        assert_eq!(iterated_integrand(&p, x0, &m), 0.0);
    }

    #[test]
    fn terms_sum_to_integrand() {
        let m = model(Substitution::InverseCdf);
        let p = IteratedPoint::new(vec![0.2, 0.4, 0.7, 0.1, 0.05, 0.9]).unwrap();
        let terms = iterated_terms(&p, 0.0, &m);
        assert_eq!(terms.len(), 3);
        let total: f64 = terms.iter().sum();
        assert!((total - iterated_integrand(&p, 0.0, &m)).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        let m = model(Substitution::InverseCdf);
        let spec = CubatureSpec {
            kind: RuleKind::Sobol,
            points: 0,
            dim: 4,
            seed: 1,
            replicates: 1,
        };
        assert!(estimate_value(&m, 0.0, 2, &spec).is_err());
        let spec = CubatureSpec { points: 16, ..spec };
        assert!(estimate_value(&m, 0.0, 3, &spec).is_err());
        assert!(estimate_value(&m, -100.0, 2, &spec).is_err());
        assert!(IteratedPoint::new(vec![0.5]).is_err());
        assert!(IteratedPoint::new(vec![0.5, 1.5]).is_err());
        assert!(gauss_validate(&m, 0.0, 4, 2).is_err());
        assert!(matches!(
            gauss_validate(&m, 0.0, 3, 20),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn start_above_barrier_is_paid_out() {
        let m = model(Substitution::InverseCdf);
        let b = m.params().barrier;
        let spec = CubatureSpec {
            kind: RuleKind::Sobol,
            points: 256,
            dim: 4,
            seed: 1,
            replicates: 1,
        };
        let at = estimate_value(&m, b, 2, &spec).unwrap().value;
        let above = estimate_value(&m, b + 2.0, 2, &spec).unwrap().value;
        assert!((above - at - 2.0).abs() < 1e-12);
    }
}
