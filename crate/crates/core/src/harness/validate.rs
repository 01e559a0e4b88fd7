//! Self-check suite over every module, printed as a table.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cubature::{
    gauss_legendre, sobol_points, star_discrepancy_1d, star_discrepancy_2d, GaussProduct,
    NodeSource,
};
use crate::loan::{LoanParams, SmoothedLoanModel, Substitution};
use crate::model::{bias_bound, State};
use crate::operators::{h_inner, iterated_integrand, iterated_terms, IteratedPoint};
use crate::smoothing::{
    heaviside, kernel_smoothing_bound, smoothed_drift_loan_unchecked, smoothed_kernel_integrate,
    unsmoothed_drift_loan, JumpKernelSpec, KernelBranch,
};
use crate::Result;

/// Knobs for fixtures: swap in another Heaviside or scale every tolerance.
#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub heaviside: fn(f64) -> f64,
    pub tolerance_scale: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            heaviside,
            tolerance_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// Worst observed deviation.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn render(&self) -> String {
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut s = format!(
            "{:<width$}  {:<4}  {:>12}  {:>12}\n",
            "check", "ok", "deviation", "tolerance"
        );
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<width$}  {:<4}  {:>12.3e}  {:>12.3e}",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.value,
                c.tolerance
            );
        }
        let failed = self.failures().count();
        let _ = writeln!(s, "{} checks, {failed} failed", self.checks.len());
        s
    }
}

struct Suite {
    opts: ValidateOptions,
    report: ValidationReport,
}

impl Suite {
    /// Records `value <= tolerance · scale`.
    fn check(&mut self, name: &'static str, value: f64, tolerance: f64) {
        let tolerance = tolerance * self.opts.tolerance_scale;
        self.report.checks.push(Check {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
        });
    }

    fn check_result(&mut self, name: &'static str, value: Result<f64>, tolerance: f64) {
        self.check(name, value.unwrap_or(f64::INFINITY), tolerance);
    }
}

pub fn run_validate(opts: ValidateOptions) -> ValidationReport {
    let mut s = Suite {
        opts,
        report: ValidationReport::default(),
    };
    heaviside_checks(&mut s);
    drift_checks(&mut s);
    kernel_check(&mut s);
    let params = LoanParams::reference();
    match SmoothedLoanModel::new(params) {
        Ok(model) => {
            flow_checks(&mut s, &model);
            integrand_checks(&mut s, model);
        }
        Err(e) => {
            log::error!("model construction failed: {e}");
            s.check("model construction", f64::INFINITY, 0.0);
        }
    }
    s.check(
        "bias bound formula",
        (bias_bound(512, 4.0, 0.02, 1.0) - (512.0 * (4.0f64 / 4.02).ln()).exp()).abs(),
        1e-15,
    );
    quadrature_checks(&mut s);
    s.report
}

fn heaviside_checks(s: &mut Suite) {
    let h = s.opts.heaviside;
    let ends = (h(-1.0) - 0.0)
        .abs()
        .max((h(1.0) - 1.0).abs())
        .max((h(0.0) - 0.5).abs());
    s.check("heaviside end values", ends, 1e-15);
    s.check("heaviside h(1/2)", (h(0.5) - 0.896484375).abs(), 1e-15);
    let sym = (0..=1000)
        .map(|i| {
            let y = -1.0 + 2.0 * i as f64 / 1000.0;
            (h(y) + h(-y) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    s.check("heaviside symmetry", sym, 1e-15);
    let mono = (0..1000)
        .map(|i| {
            let y = -1.0 + 2.0 * i as f64 / 1000.0;
            (h(y) - h(y + 0.002)).max(0.0)
        })
        .fold(0.0, f64::max);
    s.check("heaviside monotone", mono, 0.0);
}

fn drift_checks(s: &mut Suite) {
    let p = LoanParams::reference().drift_params();
    let (c, rho, b, eps) = (p.premium, p.loan_rate, p.barrier, p.eps);
    let outside = (0..=2000)
        .map(|i| -110.0 + 115.0 * i as f64 / 2000.0)
        .filter(|&y| y < -eps || (y > eps && y <= b - eps) || y >= b)
        .map(|y| (smoothed_drift_loan_unchecked(y, &p) - unsmoothed_drift_loan(y, c, rho, b)).abs())
        .fold(0.0, f64::max);
    s.check("drift equals unsmoothed outside bands", outside, 0.0);
    let g = |y: f64| smoothed_drift_loan_unchecked(y, &p);
    let h = eps / 8.0;
    let mut worst: f64 = 0.0;
    for (knot, band) in [
        (-eps, (-eps, eps)),
        (eps, (-eps, eps)),
        (b - eps, (b - eps, b)),
        (b, (b - eps, b)),
    ] {
        let (l1, l2) = one_sided_derivatives(g, knot, -h);
        let (r1, r2) = one_sided_derivatives(g, knot, h);
        let (s1, s2) = derivative_scale(g, band);
        worst = worst.max((l1 - r1).abs() / s1).max((l2 - r2).abs() / s2);
    }
    s.check("drift derivatives continuous at knots", worst, 1e-5);
}

/// First and second derivative at `x` from the seven points `x, x + h, …, x + 6h`.
///
/// Exact for polynomials of degree six, so on piecewise polynomials it gives
/// the one-sided limits up to rounding. A negative `h` looks to the left.
pub fn one_sided_derivatives(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
    let mut d: Vec<f64> = (0..7).map(|k| f(x + k as f64 * h)).collect();
    // diffs[k] = k-th forward difference at x.
    let mut diffs = [0.0; 7];
    for k in 0..7 {
        diffs[k] = d[0];
        for i in 0..6 - k {
            d[i] = d[i + 1] - d[i];
        }
    }
    let first = diffs[1] - diffs[2] / 2.0 + diffs[3] / 3.0 - diffs[4] / 4.0 + diffs[5] / 5.0
        - diffs[6] / 6.0;
    let second = diffs[2] - diffs[3] + 11.0 / 12.0 * diffs[4] - 5.0 / 6.0 * diffs[5]
        + 137.0 / 180.0 * diffs[6];
    (first / h, second / (h * h))
}

/// Largest `|g'|` and `|g''|` sampled across a band.
fn derivative_scale(g: impl Fn(f64) -> f64, (lo, hi): (f64, f64)) -> (f64, f64) {
    let dh = (hi - lo) * 1e-4;
    (1..200)
        .map(|i| lo + (hi - lo) * i as f64 / 200.0)
        .map(|y| {
            let d1 = (g(y + dh) - g(y - dh)) / (2.0 * dh);
            let d2 = (g(y + dh) - 2.0 * g(y) + g(y - dh)) / (dh * dh);
            (d1.abs(), d2.abs())
        })
        .fold((f64::MIN_POSITIVE, f64::MIN_POSITIVE), |a, b| {
            (a.0.max(b.0), a.1.max(b.1))
        })
}

/// Two-branch mixture: uniform on `[0,1]` with mass 0.3, exponential with
/// rate 1/2 and mass 0.7, integrated against `e^{-y}`.
pub fn mixture_kernel(eps: f64) -> (JumpKernelSpec, f64) {
    let uniform = KernelBranch {
        probability: Arc::new(|_| 0.3),
        inverse_map: Arc::new(|_, u| State::scalar(0, u[0])),
        dim: 1,
        target_component: 0,
    };
    let exponential = KernelBranch {
        probability: Arc::new(|_| 0.7),
        inverse_map: Arc::new(|_, u| State::scalar(0, -2.0 * (-u[0]).ln_1p())),
        dim: 1,
        target_component: 0,
    };
    let exact = 0.3 * (1.0 - (-1.0f64).exp()) + 0.7 / 3.0;
    (
        JumpKernelSpec {
            branches: vec![uniform, exponential],
            eps,
        },
        exact,
    )
}

fn kernel_check(s: &mut Suite) {
    let rule = match GaussProduct::new(64, 2) {
        Ok(r) => r,
        Err(_) => return s.check("kernel smoothing bound", f64::INFINITY, 0.0),
    };
    let mut worst: f64 = 0.0;
    for eps in [0.1, 0.01] {
        let (spec, exact) = mixture_kernel(eps);
        let got =
            smoothed_kernel_integrate(|x| (-x.y()).exp(), &State::scalar(0, 0.0), &spec, &rule);
        let ratio = got.map(|g| (g - exact).abs() / kernel_smoothing_bound(eps, 2, 1.0));
        worst = worst.max(ratio.unwrap_or(f64::INFINITY));
    }
    s.check("kernel smoothing bound (ratio)", worst, 1.0);
}

fn flow_checks(s: &mut Suite, model: &SmoothedLoanModel) {
    let p = model.params();
    let (k, rho, eps) = (p.premium / p.loan_rate, p.loan_rate, p.epsilon);
    let flow = model.flow();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let y = rng.gen_range(-90.0..-10.0);
        // Stay below the band: time to reach -2ε under the linear drift.
        let t_max = ((k - 2.0 * eps) / (y + k)).ln() / rho;
        let t = rng.gen_range(0.0..t_max);
        let exact = (y + k) * (rho * t).exp() - k;
        worst = worst.max((flow.flow_at(y, t) - exact).abs());
    }
    s.check("flow matches linear closed form", worst, 1e-8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let y = rng.gen_range(-99.0..p.barrier);
        let a = rng.gen_range(0.0..5.0);
        let b = rng.gen_range(0.0..5.0);
        worst = worst.max((flow.flow_at(flow.flow_at(y, a), b) - flow.flow_at(y, a + b)).abs());
    }
    s.check("flow semigroup", worst, 1e-9);
    let tail = h_inner(p.barrier, 0.0, model);
    s.check(
        "reward integral at barrier vs c/delta",
        (tail - p.value_bound()).abs() / p.value_bound(),
        1e-3,
    );
}

fn integrand_checks(s: &mut Suite, mut model: SmoothedLoanModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut single_pass: f64 = 0.0;
    let mut negative: f64 = 0.0;
    for sub in [Substitution::PowerWeighted, Substitution::InverseCdf] {
        model.set_substitution(sub);
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let u: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(1e-9..1.0)).collect();
            let point = match IteratedPoint::new(u) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let x0 = rng.gen_range(-20.0..model.params().barrier);
            let total = iterated_integrand(&point, x0, &model);
            let terms = iterated_terms(&point, x0, &model);
            let sum: f64 = terms.iter().sum();
            single_pass = single_pass.max((total - sum).abs() / total.abs().max(1.0));
            negative = negative.max(terms.iter().map(|t| -t).fold(0.0, f64::max));
        }
    }
    s.check("integrand single pass vs terms", single_pass, 1e-12);
    s.check("integrand nonnegative", negative, 0.0);
}

fn quadrature_checks(s: &mut Suite) {
    s.check_result(
        "gauss 2-point integrates x^3",
        gauss_legendre(2)
            .map(|(x, w)| (x.iter().zip(&w).map(|(x, w)| w * x * x * x).sum::<f64>() - 0.25).abs()),
        1e-15,
    );
    // Degree 2m - 1 per axis is exact: ∫ x^5 y^3 (1 + z) over [0,1]^3 = 1/6 · 1/4 · 3/2.
    s.check_result(
        "gauss product exactness",
        GaussProduct::new(3, 3).map(|rule| {
            let mut acc = 0.0;
            rule.for_each_node(0..rule.len(), &mut |u, w| {
                acc += w * u[0].powi(5) * u[1].powi(3) * (1.0 + u[2])
            });
            (acc - 1.0 / 16.0).abs()
        }),
        1e-15,
    );
    let mut worst: f64 = 0.0;
    for k in 1..=12 {
        let m = 1usize << k;
        let d = sobol_points(m, 1).and_then(|p| star_discrepancy_1d(p.as_slice()));
        worst = worst.max(d.map(|d| d / 2f64.powi(1 - k)).unwrap_or(f64::INFINITY));
    }
    s.check("sobol 1-d discrepancy / 2^(1-k)", worst, 1.0);
    // The 2-D Sobol' net of 2^k points has discrepancy well under (k + 2)/2^k.
    let mut worst: f64 = 0.0;
    for k in 2..=10 {
        let m = 1usize << k;
        let d = sobol_points(m, 2).and_then(|p| star_discrepancy_2d(&p.column(0), &p.column(1)));
        worst = worst.max(
            d.map(|d| d * m as f64 / (k as f64 + 2.0))
                .unwrap_or(f64::INFINITY),
        );
    }
    s.check("sobol 2-d discrepancy / ((k+2)/2^k)", worst, 1.0);
}
