//! C² smoothing of piecewise model ingredients.
//!
//! Everything here is built on one quintic Heaviside function `h`: `0` below
//! `-1`, `1` above `1`, non-decreasing, `h(y) + h(-y) = 1`, twice continuously
//! differentiable. Indicators and piecewise definitions are blended over a
//! window of half-width `ε` with `h((y - ξ) / ε)`.

use std::sync::Arc;

use crate::cubature::NodeSource;
use crate::model::State;
use crate::{Error, Result};

/// Quintic C² Heaviside function.
///
/// The odd part is evaluated as an odd polynomial so that `h(-y)` is computed
/// from exactly the negated intermediate of `h(y)`.
pub fn heaviside(y: f64) -> f64 {
    if y <= -1.0 {
        0.0
    } else if y >= 1.0 {
        1.0
    } else {
        0.5 + heaviside_odd_part(y)
    }
}

#[inline]
fn heaviside_odd_part(y: f64) -> f64 {
    let y2 = y * y;
    y * (15.0 / 16.0 + y2 * (-5.0 / 8.0 + y2 * (3.0 / 16.0)))
}

/// First derivative of [`heaviside`]: `15/16 (1 - y²)²` on `[-1, 1]`.
pub fn heaviside_derivative(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - y * y;
        15.0 / 16.0 * s * s
    }
}

/// Where the blend window of a smooth join sits relative to the break point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothJoinSide {
    /// Window `(ξ - 2ε, ξ)`.
    Left,
    /// Window `(ξ - ε, ξ + ε)`.
    Center,
    /// Window `(ξ, ξ + 2ε)`.
    Right,
}

impl SmoothJoinSide {
    fn offset(self) -> f64 {
        match self {
            SmoothJoinSide::Left => -1.0,
            SmoothJoinSide::Center => 0.0,
            SmoothJoinSide::Right => 1.0,
        }
    }
}

/// Blends a function that is `lower` below `xi` and `upper` above it.
///
/// The result is `upper(y) h(s) + lower(y) h(-s)` with `s = (y - ξ - o ε)/ε`,
/// where `o ∈ {-1, 0, 1}` selects the window. Outside the window one of the
/// two weights is exactly zero, so the original piecewise function is
/// reproduced bit for bit there.
pub fn smooth_join<F1, F2>(
    upper: F1,
    lower: F2,
    xi: f64,
    eps: f64,
    side: SmoothJoinSide,
) -> Result<impl Fn(f64) -> f64>
where
    F1: Fn(f64) -> f64,
    F2: Fn(f64) -> f64,
{
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::input(format!(
            "smoothing width must be positive, got {eps}"
        )));
    }
    let centre = xi + side.offset() * eps;
    Ok(move |y: f64| {
        let s = (y - centre) / eps;
        if s >= 1.0 {
            upper(y)
        } else if s <= -1.0 {
            lower(y)
        } else {
            upper(y) * heaviside(s) + lower(y) * heaviside(-s)
        }
    })
}

/// Parameters of the loan-model drift smoothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoanDriftParams {
    pub premium: f64,
    pub loan_rate: f64,
    pub barrier: f64,
    pub eps: f64,
}

impl LoanDriftParams {
    /// Checks `0 < ε < min(b/4, c/(2ρ))`, which keeps the two bands apart.
    pub fn validate(&self) -> Result<()> {
        let LoanDriftParams {
            premium: c,
            loan_rate: rho,
            barrier: b,
            eps,
        } = *self;
        if !(c > 0.0 && rho > 0.0 && b > 0.0) {
            return Err(Error::input(format!(
                "premium, loan rate and barrier must be positive (c={c}, rho={rho}, b={b})"
            )));
        }
        let limit = (b / 4.0).min(c / (2.0 * rho));
        if !(eps > 0.0 && eps < limit) {
            return Err(Error::input(format!(
                "smoothing width {eps} outside (0, {limit}) for c={c}, rho={rho}, b={b}"
            )));
        }
        Ok(())
    }
}

/// Unsmoothed drift: `c` above zero, `c + ρy` on `(-c/ρ, 0]`, `0` below; `0` from `b` on.
pub fn unsmoothed_drift_loan(y: f64, c: f64, rho: f64, b: f64) -> f64 {
    if y >= b || y <= -c / rho {
        0.0
    } else if y > 0.0 {
        c
    } else {
        c + rho * y
    }
}

/// Smoothed drift of the loan model, no parameter checks.
///
/// Five pieces: `0` outside `(-c/ρ, b)`, `c + ρy` below `-ε`, a quartic blend
/// on `[-ε, ε]`, `c` on `(ε, b - ε]` and a quintic taper to zero on
/// `(b - ε, b)`.
#[inline]
pub fn smoothed_drift_loan_unchecked(y: f64, p: &LoanDriftParams) -> f64 {
    let LoanDriftParams {
        premium: c,
        loan_rate: rho,
        barrier: b,
        eps,
    } = *p;
    if y <= -c / rho || y >= b {
        0.0
    } else if y < -eps {
        c + rho * y
    } else if y <= eps {
        let d = y - eps;
        c + rho * (y + 3.0 * eps) * d * d * d / (16.0 * eps * eps * eps)
    } else if y <= b - eps {
        c
    } else {
        let u = b - y;
        let e2 = eps * eps;
        c * u * u * u * (-15.0 * eps * u + 6.0 * u * u + 10.0 * e2) / (e2 * e2 * eps)
    }
}

/// Smoothed drift with the band-separation check.
pub fn smoothed_drift_loan(y: f64, p: &LoanDriftParams) -> Result<f64> {
    p.validate()?;
    Ok(smoothed_drift_loan_unchecked(y, p))
}

/// Smoothed dividend rate `c h((y - b + ε)/ε)`: zero up to `b - 2ε`, `c` from `b` on.
#[inline]
pub fn smoothed_reward_loan(y: f64, c: f64, b: f64, eps: f64) -> f64 {
    c * heaviside((y - b + eps) / eps)
}

/// C² stand-in for the indicator of `[q_{j-1}, q_j)` evaluated at `u0`.
///
/// `cumulative` holds `q_0 = 0 ≤ q_1 ≤ … ≤ q_n`; `branch` is 1-based. The
/// weight is the product `h((u0 - q_{j-1})/ε) h((q_j - u0)/ε)`, so it is `1`
/// deep inside a branch and `1/2` on an interior cut.
pub fn smoothed_branch_weight(u0: f64, branch: usize, cumulative: &[f64], eps: f64) -> Result<f64> {
    check_cumulative(cumulative)?;
    if !(eps > 0.0) {
        return Err(Error::input(format!(
            "smoothing width must be positive, got {eps}"
        )));
    }
    if branch == 0 || branch >= cumulative.len() {
        return Err(Error::input(format!(
            "branch {branch} out of range 1..={}",
            cumulative.len() - 1
        )));
    }
    Ok(branch_weight(
        u0,
        cumulative[branch - 1],
        cumulative[branch],
        eps,
    ))
}

#[inline]
fn branch_weight(u0: f64, lo: f64, hi: f64, eps: f64) -> f64 {
    heaviside((u0 - lo) / eps) * heaviside((hi - u0) / eps)
}

fn check_cumulative(q: &[f64]) -> Result<()> {
    if q.len() < 2 {
        return Err(Error::input("need at least one branch"));
    }
    if q[0] != 0.0 {
        return Err(Error::input(format!(
            "cumulative probabilities must start at 0, got {}",
            q[0]
        )));
    }
    if q.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::input(
            "cumulative probabilities must be non-decreasing",
        ));
    }
    if q[q.len() - 1] > 1.0 + 1e-12 {
        return Err(Error::input("branch probabilities sum to more than one"));
    }
    Ok(())
}

pub type BranchProbability = Arc<dyn Fn(&State) -> f64 + Send + Sync>;
pub type BranchMap = Arc<dyn Fn(&State, &[f64]) -> State + Send + Sync>;

/// One component of a mixture jump kernel.
#[derive(Clone)]
pub struct KernelBranch {
    /// Mass `p_j(x)` of the branch.
    pub probability: BranchProbability,
    /// `G_{j,x}`: pushes Lebesgue measure on `[0,1]^dim` onto the branch.
    pub inverse_map: BranchMap,
    /// Number of uniforms the map consumes.
    pub dim: usize,
    /// Component the branch lands in.
    pub target_component: usize,
}

impl std::fmt::Debug for KernelBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelBranch")
            .field("dim", &self.dim)
            .field("target_component", &self.target_component)
            .finish_non_exhaustive()
    }
}

/// Jump kernel written as a finite mixture of pushed-forward uniforms.
///
/// Any mass missing from `Σ p_j(x)` is a jump to a cemetery that earns nothing.
#[derive(Clone, Debug)]
pub struct JumpKernelSpec {
    pub branches: Vec<KernelBranch>,
    /// Blend width for the branch selector; `0` means hard indicators.
    pub eps: f64,
}

impl JumpKernelSpec {
    /// Number of uniforms one kernel draw needs: a selector plus the widest branch.
    pub fn draw_dim(&self) -> usize {
        1 + self.branches.iter().map(|b| b.dim).max().unwrap_or(0)
    }

    /// `q_0 = 0, q_j = p_1 + … + p_j` at `x`.
    pub fn cumulative(&self, x: &State) -> Vec<f64> {
        let mut q = Vec::with_capacity(self.branches.len() + 1);
        q.push(0.0);
        let mut acc = 0.0;
        for b in &self.branches {
            acc += (b.probability)(x);
            q.push(acc);
        }
        q
    }
}

/// `∫ f dQ^ε(·, x)` evaluated with the supplied rule on `[0,1]^{draw_dim}`.
///
/// The first rule coordinate selects the branch through the smoothed weights,
/// the remaining ones feed the branch map. With `spec.eps == 0` the hard
/// indicators are used, which gives the unsmoothed kernel integral.
pub fn smoothed_kernel_integrate<F>(
    f: F,
    x: &State,
    spec: &JumpKernelSpec,
    rule: &dyn NodeSource,
) -> Result<f64>
where
    F: Fn(&State) -> f64,
{
    let need = spec.draw_dim();
    if rule.dim() < need {
        return Err(Error::input(format!(
            "inner rule has dimension {}, kernel needs {need}",
            rule.dim()
        )));
    }
    if rule.is_empty() {
        return Err(Error::input("inner rule has no nodes"));
    }
    let q = spec.cumulative(x);
    check_cumulative(&q)?;
    let eps = spec.eps;
    let mut total = 0.0;
    rule.for_each_node(0..rule.len(), &mut |u, w| {
        let u0 = u[0];
        let mut acc = 0.0;
        for (j, branch) in spec.branches.iter().enumerate() {
            let weight = if eps > 0.0 {
                branch_weight(u0, q[j], q[j + 1], eps)
            } else if u0 >= q[j] && u0 < q[j + 1] {
                1.0
            } else {
                0.0
            };
            if weight != 0.0 {
                acc += weight * f(&(branch.inverse_map)(x, &u[1..1 + branch.dim]));
            }
        }
        total += w * acc;
    });
    Ok(total)
}

/// Bound `(5/8) ε n ‖f‖∞` on the kernel smoothing error.
pub fn kernel_smoothing_bound(eps: f64, branches: usize, f_sup: f64) -> f64 {
    5.0 / 8.0 * eps * branches as f64 * f_sup
}
