//! PDMP state spaces, local characteristics and the analytic bounds on the cost functional.
//!
//! A state is `(k, y)`: a component index and a position in that
//! component's domain. Components carry a scalar autonomous drift, a jump
//! intensity and a cemetery flag. Component indices are 0-based.

use std::fmt;
use std::sync::Arc;

use crate::flow::ode::{OdeOptions, Stepper};
use crate::smoothing::{
    smoothed_drift_loan_unchecked, smoothed_reward_loan, unsmoothed_drift_loan, JumpKernelSpec,
    KernelBranch, LoanDriftParams,
};
use crate::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type StateFn = Arc<dyn Fn(&State) -> f64 + Send + Sync>;
pub type StateMap = Arc<dyn Fn(&State) -> State + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub component: usize,
    pub position: Vec<f64>,
}

impl State {
    pub fn scalar(component: usize, y: f64) -> Self {
        State {
            component,
            position: vec![y],
        }
    }

    /// First position coordinate.
    pub fn y(&self) -> f64 {
        self.position[0]
    }
}

/// Interval with independently open or closed ends; infinite ends are always open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub lower_open: bool,
    pub upper_open: bool,
}

impl Interval {
    pub fn new(lower: f64, upper: f64, lower_open: bool, upper_open: bool) -> Self {
        Interval {
            lower,
            upper,
            lower_open: lower_open || lower.is_infinite(),
            upper_open: upper_open || upper.is_infinite(),
        }
    }

    pub fn open(lower: f64, upper: f64) -> Self {
        Self::new(lower, upper, true, true)
    }

    pub fn closed(lower: f64, upper: f64) -> Self {
        Self::new(lower, upper, false, false)
    }

    pub fn contains(&self, y: f64) -> bool {
        let above = if self.lower_open {
            y > self.lower
        } else {
            y >= self.lower
        };
        let below = if self.upper_open {
            y < self.upper
        } else {
            y <= self.upper
        };
        above && below
    }

    /// Up to `n + 1` evenly spaced points of the domain. An infinite end is
    /// replaced by a point `window` away from the other end; open ends are dropped.
    pub fn sample(&self, n: usize, window: f64) -> Vec<f64> {
        let (lo, hi) = match (self.lower.is_finite(), self.upper.is_finite()) {
            (true, true) => (self.lower, self.upper),
            (true, false) => (self.lower, self.lower + window),
            (false, true) => (self.upper - window, self.upper),
            (false, false) => (-window, window),
        };
        if lo == hi {
            return if self.contains(lo) {
                vec![lo]
            } else {
                Vec::new()
            };
        }
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .filter(|&y| self.contains(y))
            .collect()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lower_open { '(' } else { '[' };
        let r = if self.upper_open { ')' } else { ']' };
        write!(f, "{l}{}, {}{r}", self.lower, self.upper)
    }
}

#[derive(Clone)]
pub enum Intensity {
    Constant(f64),
    Function(ScalarFn),
}

impl Intensity {
    pub fn at(&self, y: f64) -> f64 {
        match self {
            Intensity::Constant(l) => *l,
            Intensity::Function(f) => f(y),
        }
    }
}

impl fmt::Debug for Intensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Intensity::Constant(l) => write!(f, "Constant({l})"),
            Intensity::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Clone)]
pub struct ComponentSpec {
    pub domain: Interval,
    pub drift: ScalarFn,
    pub intensity: Intensity,
    pub is_cemetery: bool,
}

impl ComponentSpec {
    /// Absorbing component: no drift, no jumps.
    pub fn cemetery(domain: Interval) -> Self {
        ComponentSpec {
            domain,
            drift: Arc::new(|_| 0.0),
            intensity: Intensity::Constant(0.0),
            is_cemetery: true,
        }
    }
}

impl fmt::Debug for ComponentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComponentSpec")
            .field("domain", &self.domain)
            .field("intensity", &self.intensity)
            .field("is_cemetery", &self.is_cemetery)
            .finish_non_exhaustive()
    }
}

/// Declared sup-norm bounds, checked by sampling in [`ModelSpec::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelBounds {
    /// `C_λ ≥ sup λ`.
    pub intensity: f64,
    /// `‖ℓ‖∞`.
    pub reward: f64,
    /// `‖Ψ‖∞`.
    pub terminal: f64,
}

#[derive(Clone)]
pub struct ModelSpec {
    pub components: Vec<ComponentSpec>,
    pub jump_kernel: JumpKernelSpec,
    /// Where a state that hits an active boundary is sent (a Dirac measure).
    pub boundary_jump: Option<StateMap>,
    pub reward: StateFn,
    pub terminal: StateFn,
    pub discount: f64,
    pub bounds: ModelBounds,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("components", &self.components)
            .field("jump_kernel", &self.jump_kernel)
            .field("discount", &self.discount)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

/// Grid size per component for the bound checks.
pub const VALIDATION_SAMPLES: usize = 10_000;
/// Half-width used to sample unbounded domains.
const SAMPLE_WINDOW: f64 = 1e3;
/// Flows that have not left their component by this time are treated as never leaving.
const EXIT_TIME_CAP: f64 = 1e6;
/// Relative tolerance of the survival quadrature.
const SURVIVAL_RTOL: f64 = 1e-8;

impl ModelSpec {
    pub fn component(&self, x: &State) -> Result<&ComponentSpec> {
        let comp = self
            .components
            .get(x.component)
            .ok_or_else(|| Error::input(format!("component {} does not exist", x.component)))?;
        if x.position.len() != 1 {
            return Err(Error::input(format!(
                "shipped components are scalar, got position of length {}",
                x.position.len()
            )));
        }
        if !comp.domain.contains(x.y()) {
            return Err(Error::input(format!(
                "position {} outside domain {} of component {}",
                x.y(),
                comp.domain,
                x.component
            )));
        }
        Ok(comp)
    }

    /// Checks the declared bounds and the cemetery and support rules on a
    /// grid of [`VALIDATION_SAMPLES`] points per component.
    pub fn validate(&self) -> Result<()> {
        if !(self.discount > 0.0) {
            return Err(Error::input(format!(
                "discount rate must be positive, got {}",
                self.discount
            )));
        }
        let b = self.bounds;
        if !(b.intensity >= 0.0 && b.reward >= 0.0 && b.terminal >= 0.0) {
            return Err(Error::input("declared bounds must be non-negative"));
        }
        for (k, comp) in self.components.iter().enumerate() {
            for y in comp.domain.sample(VALIDATION_SAMPLES, SAMPLE_WINDOW) {
                let x = State::scalar(k, y);
                let lam = comp.intensity.at(y);
                let (l, psi) = ((self.reward)(&x), (self.terminal)(&x));
                if !(lam >= 0.0 && lam <= b.intensity) {
                    return Err(Error::model(format!(
                        "intensity {lam} at {y} (component {k}) outside [0, {}]",
                        b.intensity
                    )));
                }
                if !(l.abs() <= b.reward) {
                    return Err(Error::model(format!(
                        "reward {l} at {y} (component {k}) exceeds {}",
                        b.reward
                    )));
                }
                if !(psi.abs() <= b.terminal) {
                    return Err(Error::model(format!(
                        "terminal {psi} at {y} (component {k}) exceeds {}",
                        b.terminal
                    )));
                }
                if comp.is_cemetery {
                    if lam != 0.0 || (comp.drift)(y) != 0.0 {
                        return Err(Error::model(format!(
                            "cemetery component {k} moves or jumps at {y}"
                        )));
                    }
                    if l != 0.0 {
                        return Err(Error::model(format!(
                            "reward {l} on cemetery component {k} at {y}"
                        )));
                    }
                } else if psi != 0.0 {
                    return Err(Error::model(format!(
                        "terminal cost {psi} off the cemetery at ({k}, {y})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `C_V = ‖ℓ‖∞/δ + ‖Ψ‖∞`.
    pub fn value_upper_bound(&self) -> Result<f64> {
        value_bound(self.bounds.reward, self.discount, self.bounds.terminal)
    }

    /// Truncation bias bound after `n` jumps.
    pub fn bias_bound(&self, n: usize) -> Result<f64> {
        Ok(bias_bound(
            n,
            self.bounds.intensity,
            self.discount,
            self.value_upper_bound()?,
        ))
    }

    /// Position after following the flow of `x`'s component for time `t`.
    ///
    /// The flow is stopped on the boundary of the component.
    pub fn flow_position(&self, x: &State, t: f64) -> Result<f64> {
        let comp = self.component(x)?;
        if !(t >= 0.0) {
            return Err(Error::input(format!(
                "flow time must be non-negative, got {t}"
            )));
        }
        let traj = Trajectory::integrate(comp, x.y(), t)?;
        Ok(traj.position(t))
    }

    /// First time the flow from `x` reaches the boundary of its component, or `∞`.
    pub fn t_star(&self, x: &State) -> Result<f64> {
        let comp = self.component(x)?;
        if comp.is_cemetery {
            return Ok(f64::INFINITY);
        }
        let traj = Trajectory::integrate(comp, x.y(), EXIT_TIME_CAP)?;
        Ok(traj.exit.unwrap_or(f64::INFINITY))
    }

    /// `exp(-∫₀ᵗ λ(φ(x, s)) ds)`.
    ///
    /// Closed form for constant intensities. Otherwise composite Simpson on
    /// the integrated trajectory, doubling the panel count until two
    /// successive values agree to a relative `1e-8`.
    pub fn survival(&self, x: &State, t: f64) -> Result<f64> {
        let comp = self.component(x)?;
        if !(t >= 0.0) {
            return Err(Error::input(format!(
                "survival time must be non-negative, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        match &comp.intensity {
            Intensity::Constant(l) => Ok((-l * t).exp()),
            Intensity::Function(lam) => {
                if t.is_infinite() {
                    return Err(Error::input(
                        "survival to infinity needs a constant intensity",
                    ));
                }
                let traj = Trajectory::integrate(comp, x.y(), t)?;
                let f = |s: f64| lam(traj.position(s));
                let integral = adaptive_simpson(&f, &traj.knots(t));
                Ok((-integral).exp())
            }
        }
    }
}

/// `C_V = ‖ℓ‖∞/δ + ‖Ψ‖∞`.
pub fn value_bound(reward_sup: f64, discount: f64, terminal_sup: f64) -> Result<f64> {
    if !(discount > 0.0) {
        return Err(Error::input(format!(
            "discount rate must be positive, got {discount}"
        )));
    }
    Ok(reward_sup / discount + terminal_sup)
}

/// `C_V (C_λ / (C_λ + δ))ⁿ`.
pub fn bias_bound(n: usize, intensity_bound: f64, discount: f64, value_bound: f64) -> f64 {
    let ratio = intensity_bound / (intensity_bound + discount);
    value_bound * (n as f64 * ratio.ln()).exp()
}

/// Accepted ODE steps from a start point up to a time horizon or a boundary hit.
struct Trajectory {
    start: f64,
    steps: Vec<crate::flow::ode::Step>,
    /// Time at which the boundary was hit, if it was.
    exit: Option<f64>,
    /// Position where integration stopped.
    end: f64,
    end_time: f64,
}

impl Trajectory {
    fn integrate(comp: &ComponentSpec, y0: f64, horizon: f64) -> Result<Self> {
        let drift = &comp.drift;
        let dom = comp.domain;
        let scale = 1.0
            + y0.abs()
                .max(dom.lower.abs().min(1e6))
                .max(dom.upper.abs().min(1e6));
        let slack = 1e-9 * scale;
        let g0 = drift(y0);
        let mut traj = Trajectory {
            start: y0,
            steps: Vec::new(),
            exit: None,
            end: y0,
            end_time: 0.0,
        };
        if g0 == 0.0 || horizon == 0.0 || comp.is_cemetery {
            traj.end_time = horizon;
            return Ok(traj);
        }
        let opts = OdeOptions {
            initial_step: (1e-3 * scale / g0.abs()).min(horizon),
            ..OdeOptions::default()
        };
        let mut stepper = Stepper::new(|y| drift(y), y0, opts);
        while stepper.time() < horizon {
            let step = stepper.step(horizon - stepper.time())?;
            let crossed_up = if dom.upper_open {
                step.y1 >= dom.upper
            } else {
                step.y1 > dom.upper + slack
            };
            let crossed_down = if dom.lower_open {
                step.y1 <= dom.lower
            } else {
                step.y1 < dom.lower - slack
            };
            if crossed_up || crossed_down {
                let level = if crossed_up { dom.upper } else { dom.lower };
                let t_hit = step.crossing(level);
                traj.exit = Some(t_hit);
                traj.end = level;
                traj.end_time = t_hit;
                traj.steps.push(step);
                return Ok(traj);
            }
            traj.steps.push(step);
            if step.y1 == step.y0 {
                break;
            }
        }
        traj.end = stepper.position();
        traj.end_time = stepper.time();
        Ok(traj)
    }

    fn position(&self, t: f64) -> f64 {
        if let Some(t_hit) = self.exit {
            if t >= t_hit {
                return self.end;
            }
        }
        if t >= self.end_time {
            return self.end;
        }
        if self.steps.is_empty() || t <= 0.0 {
            return self.start;
        }
        let i = self
            .steps
            .partition_point(|s| s.t1 < t)
            .min(self.steps.len() - 1);
        self.steps[i].eval(t)
    }

    /// Step boundaries inside `(0, t)`, used as Simpson panel edges.
    fn knots(&self, t: f64) -> Vec<f64> {
        let mut k = vec![0.0];
        k.extend(
            self.steps
                .iter()
                .map(|s| s.t1)
                .filter(|&s| s > 0.0 && s < t),
        );
        if let Some(hit) = self.exit.filter(|&h| h < t) {
            if k.last() != Some(&hit) {
                k.push(hit);
            }
        }
        k.push(t);
        k.dedup();
        k
    }
}

fn simpson_panels(f: &dyn Fn(f64) -> f64, knots: &[f64], per_panel: usize) -> f64 {
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = 2 * per_panel;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        total += s * h / 3.0;
    }
    total
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, knots: &[f64]) -> f64 {
    let mut per_panel = 1;
    let mut prev = simpson_panels(f, knots, per_panel);
    for _ in 0..20 {
        per_panel *= 2;
        let next = simpson_panels(f, knots, per_panel);
        if (next - prev).abs() <= SURVIVAL_RTOL * next.abs().max(1e-300) {
            return next;
        }
        prev = next;
    }
    prev
}

/// Parameters shared by the loan-model state spaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoanSpaceParams {
    pub premium: f64,
    pub loan_rate: f64,
    pub barrier: f64,
    pub claim_intensity: f64,
    pub claim_rate: f64,
    pub discount: f64,
}

/// Component of the surplus process.
pub const SURPLUS: usize = 0;
/// Absorbing ruin component `(-∞, -c/ρ)`.
pub const RUIN: usize = 1;
/// Barrier point `{b}` of the unsmoothed model.
pub const AT_BARRIER: usize = 2;

fn claim_kernel(p: LoanSpaceParams, eps: f64) -> JumpKernelSpec {
    let floor = -p.premium / p.loan_rate;
    let alpha = p.claim_rate;
    let mass = move |x: &State| -> f64 {
        if x.component == RUIN {
            return 0.0;
        }
        -(-alpha * (x.y() - floor)).exp_m1()
    };
    let map = move |x: &State, u: &[f64]| -> State {
        // Claim drawn from the exponential law conditioned on not ruining.
        let r = x.y() - floor;
        let y = -(-u[0] * -(-alpha * r).exp_m1()).ln_1p() / alpha;
        State::scalar(SURPLUS, (x.y() - y).max(floor))
    };
    JumpKernelSpec {
        branches: vec![KernelBranch {
            probability: Arc::new(mass),
            inverse_map: Arc::new(map),
            dim: 1,
            target_component: SURPLUS,
        }],
        eps,
    }
}

/// Loan model with smoothed drift and dividend rate.
///
/// Components: `0` surplus on `(-c/ρ, b]`, `1` ruin on `(-∞, -c/ρ]`. No
/// active boundary exists because the drift vanishes at `b`.
pub fn smoothed_loan_spec(p: LoanSpaceParams, eps: f64) -> Result<ModelSpec> {
    let dp = LoanDriftParams {
        premium: p.premium,
        loan_rate: p.loan_rate,
        barrier: p.barrier,
        eps,
    };
    dp.validate()?;
    let floor = -p.premium / p.loan_rate;
    let (c, b) = (p.premium, p.barrier);
    let spec = ModelSpec {
        components: vec![
            ComponentSpec {
                domain: Interval::new(floor, b, true, false),
                drift: Arc::new(move |y| smoothed_drift_loan_unchecked(y, &dp)),
                intensity: Intensity::Constant(p.claim_intensity),
                is_cemetery: false,
            },
            ComponentSpec::cemetery(Interval::new(f64::NEG_INFINITY, floor, true, false)),
        ],
        jump_kernel: claim_kernel(p, 0.0),
        boundary_jump: None,
        reward: Arc::new(move |x: &State| {
            if x.component == SURPLUS {
                smoothed_reward_loan(x.y(), c, b, eps)
            } else {
                0.0
            }
        }),
        terminal: Arc::new(|_| 0.0),
        discount: p.discount,
        bounds: ModelBounds {
            intensity: p.claim_intensity,
            reward: c,
            terminal: 0.0,
        },
    };
    Ok(spec)
}

/// Unsmoothed loan model.
///
/// Components: `0` surplus on `(-c/ρ, b)`, `1` ruin on `(-∞, -c/ρ]`, `2` the
/// barrier point `[b, b]` where dividends are paid at rate `c`. Reaching `b`
/// from component `0` is a forced jump to `(2, b)`.
pub fn unsmoothed_loan_spec(p: LoanSpaceParams) -> Result<ModelSpec> {
    if !(p.premium > 0.0 && p.loan_rate > 0.0 && p.barrier > 0.0) {
        return Err(Error::input(
            "premium, loan rate and barrier must be positive",
        ));
    }
    let floor = -p.premium / p.loan_rate;
    let (c, rho, b) = (p.premium, p.loan_rate, p.barrier);
    Ok(ModelSpec {
        components: vec![
            ComponentSpec {
                domain: Interval::open(floor, b),
                drift: Arc::new(move |y| unsmoothed_drift_loan(y, c, rho, b)),
                intensity: Intensity::Constant(p.claim_intensity),
                is_cemetery: false,
            },
            ComponentSpec::cemetery(Interval::new(f64::NEG_INFINITY, floor, true, false)),
            ComponentSpec {
                domain: Interval::closed(b, b),
                drift: Arc::new(|_| 0.0),
                intensity: Intensity::Constant(p.claim_intensity),
                is_cemetery: false,
            },
        ],
        jump_kernel: claim_kernel(p, 0.0),
        boundary_jump: Some(Arc::new(move |_| State::scalar(AT_BARRIER, b))),
        reward: Arc::new(move |x: &State| if x.component == AT_BARRIER { c } else { 0.0 }),
        terminal: Arc::new(|_| 0.0),
        discount: p.discount,
        bounds: ModelBounds {
            intensity: p.claim_intensity,
            reward: c,
            terminal: 0.0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LoanSpaceParams {
        LoanSpaceParams {
            premium: 5.0,
            loan_rate: 0.05,
            barrier: 3.24289,
            claim_intensity: 4.0,
            claim_rate: 1.0,
            discount: 0.02,
        }
    }

    #[test]
    fn intervals() {
        let i = Interval::new(-1.0, 2.0, true, false);
        assert!(!i.contains(-1.0) && i.contains(-0.5) && i.contains(2.0) && !i.contains(2.1));
        assert_eq!(i.to_string(), "(-1, 2]");
        let c = Interval::new(f64::NEG_INFINITY, 0.0, false, false);
        assert!(c.lower_open && c.contains(-1e300));
        assert!(!c.sample(100, 1e3).is_empty());
        assert_eq!(Interval::closed(3.0, 3.0).sample(10, 1e3), vec![3.0]);
    }

    #[test]
    fn t_star_examples() {
        let smooth = smoothed_loan_spec(params(), 0.01).unwrap();
        assert_eq!(
            smooth.t_star(&State::scalar(SURPLUS, 0.0)).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            smooth.t_star(&State::scalar(RUIN, -200.0)).unwrap(),
            f64::INFINITY
        );
        let rough = unsmoothed_loan_spec(params()).unwrap();
        let b = params().barrier;
        let t = rough.t_star(&State::scalar(SURPLUS, b - 1.0)).unwrap();
        assert!((t - 0.2).abs() < 1e-10, "{t}");
        assert!(smooth.t_star(&State::scalar(SURPLUS, b + 1.0)).is_err());
        assert!(smooth.t_star(&State::scalar(7, 0.0)).is_err());
    }

    #[test]
    fn survival_examples() {
        let m = smoothed_loan_spec(params(), 0.01).unwrap();
        let x = State::scalar(SURPLUS, 0.0);
        assert_eq!(m.survival(&x, 0.0).unwrap(), 1.0);
        assert!((m.survival(&x, 0.25).unwrap() - (-1f64).exp()).abs() < 1e-15);

        let mut test = m.clone();
        test.components.push(ComponentSpec {
            domain: Interval::closed(0.0, 10.0),
            drift: Arc::new(|_| 0.0),
            intensity: Intensity::Function(Arc::new(|y| y)),
            is_cemetery: false,
        });
        let s = test.survival(&State::scalar(2, 1.0), 2.0).unwrap();
        assert!((s - (-2f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn survival_along_a_moving_flow() {
        // y' = 1, λ(y) = y from y = 1: ∫₀ᵗ (1 + s) ds = t + t²/2.
        let mut m = smoothed_loan_spec(params(), 0.01).unwrap();
        m.components.push(ComponentSpec {
            domain: Interval::closed(0.0, 100.0),
            drift: Arc::new(|_| 1.0),
            intensity: Intensity::Function(Arc::new(|y| y)),
            is_cemetery: false,
        });
        let s = m.survival(&State::scalar(2, 1.0), 3.0).unwrap();
        assert!((s - (-7.5f64).exp()).abs() < 1e-8 * s);
    }

    #[test]
    fn bounds() {
        assert_eq!(value_bound(5.0, 0.02, 0.0).unwrap(), 250.0);
        assert_eq!(value_bound(0.0, 0.5, 1.0).unwrap(), 1.0);
        assert_eq!(value_bound(1.0, 1.0, 1.0).unwrap(), 2.0);
        assert!(value_bound(1.0, 0.0, 1.0).is_err());
        assert_eq!(bias_bound(0, 4.0, 0.02, 250.0), 250.0);
        let b = bias_bound(512, 4.0, 0.02, 1.0);
        assert!(
            (b - (512.0 * (4.0f64 / 4.02).ln()).exp()).abs() < 1e-14,
            "{b}"
        );
        assert!((b - 0.0777994).abs() < 1e-7, "{b}");
        assert!((bias_bound(512, 4.0, 0.02, 250.0) - 19.45).abs() < 5e-3);
        let m = smoothed_loan_spec(params(), 0.01).unwrap();
        assert_eq!(m.value_upper_bound().unwrap(), 250.0);
    }

    #[test]
    fn shipped_specs_validate() {
        smoothed_loan_spec(params(), 0.01)
            .unwrap()
            .validate()
            .unwrap();
        unsmoothed_loan_spec(params()).unwrap().validate().unwrap();
    }

    #[test]
    fn validation_catches_bad_declarations() {
        let mut m = smoothed_loan_spec(params(), 0.01).unwrap();
        m.bounds.intensity = 3.0;
        assert!(matches!(m.validate(), Err(Error::Model(_))));
        let mut m = smoothed_loan_spec(params(), 0.01).unwrap();
        m.reward = Arc::new(|_| 1.0);
        assert!(m.validate().is_err());
        let mut m = smoothed_loan_spec(params(), 0.01).unwrap();
        m.terminal = Arc::new(|x| if x.component == SURPLUS { 0.5 } else { 0.0 });
        m.bounds.terminal = 1.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn claim_kernel_lands_in_surplus_or_nowhere() {
        let m = smoothed_loan_spec(params(), 0.01).unwrap();
        let x = State::scalar(SURPLUS, 0.0);
        let q = m.jump_kernel.cumulative(&x);
        assert!((q[1] - (1.0 - (-100f64).exp())).abs() < 1e-15);
        for u in [0.0, 0.3, 0.999999] {
            let y = (m.jump_kernel.branches[0].inverse_map)(&x, &[u]);
            assert_eq!(y.component, SURPLUS);
            assert!(y.y() <= 0.0 && y.y() >= -100.0);
        }
    }
}
