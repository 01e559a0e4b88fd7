//! Master trajectory of a scalar autonomous flow.
//!
//! For a drift `g ≥ 0` that vanishes at an upper attractor `b`, every
//! trajectory is a time shift of a single solution curve `P`. The curve is
//! integrated once from just above the lower equilibrium, stored on the
//! accepted step grid, and read back through cubic Hermite pieces whose node
//! slopes are the exact drift values. The inverse-time map `T` is the exact
//! inverse of those pieces, so
//!
//! ```text
//! φ(y, t) = P(T(y) + t)
//! ```
//!
//! satisfies the semigroup identity up to root-finding precision. The same
//! grid carries the cumulative discounted reward `R(τ) = ∫₀^τ e^{-δs} ℓ(P(s)) ds`,
//! from which `L(t, y) = e^{δT(y)} (R(T(y) + t) - R(T(y)))`.

pub mod cache;
pub mod ode;

use ode::{hermite, limit_monotone_slopes, OdeOptions, Stepper};

use crate::{Error, Result};

/// Build settings for [`FlowTable::build`].
#[derive(Debug, Clone)]
pub struct FlowOptions {
    /// Relative local error tolerance of the integrator.
    pub tol: f64,
    /// Largest position increment per stored step.
    pub max_dy: f64,
    /// Largest increment as a fraction of the distance to the lower end.
    pub max_relative_dy: f64,
    /// Position bands that get `fine_dy` spacing.
    pub fine_bands: Vec<(f64, f64)>,
    pub fine_dy: f64,
    /// Integration stops here even if the attractor is not reached.
    pub time_cap: f64,
}

impl FlowOptions {
    /// Generic defaults for a domain `(lower, upper)`.
    pub fn for_domain(lower: f64, upper: f64) -> Self {
        let span = upper - lower;
        FlowOptions {
            tol: 1e-12,
            max_dy: span / 2000.0,
            max_relative_dy: 0.01,
            fine_bands: Vec::new(),
            fine_dy: span / 2000.0,
            time_cap: 1e6,
        }
    }

    fn max_dy_at(&self, y: f64, lower: f64) -> f64 {
        let mut dy = self.max_dy.min(self.max_relative_dy * (y - lower));
        if self
            .fine_bands
            .iter()
            .any(|&(a, b)| y >= a - self.max_dy && y <= b)
        {
            dy = dy.min(self.fine_dy);
        }
        dy
    }
}

/// Where the trajectory is close enough to the attractor for the reward to be frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailAnchor {
    pub index: usize,
    pub time: f64,
    pub position: f64,
    pub reward: f64,
}

/// Cached master trajectory with its discounted reward integral.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTable {
    pub(crate) lower: f64,
    pub(crate) attractor: f64,
    pub(crate) discount: f64,
    /// Drift at the lower end and at the first grid node; the region in
    /// between is treated with an affine drift.
    pub(crate) lower_drift: f64,
    pub(crate) start_drift: f64,
    pub(crate) start_reward: f64,
    pub(crate) ts: Vec<f64>,
    pub(crate) ys: Vec<f64>,
    pub(crate) slopes: Vec<f64>,
    pub(crate) reward_cum: Vec<f64>,
    pub(crate) reward_rate: Vec<f64>,
    pub(crate) tail: TailAnchor,
    pub(crate) converged: bool,
}

/// Relative distance to the attractor at which the trajectory counts as arrived.
const ARRIVAL_FRACTION: f64 = 1e-12;
/// Relative distance at which the reward is frozen for the closed-form tail.
const TAIL_FRACTION: f64 = 1e-6;
/// Grid size of the sign check on the drift.
const DRIFT_SAMPLES: usize = 10_000;
/// Start offset above the lower equilibrium, relative to the domain span.
const START_FRACTION: f64 = 1e-8;

impl FlowTable {
    /// Integrates `y' = drift(y)` from just above `domain.0` towards `domain.1`.
    ///
    /// `drift` must be non-negative on the domain. The reward is sampled along
    /// the way and discounted at rate `discount`.
    pub fn build<G, L>(
        drift: G,
        reward: L,
        domain: (f64, f64),
        discount: f64,
        opts: &FlowOptions,
    ) -> Result<Self>
    where
        G: Fn(f64) -> f64,
        L: Fn(f64) -> f64,
    {
        let (lower, attractor) = domain;
        if !(lower < attractor) || !lower.is_finite() || !attractor.is_finite() {
            return Err(Error::input(format!(
                "flow domain ({lower}, {attractor}) is empty"
            )));
        }
        if !(discount > 0.0) {
            return Err(Error::input(format!(
                "discount rate must be positive, got {discount}"
            )));
        }
        if !(opts.tol > 0.0) {
            return Err(Error::input("flow tolerance must be positive"));
        }
        let span = attractor - lower;
        let y_start = lower + START_FRACTION * span;
        for k in 0..=DRIFT_SAMPLES {
            let y = y_start + (attractor - y_start) * k as f64 / DRIFT_SAMPLES as f64;
            let g = drift(y);
            if g < 0.0 || g.is_nan() {
                return Err(Error::model(format!("drift is negative ({g}) at {y}")));
            }
        }
        let start_drift = drift(y_start);

        let ode_opts = OdeOptions {
            rtol: opts.tol,
            atol: opts.tol * 1e-2 * span,
            initial_step: (opts.max_dy_at(y_start, lower) / start_drift.max(1e-300)).min(1.0),
            ..OdeOptions::default()
        };
        let mut ts = vec![0.0];
        let mut ys = vec![y_start];
        let mut slopes = vec![start_drift];
        let mut converged = false;
        let mut stepper = Stepper::new(&drift, y_start, ode_opts);
        loop {
            let y = stepper.position();
            let g = slopes[slopes.len() - 1];
            if attractor - y <= ARRIVAL_FRACTION * span {
                converged = true;
                break;
            }
            if stepper.time() >= opts.time_cap {
                // Degenerate (polynomial) attractors are only reached asymptotically.
                converged = attractor - y <= TAIL_FRACTION * span;
                break;
            }
            if g == 0.0 {
                // Stalled below the attractor: an interior equilibrium.
                break;
            }
            let h_max = (opts.max_dy_at(y, lower) / g).min(opts.time_cap - stepper.time());
            let step = stepper.step(h_max)?;
            if step.f1 < 0.0 {
                return Err(Error::model(format!(
                    "drift is negative ({}) at {}",
                    step.f1, step.y1
                )));
            }
            if step.y1 >= attractor {
                let t_hit = step.crossing(attractor);
                if t_hit > step.t0 {
                    ts.push(t_hit);
                    ys.push(attractor);
                    slopes.push(drift(attractor));
                }
                converged = true;
                break;
            }
            if step.y1 <= step.y0 {
                converged = attractor - step.y0 <= TAIL_FRACTION * span;
                break;
            }
            ts.push(step.t1);
            ys.push(step.y1);
            slopes.push(step.f1);
        }
        if ts.len() < 2 {
            return Err(Error::model("flow made no progress from its start point"));
        }
        limit_monotone_slopes(&ts, &ys, &mut slopes);

        let reward_rate: Vec<f64> = ts
            .iter()
            .zip(&ys)
            .map(|(&t, &y)| (-discount * t).exp() * reward(y))
            .collect();
        let mut reward_cum = Vec::with_capacity(ts.len());
        reward_cum.push(0.0);
        for i in 0..ts.len() - 1 {
            let (t0, t1) = (ts[i], ts[i + 1]);
            let tm = 0.5 * (t0 + t1);
            let ym = hermite(t0, t1, ys[i], ys[i + 1], slopes[i], slopes[i + 1], tm);
            let fm = (-discount * tm).exp() * reward(ym);
            let piece = (t1 - t0) / 6.0 * (reward_rate[i] + 4.0 * fm + reward_rate[i + 1]);
            reward_cum.push(reward_cum[i] + piece);
        }

        let tail_level = attractor - TAIL_FRACTION * (attractor - y_start);
        let tail_index = ys
            .iter()
            .position(|&y| y >= tail_level)
            .unwrap_or(ys.len() - 1);
        let tail = TailAnchor {
            index: tail_index,
            time: ts[tail_index],
            position: ys[tail_index],
            reward: reward(ys[tail_index]),
        };
        if !converged {
            log::warn!(
                "flow table stopped at t={} with position {} short of {attractor}",
                ts[ts.len() - 1],
                ys[ys.len() - 1]
            );
        }
        Ok(FlowTable {
            lower,
            attractor,
            discount,
            lower_drift: drift(lower).max(0.0),
            start_drift,
            start_reward: reward(y_start),
            ts,
            ys,
            slopes,
            reward_cum,
            reward_rate,
            tail,
            converged,
        })
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn grid_t(&self) -> &[f64] {
        &self.ts
    }

    pub fn grid_y(&self) -> &[f64] {
        &self.ys
    }

    pub fn y_start(&self) -> f64 {
        self.ys[0]
    }

    pub fn y_end(&self) -> f64 {
        self.ys[self.ys.len() - 1]
    }

    pub fn horizon(&self) -> f64 {
        self.ts[self.ts.len() - 1]
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn attractor(&self) -> f64 {
        self.attractor
    }

    pub fn tail(&self) -> TailAnchor {
        self.tail
    }

    /// Whether the trajectory reached the attractor before the time cap.
    pub fn converged(&self) -> bool {
        self.converged
    }

    fn affine_slope(&self) -> f64 {
        (self.start_drift - self.lower_drift) / (self.ys[0] - self.lower)
    }

    fn segment_by_time(&self, tau: f64) -> usize {
        match self.ts.partition_point(|&t| t <= tau) {
            0 => 0,
            k => (k - 1).min(self.ts.len() - 2),
        }
    }

    fn segment_by_position(&self, y: f64) -> usize {
        match self.ys.partition_point(|&v| v <= y) {
            0 => 0,
            k => (k - 1).min(self.ys.len() - 2),
        }
    }

    /// Position `P(τ)` on the master trajectory; constant past the horizon.
    pub fn pos_of(&self, tau: f64) -> f64 {
        if tau < 0.0 {
            let k = self.affine_slope();
            let g_s = self.start_drift;
            if k == 0.0 {
                return self.ys[0] + g_s * tau;
            }
            return self.lower + (g_s * (k * tau).exp() - self.lower_drift) / k;
        }
        if tau >= self.horizon() {
            return self.y_end();
        }
        let i = self.segment_by_time(tau);
        hermite(
            self.ts[i],
            self.ts[i + 1],
            self.ys[i],
            self.ys[i + 1],
            self.slopes[i],
            self.slopes[i + 1],
            tau,
        )
    }

    /// Elapsed time `T(y)` from the start node to `y`.
    ///
    /// Negative below the start node, `-∞` at or below the lower equilibrium,
    /// and the horizon at or beyond the last node.
    pub fn time_of(&self, y: f64) -> f64 {
        if y >= self.y_end() {
            return self.horizon();
        }
        if y < self.ys[0] {
            let k = self.affine_slope();
            let g_y = self.lower_drift + k * (y - self.lower);
            if !(g_y > 0.0) {
                return f64::NEG_INFINITY;
            }
            if k == 0.0 {
                return -(self.ys[0] - y) / self.lower_drift;
            }
            return -(self.start_drift / g_y).ln() / k;
        }
        let i = self.segment_by_position(y);
        self.invert_segment(i, y)
    }

    fn invert_segment(&self, i: usize, y: f64) -> f64 {
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i], self.slopes[i + 1]);
        if y <= y0 {
            return t0;
        }
        if y >= y1 {
            return t1;
        }
        // Local cubic p(s) = y0 + s (c1 + s (c2 + s c3)) on s in [0, 1].
        let h = t1 - t0;
        let dy = y1 - y0;
        let c1 = h * m0;
        let c2 = 3.0 * dy - h * (2.0 * m0 + m1);
        let c3 = h * (m0 + m1) - 2.0 * dy;
        let target = y - y0;
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut s = target / dy;
        for _ in 0..60 {
            let r = s * (c1 + s * (c2 + s * c3)) - target;
            if r == 0.0 {
                break;
            }
            if r < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let d = c1 + s * (2.0 * c2 + 3.0 * s * c3);
            let mut next = if d > 0.0 { s - r / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - s).abs() <= 4.0 * f64::EPSILON;
            s = next;
            if done {
                break;
            }
        }
        t0 + h * s
    }

    /// `φ(y, t)`: position reached from `y` after time `t`.
    pub fn flow_at(&self, y: f64, t: f64) -> f64 {
        if t == 0.0 || y <= self.lower || y >= self.y_end() {
            return y;
        }
        self.flow_from(self.time_of(y), y, t)
    }

    fn flow_from(&self, tau: f64, y: f64, t: f64) -> f64 {
        if t == 0.0 || !tau.is_finite() || y <= self.lower || y >= self.y_end() {
            return y;
        }
        self.pos_of(tau + t).max(y)
    }

    /// `(φ(y, t), L(t, y))` with a single position lookup.
    pub fn advance(&self, y: f64, t: f64) -> (f64, f64) {
        let tau = if y <= self.lower {
            f64::NEG_INFINITY
        } else {
            self.time_of(y)
        };
        (self.flow_from(tau, y, t), self.reward_from(tau, y, t))
    }

    /// Checked variant of [`FlowTable::flow_at`].
    pub fn try_flow_at(&self, y: f64, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::input(format!(
                "flow time must be non-negative, got {t}"
            )));
        }
        if !(y > self.lower) || y > self.attractor {
            return Err(Error::input(format!(
                "position {y} outside table range ({}, {}]",
                self.lower, self.attractor
            )));
        }
        Ok(self.flow_at(y, t))
    }

    /// Cumulative discounted reward along the master trajectory.
    fn cumulative(&self, tau: f64) -> f64 {
        let d = self.discount;
        if tau < 0.0 {
            return -self.start_reward * (-(d * tau)).exp_m1() / d;
        }
        let tail = self.tail;
        if tau > tail.time {
            let rest = if tau.is_infinite() {
                (-d * tail.time).exp()
            } else {
                (-d * tail.time).exp() - (-d * tau).exp()
            };
            return self.reward_cum[tail.index] + tail.reward * rest / d;
        }
        let i = self.segment_by_time(tau).min(tail.index.saturating_sub(1));
        hermite(
            self.ts[i],
            self.ts[i + 1],
            self.reward_cum[i],
            self.reward_cum[i + 1],
            self.reward_rate[i],
            self.reward_rate[i + 1],
            tau,
        )
    }

    /// `L(t, y) = ∫₀ᵗ e^{-δs} ℓ(φ(y, s)) ds`; `t` may be infinite.
    pub fn reward_integral(&self, y: f64, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let d = self.discount;
        let annuity = if t.is_infinite() {
            1.0 / d
        } else {
            -(-d * t).exp_m1() / d
        };
        if y <= self.lower {
            return self.start_reward * annuity;
        }
        self.reward_from(self.time_of(y), y, t)
    }

    fn reward_from(&self, tau0: f64, y: f64, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let d = self.discount;
        let annuity = if t.is_infinite() {
            1.0 / d
        } else {
            -(-d * t).exp_m1() / d
        };
        if y <= self.lower || !tau0.is_finite() {
            return self.start_reward * annuity;
        }
        if tau0 >= self.tail.time {
            return self.tail.reward * annuity;
        }
        let tau1 = tau0 + t;
        let diff = self.cumulative(tau1) - self.cumulative(tau0);
        ((d * tau0).exp() * diff).max(0.0)
    }
}
