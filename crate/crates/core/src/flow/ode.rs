//! Adaptive Dormand–Prince 5(4) stepping for scalar autonomous ODEs `y' = g(y)`,
//! plus the cubic Hermite pieces used for dense output.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-11,
            atol: 1e-13,
            initial_step: 1e-4,
            max_steps: 2_000_000,
        }
    }
}

/// One accepted step with endpoint values and slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub t0: f64,
    pub y0: f64,
    pub f0: f64,
    pub t1: f64,
    pub y1: f64,
    pub f1: f64,
}

impl Step {
    pub fn eval(&self, t: f64) -> f64 {
        hermite(self.t0, self.t1, self.y0, self.y1, self.f0, self.f1, t)
    }

    /// Time in `[t0, t1]` at which the dense output crosses `level`, by bisection.
    pub fn crossing(&self, level: f64) -> f64 {
        let (mut lo, mut hi) = (self.t0, self.t1);
        let below = self.y0 < level;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (self.eval(mid) < level) == below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Stateful integrator; every call to [`Stepper::step`] returns one accepted step.
pub struct Stepper<G> {
    g: G,
    t: f64,
    y: f64,
    fy: f64,
    h: f64,
    opts: OdeOptions,
    steps: usize,
}

impl<G: Fn(f64) -> f64> Stepper<G> {
    pub fn new(g: G, y0: f64, opts: OdeOptions) -> Self {
        let fy = g(y0);
        Stepper {
            g,
            t: 0.0,
            y: y0,
            fy,
            h: opts.initial_step,
            opts,
            steps: 0,
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn position(&self) -> f64 {
        self.y
    }

    /// Advances by one accepted step no longer than `h_max`.
    pub fn step(&mut self, h_max: f64) -> Result<Step> {
        if self.steps >= self.opts.max_steps {
            return Err(Error::model(format!(
                "ODE step budget of {} exhausted at t={}",
                self.opts.max_steps, self.t
            )));
        }
        let g = &self.g;
        let (y, k1) = (self.y, self.fy);
        let mut h = self.h.min(h_max);
        loop {
            if !(h > 0.0) || !h.is_finite() || self.t + h == self.t {
                return Err(Error::model(format!(
                    "ODE step size underflow at t={}",
                    self.t
                )));
            }
            let k2 = g(y + h * A21 * k1);
            let k3 = g(y + h * (A31 * k1 + A32 * k2));
            let k4 = g(y + h * (A41 * k1 + A42 * k2 + A43 * k3));
            let k5 = g(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
            let k6 = g(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
            let y1 = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
            let k7 = g(y1);
            let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
            let scale = self.opts.atol + self.opts.rtol * y.abs().max(y1.abs());
            let ratio = (err / scale).abs();
            let factor = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            if ratio <= 1.0 {
                let step = Step {
                    t0: self.t,
                    y0: y,
                    f0: k1,
                    t1: self.t + h,
                    y1,
                    f1: k7,
                };
                self.t += h;
                self.y = y1;
                self.fy = k7;
                self.h = h * factor;
                self.steps += 1;
                return Ok(step);
            }
            h *= factor.min(1.0);
        }
    }
}

/// Cubic Hermite interpolant on `[t0, t1]`.
#[inline]
pub fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, m0: f64, m1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * m1
}

/// Derivative of [`hermite`] with respect to `t`.
#[inline]
pub fn hermite_slope(t0: f64, t1: f64, y0: f64, y1: f64, m0: f64, m1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    ((6.0 * s2 - 6.0 * s) * y0 + (-6.0 * s2 + 6.0 * s) * y1) / h
        + (3.0 * s2 - 4.0 * s + 1.0) * m0
        + (3.0 * s2 - 2.0 * s) * m1
}

/// Fritsch–Carlson limiter: shrinks node slopes so every Hermite piece is monotone.
pub fn limit_monotone_slopes(ts: &[f64], ys: &[f64], slopes: &mut [f64]) {
    for i in 0..ts.len().saturating_sub(1) {
        let secant = (ys[i + 1] - ys[i]) / (ts[i + 1] - ts[i]);
        if secant == 0.0 {
            slopes[i] = 0.0;
            slopes[i + 1] = 0.0;
            continue;
        }
        let a = slopes[i] / secant;
        let b = slopes[i + 1] / secant;
        if a < 0.0 {
            slopes[i] = 0.0;
        }
        if b < 0.0 {
            slopes[i + 1] = 0.0;
        }
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            slopes[i] = tau * a * secant;
            slopes[i + 1] = tau * b * secant;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_matches_closed_form() {
        let rho = 0.05;
        let mut st = Stepper::new(|y| rho * y, 1.0, OdeOptions::default());
        while st.time() < 50.0 {
            st.step(50.0 - st.time()).unwrap();
        }
        let exact = (rho * st.time()).exp();
        assert!((st.position() - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn dense_output_is_accurate_inside_steps() {
        let mut st = Stepper::new(|y| -y * y, 1.0, OdeOptions::default());
        for _ in 0..20 {
            let s = st.step(f64::INFINITY).unwrap();
            let tm = 0.5 * (s.t0 + s.t1);
            let exact = 1.0 / (1.0 + tm);
            assert!((s.eval(tm) - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let p = |t: f64| 2.0 * t * t * t - t + 0.5;
        let dp = |t: f64| 6.0 * t * t - 1.0;
        let (a, b) = (0.3, 1.7);
        for i in 0..=10 {
            let t = a + (b - a) * i as f64 / 10.0;
            let v = hermite(a, b, p(a), p(b), dp(a), dp(b), t);
            assert!((v - p(t)).abs() < 1e-13);
            let d = hermite_slope(a, b, p(a), p(b), dp(a), dp(b), t);
            assert!((d - dp(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn limiter_keeps_pieces_monotone() {
        let ts = [0.0, 1.0, 2.0];
        let ys = [0.0, 0.01, 1.0];
        let mut slopes = [5.0, 5.0, 0.0];
        limit_monotone_slopes(&ts, &ys, &mut slopes);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=200 {
            let t = i as f64 / 100.0;
            let k = if t < 1.0 { 0 } else { 1 };
            let v = hermite(
                ts[k],
                ts[k + 1],
                ys[k],
                ys[k + 1],
                slopes[k],
                slopes[k + 1],
                t,
            );
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }
}
