//! Event-driven Monte Carlo for the unsmoothed loan model.
//!
//! Between claims the surplus follows the exact piecewise flow: exponential
//! growth `(y + c/ρ) e^{ρt} - c/ρ` below zero, linear growth `y + ct` above
//! zero, frozen at `b` where dividends accrue at rate `c`. No ODE solver is
//! involved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::loan::LoanParams;
use crate::operators::Estimate;
use crate::parallel::{map_chunks, Execution, Moments, CHUNK_LEN};
use crate::{Error, Result};

/// Jump cap mirroring the 512-jump truncation of the cubature runs.
pub const DEFAULT_MAX_JUMPS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathResult {
    pub discounted_dividends: f64,
    /// Time of the ruinous claim, `∞` if none occurred.
    pub ruin_time: f64,
    pub jumps_used: usize,
    /// The path hit the jump cap while still alive.
    pub truncated: bool,
}

/// Time for the unsmoothed flow to carry `y` up to `b`.
pub fn time_to_barrier(y: f64, p: &LoanParams) -> f64 {
    let (c, rho, b) = (p.premium, p.loan_rate, p.barrier);
    let k = c / rho;
    if y >= b {
        return 0.0;
    }
    if y <= -k {
        return f64::INFINITY;
    }
    let to_zero = if y < 0.0 {
        (k / (y + k)).ln() / rho
    } else {
        0.0
    };
    to_zero + (b - y.max(0.0)) / c
}

/// Unsmoothed flow `φ(y, t)` in closed form.
pub fn unsmoothed_flow(y: f64, t: f64, p: &LoanParams) -> f64 {
    let (c, rho, b) = (p.premium, p.loan_rate, p.barrier);
    let k = c / rho;
    if y >= b || y <= -k || t <= 0.0 {
        return y;
    }
    let mut t = t;
    let mut y = y;
    if y < 0.0 {
        let to_zero = (k / (y + k)).ln() / rho;
        if t < to_zero {
            return ((y + k) * (rho * t).exp() - k).min(0.0);
        }
        t -= to_zero;
        y = 0.0;
    }
    (y + c * t).min(b)
}

/// `∫₀ᵗ e^{-δs} c 1{φ(y, s) = b} ds`.
pub fn dividends_until(y: f64, t: f64, p: &LoanParams) -> f64 {
    let tb = time_to_barrier(y, p);
    if !(t > tb) {
        return 0.0;
    }
    let d = p.discount;
    let tail = if t.is_infinite() { 0.0 } else { (-d * t).exp() };
    p.premium * ((-d * tb).exp() - tail) / d
}

/// Simulates one path from `x0` until ruin or `max_jumps` claims.
pub fn simulate_path<R: Rng + ?Sized>(
    p: &LoanParams,
    x0: f64,
    rng: &mut R,
    max_jumps: usize,
) -> PathResult {
    let floor = p.floor();
    let claims = Exp::new(p.claim_rate).expect("positive claim rate");
    let arrivals =
        (p.claim_intensity > 0.0).then(|| Exp::new(p.claim_intensity).expect("positive intensity"));
    let mut y = x0;
    let mut now = 0.0;
    let mut total = 0.0;
    for j in 0..max_jumps {
        let dt = match &arrivals {
            Some(e) => e.sample(rng),
            None => f64::INFINITY,
        };
        total += (-p.discount * now).exp() * dividends_until(y, dt, p);
        if dt.is_infinite() {
            return PathResult {
                discounted_dividends: total,
                ruin_time: f64::INFINITY,
                jumps_used: j,
                truncated: false,
            };
        }
        y = unsmoothed_flow(y, dt, p);
        now += dt;
        y -= claims.sample(rng);
        if y < floor {
            return PathResult {
                discounted_dividends: total,
                ruin_time: now,
                jumps_used: j + 1,
                truncated: false,
            };
        }
    }
    PathResult {
        discounted_dividends: total,
        ruin_time: f64::INFINITY,
        jumps_used: max_jumps,
        truncated: true,
    }
}

/// RNG of path `i`: ChaCha8 keyed by the seed, stream `i`.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

fn check(p: &LoanParams, x0: f64, paths: usize) -> Result<()> {
    p.validate_base()?;
    if paths == 0 {
        return Err(Error::input("need at least one path"));
    }
    if !(x0 >= p.floor()) || !x0.is_finite() {
        return Err(Error::input(format!(
            "start surplus {x0} below the ruin level {}",
            p.floor()
        )));
    }
    Ok(())
}

/// Sample mean and standard error of the discounted dividends over `paths` paths.
///
/// A start above `b` is paid out at once: `x0 - b` plus the value from `b`.
pub fn mc_reference(
    p: &LoanParams,
    x0: f64,
    paths: usize,
    seed: u64,
    max_jumps: usize,
) -> Result<Estimate> {
    mc_reference_with(p, x0, paths, seed, max_jumps, Execution::default())
}

pub fn mc_reference_with(
    p: &LoanParams,
    x0: f64,
    paths: usize,
    seed: u64,
    max_jumps: usize,
    exec: Execution,
) -> Result<Estimate> {
    let started = std::time::Instant::now();
    check(p, x0, paths)?;
    let (start, lump) = if x0 > p.barrier {
        (p.barrier, x0 - p.barrier)
    } else {
        (x0, 0.0)
    };
    let m = path_moments(paths, exec, |i| {
        simulate_path(p, start, &mut path_rng(seed, i as u64), max_jumps).discounted_dividends
    });
    Ok(Estimate {
        value: m.mean + lump,
        std_error: m.sample_variance().map(|v| (v / paths as f64).sqrt()),
        bias_bound: p.bias_bound(max_jumps),
        nodes: paths,
        dim: 0,
        replicates: 1,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

fn path_moments(paths: usize, exec: Execution, f: impl Fn(usize) -> f64 + Sync + Send) -> Moments {
    let mut total = Moments::default();
    for chunk in map_chunks(paths, CHUNK_LEN, exec, |range| {
        let mut m = Moments::default();
        range.for_each(|i| m.push(f(i)));
        m
    }) {
        total.merge(&chunk);
    }
    total
}

/// Classical model `dX = c dt - dS`: whether the surplus from `u` goes
/// negative within `max_jumps` claims.
pub fn classical_ruin<R: Rng + ?Sized>(
    c: f64,
    lambda: f64,
    rate: f64,
    u: f64,
    rng: &mut R,
    max_jumps: usize,
) -> bool {
    let arrivals = Exp::new(lambda).expect("positive intensity");
    let claims = Exp::new(rate).expect("positive claim rate");
    let mut x = u;
    for _ in 0..max_jumps {
        x += c * arrivals.sample(rng) - claims.sample(rng);
        if x < 0.0 {
            return true;
        }
    }
    false
}

/// Finite-horizon estimate of the classical ruin probability `ψ(u)`.
pub fn classical_ruin_probability(
    c: f64,
    lambda: f64,
    rate: f64,
    u: f64,
    paths: usize,
    seed: u64,
    max_jumps: usize,
    exec: Execution,
) -> Result<Estimate> {
    if !(c > 0.0 && lambda > 0.0 && rate > 0.0) || paths == 0 {
        return Err(Error::input(
            "classical ruin needs positive c, lambda, rate and paths",
        ));
    }
    let started = std::time::Instant::now();
    let m = path_moments(paths, exec, |i| {
        classical_ruin(c, lambda, rate, u, &mut path_rng(seed, i as u64), max_jumps) as u8 as f64
    });
    Ok(Estimate {
        value: m.mean,
        std_error: m.sample_variance().map(|v| (v / paths as f64).sqrt()),
        bias_bound: 0.0,
        nodes: paths,
        dim: 0,
        replicates: 1,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// `ψ(u) = λ/(cα) e^{-(α - λ/c) u}` for exponential claims with positive safety loading.
pub fn classical_ruin_exact(c: f64, lambda: f64, rate: f64, u: f64) -> f64 {
    lambda / (c * rate) * (-(rate - lambda / c) * u).exp()
}
