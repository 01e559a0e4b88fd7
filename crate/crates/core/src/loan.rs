//! Cramér–Lundberg surplus with loan and dividend barrier, smoothed.
//!
//! The surplus earns premiums at rate `c` above zero, pays interest `ρ` on
//! a loan below zero and is ruined below `-c/ρ`, where the interest eats the
//! whole premium. Claims arrive at Poisson rate `λ` with exponential sizes.
//! Dividends are paid at rate `c` while the surplus sits at the barrier `b`.
//! The smoothed model replaces the drift and the dividend rate by the C²
//! versions of [`crate::smoothing`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::flow::{cache, FlowOptions, FlowTable};
use crate::model::{self, LoanSpaceParams, ModelSpec};
use crate::smoothing::{smoothed_drift_loan_unchecked, smoothed_reward_loan, LoanDriftParams};
use crate::{Error, Result};

/// Model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoanParams {
    /// Premium rate `c`.
    pub premium: f64,
    /// Loan interest rate `ρ`.
    pub loan_rate: f64,
    /// Dividend barrier `b`.
    pub barrier: f64,
    /// Claim arrival rate `λ`.
    pub claim_intensity: f64,
    /// Rate `α` of the exponential claim sizes.
    pub claim_rate: f64,
    /// Discount rate `δ`.
    pub discount: f64,
    /// Smoothing width `ε`.
    pub epsilon: f64,
}

impl LoanParams {
    /// `c = 5, ρ = 0.05, b = 3.24289, λ = 4, α = 1, δ = 0.02, ε = 0.01`.
    pub fn reference() -> Self {
        LoanParams {
            premium: 5.0,
            loan_rate: 0.05,
            barrier: 3.24289,
            claim_intensity: 4.0,
            claim_rate: 1.0,
            discount: 0.02,
            epsilon: 0.01,
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        LoanParams { epsilon, ..self }
    }

    /// Checks the unsmoothed parameters only; `ε` is not looked at.
    pub fn validate_base(&self) -> Result<()> {
        let finite = [
            self.premium,
            self.loan_rate,
            self.barrier,
            self.claim_intensity,
            self.claim_rate,
            self.discount,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::input("model parameters must be finite"));
        }
        if !(self.premium > 0.0 && self.loan_rate > 0.0 && self.barrier > 0.0) {
            return Err(Error::input(format!(
                "premium, loan rate and barrier must be positive (c={}, rho={}, b={})",
                self.premium, self.loan_rate, self.barrier
            )));
        }
        if !(self.claim_intensity >= 0.0) {
            return Err(Error::input(format!(
                "claim intensity must be non-negative, got {}",
                self.claim_intensity
            )));
        }
        if !(self.claim_rate > 0.0) {
            return Err(Error::input(format!(
                "claim size rate must be positive, got {}",
                self.claim_rate
            )));
        }
        if !(self.discount > 0.0) {
            return Err(Error::input(format!(
                "discount rate must be positive, got {}",
                self.discount
            )));
        }
        Ok(())
    }

    /// Full check including the smoothing window `0 < ε < min(b/4, c/(2ρ))`.
    pub fn validate(&self) -> Result<()> {
        self.validate_base()?;
        self.drift_params().validate()
    }

    /// Ruin level `-c/ρ`.
    pub fn floor(&self) -> f64 {
        -self.premium / self.loan_rate
    }

    pub fn claims(&self) -> ClaimDistribution {
        ClaimDistribution::Exponential {
            rate: self.claim_rate,
        }
    }

    pub fn drift_params(&self) -> LoanDriftParams {
        LoanDriftParams {
            premium: self.premium,
            loan_rate: self.loan_rate,
            barrier: self.barrier,
            eps: self.epsilon,
        }
    }

    pub fn space_params(&self) -> LoanSpaceParams {
        LoanSpaceParams {
            premium: self.premium,
            loan_rate: self.loan_rate,
            barrier: self.barrier,
            claim_intensity: self.claim_intensity,
            claim_rate: self.claim_rate,
            discount: self.discount,
        }
    }

    /// `C_V = c/δ`.
    pub fn value_bound(&self) -> f64 {
        self.premium / self.discount
    }

    /// Truncation bias bound after `n` jumps.
    pub fn bias_bound(&self, n: usize) -> f64 {
        model::bias_bound(n, self.claim_intensity, self.discount, self.value_bound())
    }

    /// Whether the claim law meets the Gamma-type boundedness condition
    /// `rate ≥ 3` and `δ + λ > 3` for the integrand at the origin.
    pub fn integrand_bounded_at_origin(&self) -> bool {
        self.claim_rate >= 3.0 && self.discount + self.claim_intensity > 3.0
    }
}

/// Claim size law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClaimDistribution {
    Exponential { rate: f64 },
}

impl ClaimDistribution {
    pub fn pdf(&self, y: f64) -> f64 {
        match *self {
            ClaimDistribution::Exponential { rate } => {
                if y < 0.0 {
                    0.0
                } else {
                    rate * (-rate * y).exp()
                }
            }
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match *self {
            ClaimDistribution::Exponential { rate } => {
                if y <= 0.0 {
                    0.0
                } else {
                    -(-rate * y).exp_m1()
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            ClaimDistribution::Exponential { rate } => -(-p).ln_1p() / rate,
        }
    }
}

/// How the iterated integral is mapped onto the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Substitution {
    /// `t = -ln v`, `y = (χ + c/ρ) z`: the exponential and claim densities
    /// stay in the integrand as weights `λ v^{λ-1}`, `λ v^{λ+δ-1}` and
    /// `f_Y(y) (χ + c/ρ)`.
    PowerWeighted,
    /// `t = -ln(v)/λ`, `y = F_Y⁻¹(z F_Y(χ + c/ρ))`: inter-arrival times and
    /// claims are drawn from their laws and only the survival mass
    /// `F_Y(χ + c/ρ)` and the discount `e^{-δt}` remain as weights.
    #[default]
    InverseCdf,
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Substitution::PowerWeighted => "power",
            Substitution::InverseCdf => "inverse-cdf",
        })
    }
}

impl FromStr for Substitution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "power" | "power-weighted" | "powerweighted" => Ok(Substitution::PowerWeighted),
            "inverse-cdf" | "inversecdf" | "inverse" => Ok(Substitution::InverseCdf),
            other => Err(Error::input(format!("unknown substitution '{other}'"))),
        }
    }
}

/// Flow integration tolerance used for loan tables.
pub const FLOW_TOL: f64 = 1e-12;
/// Start offset above `-c/ρ`, relative to `b + c/ρ`.
const START_FRACTION: f64 = 1e-8;

/// Smoothed loan model with its precomputed flow.
#[derive(Debug, Clone)]
pub struct SmoothedLoanModel {
    params: LoanParams,
    flow: FlowTable,
    substitution: Substitution,
}

impl SmoothedLoanModel {
    pub fn new(params: LoanParams) -> Result<Self> {
        Self::with_substitution(params, Substitution::default())
    }

    pub fn with_substitution(params: LoanParams, substitution: Substitution) -> Result<Self> {
        params.validate()?;
        warn_unbounded(&params);
        let flow = build_flow_table(&params)?;
        Ok(SmoothedLoanModel {
            params,
            flow,
            substitution,
        })
    }

    /// Reads the flow table from `dir` if present, otherwise builds and stores it.
    pub fn with_flow_cache(
        params: LoanParams,
        substitution: Substitution,
        dir: &Path,
    ) -> Result<Self> {
        params.validate()?;
        warn_unbounded(&params);
        let path = cache::cache_path(dir, &flow_cache_key(&params));
        let flow = if path.exists() {
            log::debug!("reading flow table from {}", path.display());
            cache::read_table(&path)?
        } else {
            let table = build_flow_table(&params)?;
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            cache::write_table(&table, &path)?;
            log::debug!("wrote flow table to {}", path.display());
            table
        };
        Ok(SmoothedLoanModel {
            params,
            flow,
            substitution,
        })
    }

    pub fn params(&self) -> &LoanParams {
        &self.params
    }

    pub fn flow(&self) -> &FlowTable {
        &self.flow
    }

    pub fn substitution(&self) -> Substitution {
        self.substitution
    }

    pub fn set_substitution(&mut self, substitution: Substitution) {
        self.substitution = substitution;
    }

    pub fn drift(&self, y: f64) -> f64 {
        smoothed_drift_loan_unchecked(y, &self.params.drift_params())
    }

    pub fn reward(&self, y: f64) -> f64 {
        smoothed_reward_loan(
            y,
            self.params.premium,
            self.params.barrier,
            self.params.epsilon,
        )
    }

    /// The same model as a generic [`ModelSpec`].
    pub fn spec(&self) -> Result<ModelSpec> {
        model::smoothed_loan_spec(self.params.space_params(), self.params.epsilon)
    }
}

fn warn_unbounded(params: &LoanParams) {
    if !params.integrand_bounded_at_origin() {
        log::warn!(
            "claim rate {} and lambda + delta = {} miss the boundedness condition (rate >= 3, lambda + delta > 3); \
             the iterated integrand may be unbounded near the origin",
            params.claim_rate,
            params.claim_intensity + params.discount
        );
    }
}

/// Values hashed into the flow cache file name.
pub fn flow_cache_key(p: &LoanParams) -> [f64; 6] {
    [
        p.premium,
        p.loan_rate,
        p.barrier,
        p.epsilon,
        p.discount,
        FLOW_TOL,
    ]
}

/// Flow settings for the loan drift: finer steps in both smoothing bands.
pub fn flow_options(p: &LoanParams) -> FlowOptions {
    let (lower, b, eps) = (p.floor(), p.barrier, p.epsilon);
    let y_start = lower + START_FRACTION * (b - lower);
    FlowOptions {
        tol: FLOW_TOL,
        fine_bands: vec![(-eps, eps), (b - 2.0 * eps, b)],
        fine_dy: eps / 16.0,
        time_cap: 1e3 * (b - y_start) / p.premium,
        ..FlowOptions::for_domain(lower, b)
    }
}

pub fn build_flow_table(p: &LoanParams) -> Result<FlowTable> {
    let dp = p.drift_params();
    let (c, b, eps) = (p.premium, p.barrier, p.epsilon);
    FlowTable::build(
        |y| smoothed_drift_loan_unchecked(y, &dp),
        |y| smoothed_reward_loan(y, c, b, eps),
        (p.floor(), b),
        p.discount,
        &flow_options(p),
    )
}
