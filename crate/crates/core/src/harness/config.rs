//! Flat `key = value` experiment configuration.

use std::path::{Path, PathBuf};

use crate::cubature::RuleKind;
use crate::loan::{LoanParams, Substitution};
use crate::{Error, Result};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "PDMPVAL_SEED";

pub const DEFAULT_SEED: u64 = 20_240_613;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: LoanParams,
    pub x0: f64,
    pub methods: Vec<RuleKind>,
    /// Node counts, strictly increasing. For Gauss products this is the
    /// per-axis order.
    pub m_schedule: Vec<usize>,
    /// Jumps `n`; the cubature dimension is `2n`.
    pub jumps: usize,
    pub replicates: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub substitution: Substitution,
    /// Smoothing widths of the ε-study, strictly decreasing.
    pub epsilons: Vec<f64>,
    /// Paths of the unsmoothed Monte Carlo reference.
    pub mc_paths: usize,
    /// Jump cap of the Monte Carlo reference.
    pub mc_jumps: usize,
    /// Fill the `wall_ms` column. Off gives byte-reproducible files.
    pub record_timing: bool,
    pub flow_cache: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    /// Desk-scale run: 32 jumps, 20 replicates, `M = 50·2^j` for `j = 1..=10`.
    fn default() -> Self {
        ExperimentConfig {
            params: LoanParams::reference(),
            x0: 0.0,
            methods: vec![RuleKind::Mc, RuleKind::Sobol],
            m_schedule: (1..=10).map(|j| 50 << j).collect(),
            jumps: 32,
            replicates: 20,
            seed: DEFAULT_SEED,
            out: PathBuf::from("results.csv"),
            substitution: Substitution::default(),
            epsilons: vec![0.08, 0.04, 0.02, 0.01],
            mc_paths: 100_000,
            mc_jumps: 32,
            record_timing: true,
            flow_cache: None,
        }
    }
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        2 * self.jumps
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses config text over the defaults. `#` starts a comment.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut mc_jumps_set = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fail = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|e| fail(format!("{key}: {e}")));
            let int = |v: &str| {
                v.replace('_', "")
                    .parse::<usize>()
                    .map_err(|e| fail(format!("{key}: {e}")))
            };
            match key {
                "c" => cfg.params.premium = num(value)?,
                "rho" => cfg.params.loan_rate = num(value)?,
                "b" => cfg.params.barrier = num(value)?,
                "lambda" => cfg.params.claim_intensity = num(value)?,
                "alpha" => cfg.params.claim_rate = num(value)?,
                "delta" => cfg.params.discount = num(value)?,
                "epsilon" => cfg.params.epsilon = num(value)?,
                "x0" => cfg.x0 = num(value)?,
                "methods" => {
                    cfg.methods = list(value)
                        .map(|m| m.parse::<RuleKind>().map_err(|e| fail(e.to_string())))
                        .collect::<Result<_>>()?
                }
                "m_schedule" => cfg.m_schedule = parse_schedule(value).map_err(fail)?,
                "jumps" => cfg.jumps = int(value)?,
                "replicates" => cfg.replicates = int(value)?,
                "seed" => cfg.seed = value.parse().map_err(|e| fail(format!("seed: {e}")))?,
                "out" => cfg.out = PathBuf::from(value),
                "substitution" => {
                    cfg.substitution = value.parse().map_err(|e: Error| fail(e.to_string()))?
                }
                "epsilons" => cfg.epsilons = list(value).map(num).collect::<Result<_>>()?,
                "mc_paths" => cfg.mc_paths = int(value)?,
                "mc_jumps" => {
                    cfg.mc_jumps = int(value)?;
                    mc_jumps_set = true;
                }
                "timing" => cfg.record_timing = parse_bool(value).map_err(fail)?,
                "flow_cache" => cfg.flow_cache = Some(PathBuf::from(value)),
                other => return Err(fail(format!("unknown key `{other}`"))),
            }
        }
        if !mc_jumps_set {
            cfg.mc_jumps = cfg.jumps;
        }
        Ok(cfg)
    }

    /// Applies `PDMPVAL_SEED` if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|e| Error::input(format!("{SEED_ENV}={v}: {e}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.methods.is_empty() {
            return Err(Error::input("no methods configured"));
        }
        if self.m_schedule.is_empty() || self.m_schedule[0] == 0 {
            return Err(Error::input("M schedule must be nonempty and positive"));
        }
        if self.m_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("M schedule must be strictly increasing"));
        }
        if self.jumps == 0 || self.mc_jumps == 0 {
            return Err(Error::input("jump counts must be positive"));
        }
        if self.replicates == 0 || self.mc_paths == 0 {
            return Err(Error::input(
                "replicates and Monte Carlo paths must be positive",
            ));
        }
        if !(self.x0 > self.params.floor()) {
            return Err(Error::input(format!(
                "x0 = {} is at or below the ruin level",
                self.x0
            )));
        }
        Ok(())
    }

    /// Checks the ε schedule on top of [`ExperimentConfig::validate`].
    pub fn validate_epsilons(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::input("empty epsilon schedule"));
        }
        if self.epsilons.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::input("epsilon schedule must be strictly decreasing"));
        }
        for &eps in &self.epsilons {
            self.params.with_epsilon(eps).validate()?;
        }
        Ok(())
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value
        .split([',', ' ', '\t'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("expected a boolean, got `{other}`")),
    }
}

/// Either a list `100, 200, 400` or the geometric form `50*2^1..10`
/// (both ends inclusive).
pub fn parse_schedule(value: &str) -> std::result::Result<Vec<usize>, String> {
    if let Some((base, exps)) = value.split_once("*2^") {
        let base: usize = base
            .trim()
            .parse()
            .map_err(|e| format!("m_schedule base: {e}"))?;
        let (lo, hi) = exps
            .split_once("..")
            .ok_or_else(|| format!("expected `a..b` exponents, got `{exps}`"))?;
        let lo: u32 = lo
            .trim()
            .parse()
            .map_err(|e| format!("m_schedule exponent: {e}"))?;
        let hi: u32 = hi
            .trim()
            .parse()
            .map_err(|e| format!("m_schedule exponent: {e}"))?;
        if lo > hi || hi > 40 {
            return Err(format!("bad exponent range {lo}..{hi}"));
        }
        return Ok((lo..=hi).map(|j| base << j).collect());
    }
    list(value)
        .map(|v| {
            v.replace('_', "")
                .parse::<usize>()
                .map_err(|e| format!("m_schedule: {e}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_desk_scale() {
        let c = ExperimentConfig::default();
        assert_eq!(c.dim(), 64);
        assert_eq!(c.replicates, 20);
        assert_eq!(*c.m_schedule.last().unwrap(), 50 * 1024);
        c.validate().unwrap();
        c.validate_epsilons().unwrap();
    }

    #[test]
    fn parses_all_keys() {
        let text = "# comment\nc = 4\nrho=0.1\nb = 2\nlambda = 3\nalpha = 2\ndelta = 0.05\nepsilon = 0.02\n\
                    x0 = 1\nmethods = mc, sobol, halton\nm_schedule = 50*2^1..6\njumps = 8\nreplicates = 5\n\
                    seed = 9\nout = x.csv # trailing\nsubstitution = power\nepsilons = 0.1 0.05\nmc_paths = 1_000\n\
                    timing = off\nflow_cache = /tmp/f\n";
        let c = ExperimentConfig::parse(text, Path::new("t.cfg")).unwrap();
        assert_eq!(c.params.premium, 4.0);
        assert_eq!(c.params.loan_rate, 0.1);
        assert_eq!(
            c.methods,
            vec![RuleKind::Mc, RuleKind::Sobol, RuleKind::ScrambledHalton]
        );
        assert_eq!(c.m_schedule, vec![100, 200, 400, 800, 1600, 3200]);
        assert_eq!((c.jumps, c.mc_jumps, c.replicates, c.seed), (8, 8, 5, 9));
        assert_eq!(c.out, PathBuf::from("x.csv"));
        assert_eq!(c.substitution, Substitution::PowerWeighted);
        assert_eq!(c.epsilons, vec![0.1, 0.05]);
        assert_eq!(c.mc_paths, 1000);
        assert!(!c.record_timing);
        assert_eq!(c.flow_cache, Some(PathBuf::from("/tmp/f")));
    }

    #[test]
    fn reports_line_numbers() {
        let err = ExperimentConfig::parse("c = 5\nbogus = 1\n", Path::new("a.cfg")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(ExperimentConfig::parse("c 5", Path::new("a.cfg")).is_err());
        assert!(ExperimentConfig::parse("c = five", Path::new("a.cfg")).is_err());
        assert!(ExperimentConfig::parse("methods = simpson", Path::new("a.cfg")).is_err());
    }

    #[test]
    fn schedule_forms() {
        assert_eq!(parse_schedule("10, 20,40").unwrap(), vec![10, 20, 40]);
        assert_eq!(parse_schedule("50*2^3..3").unwrap(), vec![400]);
        assert!(parse_schedule("50*2^4..3").is_err());
        assert!(parse_schedule("50*2^x").is_err());
    }

    #[test]
    fn validation_rejects_bad_schedules() {
        let mut c = ExperimentConfig {
            m_schedule: vec![100, 100],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.m_schedule = vec![];
        assert!(c.validate().is_err());
        c.m_schedule = vec![100];
        c.epsilons = vec![0.01, 0.02];
        assert!(c.validate_epsilons().is_err());
        c.epsilons = vec![2.0];
        assert!(c.validate_epsilons().is_err());
    }
}
