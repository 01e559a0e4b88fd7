//! Convergence and ε-refinement studies with CSV and plot-data output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use crate::cubature::{CubatureSpec, RuleKind};
use crate::loan::{LoanParams, SmoothedLoanModel};
use crate::mc::mc_reference_with;
use crate::operators::{estimate_value_with, Estimate};
use crate::parallel::Execution;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "method,M,d,replicates,mean,std_error,bias_bound,seed,wall_ms";

pub const EPSILON_HEADER: &str =
    "epsilon,method,M,d,replicates,mean,std_error,mc_mean,mc_std_error,gap,wall_ms";

/// Statistical error above this fraction of the smallest gap makes the
/// ε-slope noise-dominated.
pub const NOISE_FRACTION: f64 = 0.2;

/// One line of the convergence CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub method: RuleKind,
    pub points: usize,
    pub dim: usize,
    pub replicates: usize,
    pub mean: f64,
    pub std_error: Option<f64>,
    pub bias_bound: f64,
    pub seed: u64,
    pub wall_ms: Option<f64>,
}

impl CsvRow {
    fn from_estimate(
        method: RuleKind,
        points: usize,
        seed: u64,
        e: &Estimate,
        timing: bool,
    ) -> Self {
        CsvRow {
            method,
            points,
            dim: e.dim,
            replicates: e.replicates,
            mean: e.value,
            std_error: e.std_error,
            bias_bound: e.bias_bound,
            seed,
            wall_ms: timing.then_some(e.wall_ms),
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.method,
            self.points,
            self.dim,
            self.replicates,
            self.mean,
            opt(self.std_error),
            self.bias_bound,
            self.seed,
            opt(self.wall_ms.map(|t| (t * 1e3).round() / 1e3)),
        )
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn build_model(cfg: &ExperimentConfig, params: LoanParams) -> Result<SmoothedLoanModel> {
    match &cfg.flow_cache {
        Some(dir) => SmoothedLoanModel::with_flow_cache(params, cfg.substitution, dir),
        None => SmoothedLoanModel::with_substitution(params, cfg.substitution),
    }
}

fn spec(cfg: &ExperimentConfig, kind: RuleKind, points: usize) -> CubatureSpec {
    CubatureSpec {
        kind,
        points,
        dim: cfg.dim(),
        seed: cfg.seed,
        replicates: cfg.replicates,
    }
}

/// One estimate per `(method, M)`, methods in config order, `M` increasing.
pub fn run_convergence(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<CsvRow>> {
    cfg.validate()?;
    let model = build_model(cfg, cfg.params)?;
    let mut rows = Vec::with_capacity(cfg.methods.len() * cfg.m_schedule.len());
    for &method in &cfg.methods {
        for &m in &cfg.m_schedule {
            let e = estimate_value_with(&model, cfg.x0, cfg.jumps, &spec(cfg, method, m), exec)?;
            log::info!("{method} M={m}: {} (se {:?})", e.value, e.std_error);
            rows.push(CsvRow::from_estimate(
                method,
                m,
                cfg.seed,
                &e,
                cfg.record_timing,
            ));
        }
    }
    Ok(rows)
}

pub fn render_csv(rows: &[CsvRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}

/// Two-column `M std_error` text for one method; rows without an error bar are skipped.
pub fn render_plot_data(rows: &[CsvRow], method: RuleKind) -> String {
    let mut s = format!("# {method}: M std_error\n");
    for r in rows.iter().filter(|r| r.method == method) {
        if let Some(se) = r.std_error {
            let _ = writeln!(s, "{} {}", r.points, se);
        }
    }
    s
}

/// `results.csv` gives `results-sobol.dat`.
pub fn plot_data_path(out: &Path, method: RuleKind) -> PathBuf {
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("results");
    out.with_file_name(format!("{stem}-{}.dat", method.name()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the CSV to `cfg.out` and one plot-data file per method next to it.
/// Returns every path written.
pub fn write_convergence(cfg: &ExperimentConfig, rows: &[CsvRow]) -> Result<Vec<PathBuf>> {
    write(&cfg.out, &render_csv(rows))?;
    let mut paths = vec![cfg.out.clone()];
    for &method in &cfg.methods {
        let p = plot_data_path(&cfg.out, method);
        write(&p, &render_plot_data(rows, method))?;
        paths.push(p);
    }
    Ok(paths)
}

/// Status of the fitted ε-slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeStatus {
    Ok,
    NoiseDominated,
}

impl std::fmt::Display for SlopeStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SlopeStatus::Ok => "ok",
            SlopeStatus::NoiseDominated => "noise-dominated",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub method: RuleKind,
    pub estimate: Estimate,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonStudy {
    pub rows: Vec<EpsilonRow>,
    pub reference: Estimate,
    /// Least-squares slope of `ln gap` against `ln ε`; `NaN` with fewer than
    /// two usable gaps.
    pub slope: f64,
    /// Intercept of the same fit; `exp(intercept)` is the constant `C` in `gap ≈ C ε^slope`.
    pub intercept: f64,
    pub status: SlopeStatus,
    pub record_timing: bool,
}

impl EpsilonStudy {
    /// Largest combined standard error over the rows.
    pub fn max_noise(&self) -> f64 {
        let mc = self.reference.std_error.unwrap_or(0.0);
        self.rows
            .iter()
            .map(|r| r.estimate.std_error.unwrap_or(0.0) + mc)
            .fold(0.0, f64::max)
    }

    pub fn min_gap(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.gap)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn render_csv(&self) -> String {
        let mut s = String::from(EPSILON_HEADER);
        s.push('\n');
        let r = &self.reference;
        for row in &self.rows {
            let e = &row.estimate;
            let wall = self
                .record_timing
                .then_some((e.wall_ms * 1e3).round() / 1e3);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                row.epsilon,
                row.method,
                e.nodes,
                e.dim,
                e.replicates,
                e.value,
                opt(e.std_error),
                r.value,
                opt(r.std_error),
                row.gap,
                opt(wall)
            );
        }
        let _ = writeln!(s, "slope,{},,,,,,,,{},", self.status, self.slope);
        s
    }
}

/// Ordinary least squares `y = a + s x`; returns `(s, a)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let s = sxy / sxx;
    Some((s, my - s * mx))
}

/// The quasi-random method used by the ε-study: the first configured QMC
/// rule, falling back to the first method.
pub fn epsilon_method(cfg: &ExperimentConfig) -> RuleKind {
    cfg.methods
        .iter()
        .copied()
        .find(|m| matches!(m, RuleKind::Sobol | RuleKind::ScrambledHalton))
        .unwrap_or(cfg.methods[0])
}

/// Smoothed estimates at every `ε` against one unsmoothed Monte Carlo reference.
///
/// Each estimate uses the largest `M` of the schedule. The reference runs
/// `mc_paths` paths capped at `mc_jumps` claims.
pub fn run_epsilon_study(cfg: &ExperimentConfig, exec: Execution) -> Result<EpsilonStudy> {
    cfg.validate()?;
    cfg.validate_epsilons()?;
    let reference = mc_reference_with(
        &cfg.params,
        cfg.x0,
        cfg.mc_paths,
        cfg.seed,
        cfg.mc_jumps,
        exec,
    )?;
    let method = epsilon_method(cfg);
    let m = *cfg.m_schedule.last().expect("validated schedule");
    let mut rows = Vec::with_capacity(cfg.epsilons.len());
    for &eps in &cfg.epsilons {
        let model = build_model(cfg, cfg.params.with_epsilon(eps))?;
        let estimate = estimate_value_with(&model, cfg.x0, cfg.jumps, &spec(cfg, method, m), exec)?;
        let gap = (estimate.value - reference.value).abs();
        log::info!(
            "eps={eps}: {} vs {} (gap {gap})",
            estimate.value,
            reference.value
        );
        rows.push(EpsilonRow {
            epsilon: eps,
            method,
            estimate,
            gap,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.gap > 0.0)
        .map(|r| (r.epsilon.ln(), r.gap.ln()))
        .unzip();
    let (slope, intercept) = fit_line(&xs, &ys).unwrap_or((f64::NAN, f64::NAN));
    let mut study = EpsilonStudy {
        rows,
        reference,
        slope,
        intercept,
        status: SlopeStatus::Ok,
        record_timing: cfg.record_timing,
    };
    if !slope.is_finite() || study.max_noise() > NOISE_FRACTION * study.min_gap() {
        study.status = SlopeStatus::NoiseDominated;
    }
    Ok(study)
}

pub fn write_epsilon_study(path: &Path, study: &EpsilonStudy) -> Result<()> {
    write(path, &study.render_csv())
}
