use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use pdmpval::cubature::{CubatureSpec, RuleKind};
use pdmpval::harness::experiments::{build_model, write_convergence, write_epsilon_study};
use pdmpval::harness::{
    run_convergence, run_epsilon_study, run_validate, ExperimentConfig, ValidateOptions,
};
use pdmpval::mc::mc_reference_with;
use pdmpval::operators::estimate_value_with;
use pdmpval::parallel::Execution;
use pdmpval::Substitution;

/// Valuation of dividend-barrier strategies in the Cramér–Lundberg model with loan.
#[derive(Parser, Debug)]
#[command(name = "pdmpval", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate V(x0) once per method.
    Value {
        #[command(flatten)]
        common: Common,
        /// Also run the unsmoothed path simulation with this many paths.
        #[arg(long)]
        reference_paths: Option<usize>,
    },
    /// Standard errors over the M schedule; writes CSV and plot data.
    Convergence {
        #[command(flatten)]
        common: Common,
    },
    /// Smoothed estimates over an ε schedule against the path simulation.
    EpsilonStudy {
        #[command(flatten)]
        common: Common,
        /// Comma-separated decreasing ε values.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Paths of the Monte Carlo reference.
        #[arg(long)]
        mc_paths: Option<usize>,
    },
    /// Run the self-check suite; exits nonzero on failure.
    Validate,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rule to run; repeat for several.
    #[arg(long = "method")]
    methods: Vec<RuleKind>,
    /// Node count, replacing the schedule with this single value.
    #[arg(long)]
    points: Option<usize>,
    /// Jump count n (dimension 2n).
    #[arg(long)]
    jumps: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave wall_ms empty so files are reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
    /// Directory for cached flow tables.
    #[arg(long)]
    flow_cache: Option<PathBuf>,
    /// Change of variables for the jump coordinates.
    #[arg(long)]
    substitution: Option<Substitution>,
    /// Evaluate on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    /// Config file, then `PDMPVAL_SEED`, then flags.
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply_env()?;
        if !self.methods.is_empty() {
            cfg.methods = self.methods.clone();
        }
        if let Some(m) = self.points {
            cfg.m_schedule = vec![m];
        }
        if let Some(n) = self.jumps {
            cfg.jumps = n;
            cfg.mc_jumps = n;
        }
        if let Some(r) = self.replicates {
            cfg.replicates = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(e) = self.epsilon {
            cfg.params.epsilon = e;
        }
        if let Some(x) = self.x0 {
            cfg.x0 = x;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if self.no_timing {
            cfg.record_timing = false;
        }
        if let Some(d) = &self.flow_cache {
            cfg.flow_cache = Some(d.clone());
        }
        if let Some(s) = self.substitution {
            cfg.substitution = s;
        }
        Ok(cfg)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

fn fmt_se(se: Option<f64>) -> String {
    se.map(|s| format!("{s:.3e}")).unwrap_or_else(|| "-".into())
}

fn value(common: &Common, reference_paths: Option<usize>) -> anyhow::Result<()> {
    let cfg = common.config()?;
    cfg.validate()?;
    let exec = common.execution();
    let model = build_model(&cfg, cfg.params)?;
    let m = *cfg.m_schedule.last().expect("validated schedule");
    println!("x0 = {}, n = {}, d = {}", cfg.x0, cfg.jumps, cfg.dim());
    for &kind in &cfg.methods {
        let spec = CubatureSpec {
            kind,
            points: m,
            dim: cfg.dim(),
            seed: cfg.seed,
            replicates: cfg.replicates,
        };
        let e = estimate_value_with(&model, cfg.x0, cfg.jumps, &spec, exec)
            .with_context(|| format!("{kind} estimate"))?;
        println!(
            "{kind:<7} M={:<8} R={:<3} V={:.6}  se={}  bias<={:.4e}  {:.0} ms",
            e.nodes,
            e.replicates,
            e.value,
            fmt_se(e.std_error),
            e.bias_bound,
            e.wall_ms
        );
    }
    if let Some(paths) = reference_paths {
        let e = mc_reference_with(&cfg.params, cfg.x0, paths, cfg.seed, cfg.mc_jumps, exec)?;
        println!(
            "paths   N={paths:<8} jumps<={} V={:.6}  se={}  {:.0} ms",
            cfg.mc_jumps,
            e.value,
            fmt_se(e.std_error),
            e.wall_ms
        );
    }
    Ok(())
}

fn convergence(common: &Common) -> anyhow::Result<()> {
    let cfg = common.config()?;
    let rows = run_convergence(&cfg, common.execution())?;
    for path in write_convergence(&cfg, &rows)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn epsilon_study(
    common: &Common,
    epsilons: Option<Vec<f64>>,
    mc_paths: Option<usize>,
) -> anyhow::Result<()> {
    let mut cfg = common.config()?;
    if let Some(e) = epsilons {
        cfg.epsilons = e;
    }
    if let Some(p) = mc_paths {
        cfg.mc_paths = p;
    }
    let study = run_epsilon_study(&cfg, common.execution())?;
    write_epsilon_study(&cfg.out, &study)?;
    println!(
        "slope {:.3} ({}), reference {:.6}; wrote {}",
        study.slope,
        study.status,
        study.reference.value,
        cfg.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Value {
            common,
            reference_paths,
        } => value(common, *reference_paths),
        Command::Convergence { common } => convergence(common),
        Command::EpsilonStudy {
            common,
            epsilons,
            mc_paths,
        } => epsilon_study(common, epsilons.clone(), *mc_paths),
        Command::Validate => {
            let report = run_validate(ValidateOptions::default());
            print!("{}", report.render());
            if report.passed() {
                Ok(())
            } else {
                Err(anyhow::anyhow!("validation failed"))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
