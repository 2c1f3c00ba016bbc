use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use branchmc::calibrate::{branch_grid, calibrate_epsilon_and_branch};
use branchmc::config::{PayoffName, ResampleName};
use branchmc::experiment::{rmse_study, run_experiment, RunReport};
use branchmc::ground_truth::ground_truth;
use branchmc::report::{emit_reports, Format};
use branchmc::sa_search::sa_param_search;
use branchmc::{ExperimentConfig, HarnessError, ParameterSet, Resolved, Result};
use branchmc_core::{heston_call, reference::heston_call_with_tolerance};

#[derive(Debug, Parser)]
#[command(name = "branchmc", version, about = "Weighted Heston Monte Carlo with branching resampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment file; without one the preset is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in parameter set used when no config is given.
    #[arg(long, value_enum, default_value = "PS2")]
    preset: ParameterSet,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Initial particle count.
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long, value_enum)]
    resample: Option<ResampleName>,
    /// Output directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// European straddle by the weighted estimator.
    PriceEuropean(Common),
    /// Asian straddle by the weighted estimator.
    PriceAsian(Common),
    /// Early-exercise payoff by SA/DP.
    PriceEarlyExercise(Common),
    /// Semi-analytic European call, put and straddle.
    Reference {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100.0)]
        strike: f64,
        /// Years.
        #[arg(long, default_value_t = 1.0)]
        maturity: f64,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Two-stage ε and branching-parameter calibration.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-10, 1e-8, 1e-6, 1e-5, 1e-4])]
        epsilons: Vec<f64>,
        /// Combined-branching band parameters.
        #[arg(long, value_delimiter = ',')]
        r: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        c_eff: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        c_noneff: Vec<f64>,
    },
    /// Grid search for the SA gain parameters.
    SaSearch {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        gammas: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        chis: Vec<f64>,
    },
    /// Large-sample price for payoffs without a closed form, cached.
    GroundTruth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "ground_truth.json")]
        cache: PathBuf,
    },
    /// RMSE and relative std against the particle count.
    RmseStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [10_000usize, 50_000, 100_000, 500_000])]
        counts: Vec<usize>,
    },
}

fn load_config(common: &Common, default_kind: PayoffName, allowed: &[PayoffName]) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            if !allowed.contains(&c.payoff.kind) {
                return Err(HarnessError::Config(format!(
                    "payoff kind {:?} does not fit this subcommand (expected one of {allowed:?})",
                    c.payoff.kind
                )));
            }
            c
        }
        None => ExperimentConfig::preset(common.preset, default_kind),
    };
    if let Some(s) = common.seed {
        config.seed = s;
    }
    if let Some(r) = common.reps {
        config.repetitions = r;
    }
    if let Some(n) = common.particles {
        config.particles = n;
    }
    if let Some(m) = common.resample {
        config.resample.mode = m;
    }
    if let Some(out) = &common.out {
        config.output = Some(out.clone());
    }
    Ok(config)
}

fn resolve(config: &ExperimentConfig) -> Result<Resolved> {
    let run = config.resolve()?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    Ok(run)
}

fn print_report(r: &RunReport) {
    println!("{}", r.label);
    println!("  repetitions   {}", r.repetitions.len());
    println!("  mean          {:.6}", r.mean);
    println!("  std dev       {:.6}", r.std_dev);
    if let Some(c) = r.reference {
        println!("  reference     {c:.6}");
    }
    if let Some(e) = r.relative_rmse {
        println!("  relative RMSE {e:.6}");
    }
    println!("  relative std  {:.6}", r.relative_std);
    println!("  seconds       {:.2}", r.seconds);
}

fn finish(reports: &[RunReport], out: Option<&Path>, format: Format) -> Result<()> {
    for r in reports {
        print_report(r);
    }
    if let Some(dir) = out {
        for p in emit_reports(reports, dir, format)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

const EUROPEAN: &[PayoffName] = &[PayoffName::EuropeanStraddle];
const ASIAN: &[PayoffName] = &[PayoffName::AsianStraddle];
const EARLY: &[PayoffName] = &[PayoffName::AsianCallEarly, PayoffName::AmericanPut];
const ANY: &[PayoffName] =
    &[PayoffName::EuropeanStraddle, PayoffName::AsianStraddle, PayoffName::AsianCallEarly, PayoffName::AmericanPut];

fn price(common: &Common, kind: PayoffName, allowed: &[PayoffName]) -> Result<()> {
    let config = load_config(common, kind, allowed)?;
    let run = resolve(&config)?;
    let report = run_experiment(&run)?;
    finish(&[report], config.output.as_deref(), common.format)
}

fn execute(command: &Command) -> Result<()> {
    match command {
        Command::PriceEuropean(c) => price(c, PayoffName::EuropeanStraddle, EUROPEAN),
        Command::PriceAsian(c) => price(c, PayoffName::AsianStraddle, ASIAN),
        Command::PriceEarlyExercise(c) => price(c, PayoffName::AsianCallEarly, EARLY),
        Command::Reference { common, strike, maturity, tolerance } => {
            let config = load_config(common, PayoffName::EuropeanStraddle, ANY)?;
            let params = resolve(&config)?.sim.params;
            let q = if *tolerance == 1e-8 {
                heston_call(&params, *strike, *maturity)?
            } else {
                heston_call_with_tolerance(&params, *strike, *maturity, *tolerance)?
            };
            println!("call      {:.10}", q.call);
            println!("put       {:.10}", q.put);
            println!("straddle  {:.10}", q.straddle);
            println!(
                "quadrature error {:.3e} over {} intervals ({} evaluations)",
                q.diagnostics.estimated_error, q.diagnostics.intervals, q.diagnostics.evaluations
            );
            Ok(())
        }
        Command::Calibrate { common, epsilons, r, c_eff, c_noneff } => {
            let config = load_config(common, PayoffName::EuropeanStraddle, ANY)?;
            let run = resolve(&config)?;
            let mut grid = branch_grid(r, c_eff, c_noneff);
            if grid.is_empty() {
                let d = config.parameter_set.map(|s| s.simulation());
                let r0 = d.map_or(1.05, |d| d.combined_r);
                grid = branch_grid(&[1.0 + 1e-9, 1.02, r0, 1.1, 1.5, f64::INFINITY], &[], &[]);
            }
            let cal = calibrate_epsilon_and_branch(&run, epsilons, &grid)?;
            println!("stage 1: epsilon objective");
            for p in &cal.epsilon_surface {
                println!("  {:>10.1e}  {:.6e}", p.value, p.objective);
            }
            println!("stage 2: resampler objective (epsilon = {:.1e})", cal.epsilon);
            for p in &cal.branch_surface {
                println!("  {:<45}  {:.6e}", format!("{:?}", p.value), p.objective);
            }
            println!("best: epsilon = {:.1e}, {:?}", cal.epsilon, cal.resample);
            Ok(())
        }
        Command::SaSearch { common, gammas, chis } => {
            let config = load_config(common, PayoffName::AsianCallEarly, EARLY)?;
            let run = resolve(&config)?;
            let s = sa_param_search(&run, gammas, chis)?;
            println!("{:>8} {:>8} {:>14} {:>10}", "gamma", "chi", "residual", "price");
            for row in &s.table {
                println!("{:>8} {:>8} {:>14.6} {:>10.4}", row.gamma, row.chi, row.residual, row.price);
            }
            println!("best: gamma = {}, chi = {}", s.best.0, s.best.1);
            Ok(())
        }
        Command::GroundTruth { common, cache } => {
            let mut config = load_config(common, PayoffName::AsianCallEarly, ANY)?;
            if common.config.is_none() {
                config.particles = common.particles.unwrap_or(200_000);
                config.sa.per_variable = 6;
                if common.resample.is_none() {
                    config.resample.mode = ResampleName::Effective;
                }
            }
            let (truth, cached) = ground_truth(&config, cache)?;
            println!(
                "price {:.6} (std error {:.2e}, {} x N={}){}",
                truth.price,
                truth.std_error,
                truth.repetitions,
                truth.particles,
                if cached { " [cached]" } else { "" }
            );
            Ok(())
        }
        Command::RmseStudy { common, counts } => {
            let config = load_config(common, PayoffName::EuropeanStraddle, ANY)?;
            let run = resolve(&config)?;
            let reports = rmse_study(&run, counts)?;
            finish(&reports, config.output.as_deref(), common.format)
        }
    }
}

fn common(command: &Command) -> &Common {
    match command {
        Command::PriceEuropean(c) | Command::PriceAsian(c) | Command::PriceEarlyExercise(c) => c,
        Command::Reference { common, .. }
        | Command::Calibrate { common, .. }
        | Command::SaSearch { common, .. }
        | Command::GroundTruth { common, .. }
        | Command::RmseStudy { common, .. } => common,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = common(&cli.command).threads;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| execute(&cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
