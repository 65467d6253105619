//! `msl`: run scenarios, survival-time sweeps and the acceptance suite.

mod document;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use msl_core::experiments::{
    builtin, builtin_names, builtin_sweep, builtin_sweeps, run_scenario, run_sweep,
    write_artifacts, write_sweep_artifacts, RunOptions, Scenario, SeedRange, SummaryStats,
    SweepResult, TraceFormat,
};
use msl_core::verify::{run_checks, Level};

use document::ScenarioDocument;

#[derive(Parser, Debug)]
#[command(
    name = "msl",
    version,
    about = "Market selection simulator for learning agents"
)]
struct Cli {
    /// Seed workers; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a built-in scenario or a scenario document.
    Run {
        /// Built-in name (see `msl list`) or path to a JSON document.
        target: String,
        /// Base seed; seeds are `seed, seed + 1, ...`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        seeds: Option<usize>,
        /// Horizon; shift intervals are rescaled proportionally.
        #[arg(long)]
        horizon: Option<usize>,
        /// Output directory; defaults to `$MSL_OUT/<name>` or `./out/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Number of leading seeds whose full trace is written.
        #[arg(long, default_value_t = 1)]
        traces: usize,
        /// Use the scenario's full-scale horizon and seed count.
        #[arg(long)]
        full_scale: bool,
    },
    /// Run a survival-time sweep (obs1, obs2, obs3).
    Sweep {
        name: String,
        /// Comma-separated error sizes.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        seeds: Option<usize>,
        /// Longest run per grid point.
        #[arg(long)]
        max_horizon: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite at `fast` or `full` level.
    Verify { level: String },
    /// List built-in scenarios and sweeps.
    List,
}

/// Exit status and message of a failed command.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Failure {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl ToString) -> Failure {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }
}

fn output_dir(out: Option<PathBuf>, name: &str) -> PathBuf {
    out.unwrap_or_else(|| {
        let root = std::env::var_os("MSL_OUT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out"));
        root.join(name)
    })
}

fn load_scenario(target: &str) -> Result<Scenario, Failure> {
    if builtin_names().iter().any(|n| n == target) {
        return builtin(target).map_err(Failure::runtime);
    }
    let path = Path::new(target);
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::usage(format!(
            "{target}: not a built-in scenario and not readable: {e}"
        ))
    })?;
    ScenarioDocument::parse(&text)
        .and_then(ScenarioDocument::into_scenario)
        .map_err(|e| Failure::usage(format!("{target}:{e}")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    target: &str,
    seed: Option<u64>,
    seeds: Option<usize>,
    horizon: Option<usize>,
    out: Option<PathBuf>,
    format: Format,
    traces: usize,
    full_scale: bool,
) -> Result<(), Failure> {
    let mut scenario = load_scenario(target)?;
    if full_scale {
        scenario = scenario.at_full_scale().map_err(Failure::usage)?;
    }
    if let Some(h) = horizon {
        scenario = scenario.with_horizon(h).map_err(Failure::usage)?;
    }
    if seed.is_some() || seeds.is_some() {
        let range = SeedRange {
            base: seed.unwrap_or(scenario.seeds.base),
            count: seeds.unwrap_or(scenario.seeds.count),
        };
        scenario = scenario.with_seeds(range);
    }
    scenario.validate().map_err(Failure::usage)?;
    log::info!(
        "running {} (T={}, {} seeds)",
        scenario.name,
        scenario.config.horizon,
        scenario.seeds.count
    );
    let run = run_scenario(&scenario, &RunOptions { traces }).map_err(Failure::runtime)?;
    let dir = output_dir(out, &scenario.name);
    let format = match format {
        Format::Csv => TraceFormat::Csv,
        Format::Json => TraceFormat::Json,
    };
    write_artifacts(&run, &dir, format).map_err(Failure::runtime)?;
    print_summary(&run.summary);
    log::info!("wrote {}", dir.display());
    Ok(())
}

fn print_summary(summary: &SummaryStats) {
    println!(
        "{} (T={}, {} seeds)",
        summary.name, summary.horizon, summary.seeds.count
    );
    println!(
        "{:<6} {:<14} {:>14} {:>14} {:>14}",
        "agent", "kind", "mean share", "mean regret", "max regret"
    );
    for (n, kind) in summary.agents.iter().enumerate() {
        let w = &summary.terminal_wealth[n];
        let r = &summary.regret[n];
        println!(
            "{n:<6} {kind:<14} {:>14.6} {:>14.4} {:>14.4}",
            w.mean, r.mean, r.max
        );
    }
    if let Some(survival) = &summary.survival {
        for (n, s) in survival.iter().enumerate() {
            println!(
                "survival of agent {n}: tau={} censored={}",
                s.tau, s.censored
            );
        }
    }
    let c = &summary.conservation;
    println!(
        "conservation: price {:.2e}, wealth {:.2e}, identity {:.2e}",
        c.max_price_error, c.max_wealth_error, c.max_identity_residual
    );
    for check in &summary.checks {
        println!(
            "[{}] {}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
}

fn cmd_sweep(
    name: &str,
    eps: Option<Vec<f64>>,
    seed: Option<u64>,
    seeds: Option<usize>,
    max_horizon: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut spec = builtin_sweep(name).map_err(Failure::usage)?;
    if let Some(eps) = eps {
        spec.eps = eps;
    }
    if let Some(base) = seed {
        spec.seeds.base = base;
    }
    if let Some(count) = seeds {
        spec.seeds.count = count;
    }
    if let Some(h) = max_horizon {
        spec.max_horizon = h;
    }
    spec.validate().map_err(Failure::usage)?;
    let result = run_sweep(&spec).map_err(Failure::runtime)?;
    let dir = output_dir(out, &spec.name);
    write_sweep_artifacts(&result, &dir).map_err(Failure::runtime)?;
    print_sweep(&result);
    log::info!("wrote {}", dir.display());
    Ok(())
}

fn print_sweep(result: &SweepResult) {
    println!("{} ({} seeds)", result.name, result.seeds.count);
    println!(
        "{:>8} {:>12} {:>10} {:>9}",
        "eps", "I_q(q')", "tau", "censored"
    );
    for p in &result.points {
        println!(
            "{:>8} {:>12.6} {:>10} {:>9}",
            p.eps, p.relative_entropy, p.survival.tau, p.survival.censored
        );
    }
    match result.fit {
        Some(fit) => println!(
            "slope {:.3} (target {}, band [{}, {}]) r^2 {:.4}: {}",
            fit.slope,
            result.target_exponent,
            result.slope_band.0,
            result.slope_band.1,
            fit.r_squared,
            if result.slope_in_band() {
                "in band"
            } else {
                "outside band"
            }
        ),
        None => println!("no power-law fit (needs four points with tau > 0)"),
    }
}

fn cmd_verify(level: &str) -> Result<(), Failure> {
    let level: Level = level.parse().map_err(Failure::usage)?;
    let results = run_checks(level, |o| println!("{o}")).map_err(Failure::runtime)?;
    let failed = results.iter().filter(|o| !o.passed).count();
    println!(
        "{} of {} criteria passed at level {level}",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{failed} criteria failed"),
        });
    }
    Ok(())
}

fn cmd_list() {
    println!("scenarios:");
    for name in builtin_names() {
        let s = builtin(&name).expect("listed scenario exists");
        println!(
            "  {name:<16} T={:<8} seeds={:<4} {}",
            s.config.horizon, s.seeds.count, s.description
        );
    }
    println!("sweeps:");
    for s in builtin_sweeps() {
        println!(
            "  {:<16} eps={:?} seeds={} {}",
            s.name, s.eps, s.seeds.count, s.description
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Run {
            target,
            seed,
            seeds,
            horizon,
            out,
            format,
            traces,
            full_scale,
        } => cmd_run(
            &target, seed, seeds, horizon, out, format, traces, full_scale,
        ),
        Command::Sweep {
            name,
            eps,
            seed,
            seeds,
            max_horizon,
            out,
        } => cmd_sweep(&name, eps, seed, seeds, max_horizon, out),
        Command::Verify { level } => cmd_verify(&level),
        Command::List => {
            cmd_list();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
