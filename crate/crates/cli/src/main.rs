use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::warn;

use phonon_core::analytic::{blockade_condition, four_state_oracle, g2_analytic};
use phonon_core::experiments::{builtin, emit_csv, run, Pipeline, Scenario, SystemConfig, BUILTINS};
use phonon_core::model::derive;

const EXIT_INVALID: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

#[derive(Parser)]
#[command(name = "phonon", version, about = "Phonon blockade scenarios: sweeps, time traces and correlations to CSV")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario or a TOML config and write its CSV.
    Run {
        /// Built-in name (see `list`) or path to a config file.
        target: String,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory.
        #[arg(long, env = "PHONON_OUT_DIR", default_value = "out")]
        out: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// List the built-in scenarios.
    List,
    /// Check a config (or built-in) without running it.
    Validate {
        target: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Closed-form and four-state results for system parameters given as
    /// `key=value` pairs in Hz, e.g. `epsilon_hz=2e4,gamma_hz=1e6`.
    Oracle {
        params: Vec<String>,
    },
}

#[derive(Args)]
struct Overrides {
    /// Replace the scenario's pipeline.
    #[arg(long)]
    pipeline: Option<Pipeline>,
    /// Relative integrator tolerance; the absolute tolerance is set 100x lower.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    fock_dim: Option<usize>,
}

fn load(target: &str, o: &Overrides) -> phonon_core::Result<Scenario> {
    let path = Path::new(target);
    let mut s = if path.exists() || target.ends_with(".toml") { Scenario::from_file(path)? } else { builtin(target)? };
    if let Some(p) = o.pipeline {
        s.sweep.pipeline = p;
    }
    if let Some(t) = o.tol {
        s.solver.rtol = t;
        s.solver.atol = t / 100.0;
    }
    if let Some(m) = o.fock_dim {
        s.system.fock_dim = m;
    }
    s.validate()?;
    Ok(s)
}

fn parse_pairs(args: &[String]) -> anyhow::Result<SystemConfig> {
    let mut sys = SystemConfig::default();
    for pair in args.iter().flat_map(|a| a.split(',')).filter(|p| !p.is_empty()) {
        let (k, v) = pair.split_once('=').with_context(|| format!("expected key=value, got '{pair}'"))?;
        let v: f64 = v.trim().parse().with_context(|| format!("'{v}' is not a number"))?;
        sys.set(k.trim(), v)?;
    }
    Ok(sys)
}

fn oracle(args: &[String]) -> anyhow::Result<()> {
    let p = parse_pairs(args)?.to_params()?;
    if p.gamma <= 0.0 {
        bail!("the four-state theory needs gamma_hz > 0");
    }
    let d = derive(&p)?;
    let (e, k, g, l) = (p.epsilon, p.kappa, p.gamma, d.lambda_eff);
    let two_pi = 2.0 * std::f64::consts::PI;
    let o = four_state_oracle(e, k, g, l)?;
    let b = blockade_condition(e, k, g, l);
    println!("lambda_hz        {:.6e}", l / two_pi);
    println!("omega0_prime_hz  {:.9e}", d.omega0_prime / two_pi);
    println!("kappa_hz         {:.6e}", k / two_pi);
    println!("g2_analytic      {:.6e}", g2_analytic(e, k, g, l)?);
    println!("g2_oracle        {:.6e}", o.g2);
    println!("g2_oracle_c0g=1  {:.6e}", o.g2_unnormalized);
    let a = o.amplitudes;
    for (name, c) in [("c0g", a.c0g), ("c1g", a.c1g), ("c2g", a.c2g), ("c0e", a.c0e)] {
        println!("|{name}|^2         {:.6e}", c.norm_sqr());
    }
    println!("blockade_ratio   {:.4} ({})", b.ratio, if b.strong { "strong" } else { "weak" });
    if !p.validity().satisfied {
        warn!("parameters violate the effective-model validity condition");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for b in BUILTINS {
                println!("{:<7} {}", b.name, b.description);
            }
            ExitCode::SUCCESS
        }
        Command::Validate { target, overrides } => match load(&target, &overrides) {
            Ok(s) => {
                let points = s.sweep.values.len() * s.sweep.series_values.len().max(1);
                println!("ok {} ({} points) cfg={}", s.name(), points, s.config_hash().unwrap_or_default());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INVALID)
            }
        },
        Command::Oracle { params } => match oracle(&params) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_INVALID)
            }
        },
        Command::Run { target, overrides, out, threads } => {
            let scenario = match load(&target, &overrides) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_INVALID);
                }
            };
            let result = match run(&scenario, threads) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_INVALID);
                }
            };
            let path = out.join(scenario.file_name());
            if let Err(e) = emit_csv(&result, &path) {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
            for row in &result.rows {
                if let Err(msg) = &row.outcome {
                    eprintln!("failed: {}={} {msg}", result.axis_param, row.axis);
                }
            }
            eprintln!(
                "{}: {} rows, {} failed, {:.1} s -> {}",
                result.name,
                result.rows.len(),
                result.failures(),
                result.wall_time.as_secs_f64(),
                path.display()
            );
            if result.failures() > 0 {
                ExitCode::from(EXIT_PARTIAL)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
