//! `minimax` — run minimax optimization experiments from config files.
//!
//! Exit codes: 0 success, 1 configuration error, 2 acceptance failure
//! (a recipe check or lemma verification that ran and did not pass).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use minimax_core::config::{parse_config, ResolvedRun, RunConfig};
use minimax_core::harness::{
    emit_json, emit_trajectory_csv, execute, run_recipe, run_sweep, sweep_csv, EmitMeta,
    RecipeParams, SweepGrid, RECIPES,
};
use minimax_core::metrics::{verify_descent_lemmas, Lemma};
use minimax_core::problems::Problem;
use minimax_core::spectral;

#[derive(Parser)]
#[command(
    name = "minimax",
    version,
    about = "Minimax optimization experiment driver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and emit trajectory.csv, summary.json and the
    /// resolved config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cartesian-product sweep over config paths; emits sweep.csv and
    /// sweep.json.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (rows are ordered by grid index regardless).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Spectral report of the configured method on the quadratic instance.
    Spectral {
        #[arg(long)]
        config: PathBuf,
    },
    /// Replay the per-step descent inequalities on the configured run.
    VerifyLemmas {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a named reproduction recipe.
    Recipe {
        /// One of the known recipe names.
        name: String,
        /// Recipe parameter overrides, `key=value`.
        #[arg(long = "param", value_name = "K=V")]
        params: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn env_seed() -> Option<u64> {
    std::env::var("MINIMAX_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
}

fn load(config: &std::path::Path) -> Result<(RunConfig, ResolvedRun), String> {
    let mut cfg = parse_config(config).map_err(|e| e.to_string())?;
    if let Some(seed) = env_seed() {
        cfg.seed = seed;
    }
    let resolved = cfg.resolve().map_err(|e| e.to_string())?;
    Ok((cfg, resolved))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run { config, out } => {
            let (cfg, resolved) = load(&config)?;
            std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
            let (traj, summary) = execute(&resolved).map_err(|e| e.to_string())?;
            std::fs::write(out.join("config.json"), cfg.canonical_json())
                .map_err(|e| e.to_string())?;
            let meta = EmitMeta {
                config_hash: resolved.config_hash.clone(),
                seed: cfg.seed,
            };
            emit_trajectory_csv(&traj, &meta, &out.join("trajectory.csv"))
                .map_err(|e| e.to_string())?;
            emit_json(&summary, &out.join("summary.json")).map_err(|e| e.to_string())?;
            println!(
                "steps: {}, stop: {:?}, final measure: {:.6e}",
                summary.steps, summary.stop_reason, summary.final_measure
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            grid,
            out,
            jobs,
        } => {
            let (cfg, _) = load(&config)?;
            let grid_text = std::fs::read_to_string(&grid).map_err(|e| e.to_string())?;
            let grid: SweepGrid = serde_json::from_str(&grid_text).map_err(|e| e.to_string())?;
            let table = run_sweep(&cfg, &grid, jobs.max(1)).map_err(|e| e.to_string())?;
            std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
            std::fs::write(out.join("sweep.csv"), sweep_csv(&table)).map_err(|e| e.to_string())?;
            emit_json(&table, &out.join("sweep.json")).map_err(|e| e.to_string())?;
            println!("rows: {}", table.rows.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectral { config } => {
            let (_, resolved) = load(&config)?;
            let q = match &resolved.instance {
                Problem::QuadNcsc(q) => q,
                _ => {
                    return Err(
                        "spectral analysis is defined for the quadratic instance only".into(),
                    )
                }
            };
            let rates = resolved
                .steps
                .resolve(resolved.method)
                .map_err(|e| e.to_string())?;
            let method = match resolved.method {
                minimax_core::Method::Gda => spectral::SpectralMethod::Gda,
                minimax_core::Method::Eg => spectral::SpectralMethod::Eg,
                _ => spectral::SpectralMethod::Ogda,
            };
            let m =
                spectral::build_m(q.params(), rates.y1 / rates.x1).map_err(|e| e.to_string())?;
            let report = spectral::transition(method, &m, rates.x1).map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyLemmas { config } => {
            let (_, resolved) = load(&config)?;
            let mut rr = resolved;
            rr.record.points = true;
            rr.record.grads = true;
            let (traj, _) = execute(&rr).map_err(|e| e.to_string())?;
            let lemmas: &[Lemma] = match rr.instance {
                Problem::QuadNcsc(_) => &[
                    Lemma::PrimalDescent,
                    Lemma::DualPotential,
                    Lemma::DualPotentialCumulative,
                ],
                Problem::NccBilinear(_) => &[Lemma::MoreauDescent],
                Problem::Wgan(_) => {
                    return Err("no verifiable lemma suite for the wgan instance".into())
                }
            };
            let report = verify_descent_lemmas(
                &traj,
                &rr.instance,
                rr.method,
                &rr.steps,
                &rr.oracle,
                lemmas,
            )
            .map_err(|e| e.to_string())?;
            let mut all_ok = true;
            for slack in &report {
                // Roundoff allowance on exact-arithmetic inequalities.
                let ok = slack.min_slack >= -1e-10;
                all_ok &= ok;
                println!(
                    "{}: lemma {:?}, min slack {:.3e} at t={}, first violation {:?}",
                    if ok { "PASS" } else { "FAIL" },
                    slack.lemma,
                    slack.min_slack,
                    slack.min_at,
                    slack.first_violation
                );
            }
            Ok(if all_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Recipe {
            name,
            params,
            out,
            seed,
        } => {
            let mut overrides = BTreeMap::new();
            for p in params {
                let (k, v) = p
                    .split_once('=')
                    .ok_or_else(|| format!("bad --param '{p}', expected key=value"))?;
                let value: f64 = v
                    .parse()
                    .map_err(|_| format!("bad numeric value in --param '{p}'"))?;
                overrides.insert(k.to_string(), value);
            }
            if !RECIPES.contains(&name.as_str()) {
                return Err(format!(
                    "unknown recipe '{name}'; known: {}",
                    RECIPES.join(", ")
                ));
            }
            let seed = env_seed().unwrap_or(seed);
            let rp = RecipeParams {
                out_dir: out,
                seed,
                overrides,
            };
            let outcome = run_recipe(&name, &rp).map_err(|e| e.to_string())?;
            for check in &outcome.checks {
                println!(
                    "{}: {} — {}",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.detail
                );
            }
            Ok(if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}
