use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use swarm_core::config::{ModelKind, SimConfig};
use swarm_core::eval::{run_eval, Controller};
use swarm_core::perception::{feature_layout, obs_dim};
use swarm_core::policy::{train, Checkpoint};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "swarm", about = "Deterministic predator-prey swarm simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a shared PPO policy and write checkpoint, reward curve, manifest
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// lom or gom (overrides the config's model)
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a frozen policy or the boids baseline and emit metrics
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "boids")]
        checkpoint: Option<PathBuf>,
        /// Use the scripted boids baseline instead of a checkpoint
        #[arg(long)]
        boids: bool,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        /// Override the population size
        #[arg(long)]
        agents: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        metrics_out: PathBuf,
        #[arg(long)]
        trajectory_out: Option<PathBuf>,
    },
    /// Run a full model x population x seed grid
    Experiment {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the feature-index table for a model's observation vector
    DescribeObs {
        #[arg(long, default_value = "lom")]
        model: String,
    },
    /// Validate a config file against the schema
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Serialize)]
struct RunManifest {
    config_digest: String,
    seed: u64,
    code_version: String,
    start_tick: u64,
    end_tick: u64,
    outputs: Vec<String>,
    status: String,
}

fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    let cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("cannot read config file {}", p.display()))?;
            SimConfig::from_json(&text).context("config validation failed")?
        }
        None => SimConfig::default(),
    };
    Ok(cfg)
}

/// SWARM_SEED env var wins over the config; an explicit --seed wins over both.
fn resolve_seed(cfg: &SimConfig, flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(env_seed) = std::env::var("SWARM_SEED") {
        return env_seed
            .parse()
            .context("SWARM_SEED must be an unsigned integer");
    }
    Ok(cfg.seed)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_train(config: Option<&Path>, model: Option<&str>, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(m) = model {
        cfg.model = m.parse::<ModelKind>().map_err(anyhow::Error::from)?;
    }
    if cfg.model == ModelKind::Boids {
        bail!("the boids baseline is not trainable; use `eval --boids`");
    }
    let seed = resolve_seed(&cfg, seed)?;
    cfg.seed = seed;
    cfg.validate()?;

    let result = train(&cfg, seed)?;
    let ckpt = Checkpoint::from_net(&result.net, cfg.model, result.steps_done, cfg.digest());
    let ckpt_path = out.join("checkpoint.json");
    write_file(&ckpt_path, &ckpt.to_json())?;

    let mut curve = String::from("step,mean_cumulative_reward\n");
    for (step, reward) in &result.curve {
        curve.push_str(&format!("{step},{reward:.6}\n"));
    }
    let curve_path = out.join("reward_curve.csv");
    write_file(&curve_path, &curve)?;

    let manifest = RunManifest {
        config_digest: cfg.digest(),
        seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        start_tick: 0,
        end_tick: result.steps_done,
        outputs: vec![
            ckpt_path.display().to_string(),
            curve_path.display().to_string(),
        ],
        status: "ok".into(),
    };
    write_file(
        &out.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest)?,
    )?;
    println!("trained {} steps; checkpoint at {}", result.steps_done, ckpt_path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    config: Option<&Path>,
    checkpoint: Option<&Path>,
    boids: bool,
    steps: u64,
    agents: Option<usize>,
    seed: Option<u64>,
    metrics_out: &Path,
    trajectory_out: Option<&Path>,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(n) = agents {
        cfg.n_agents = n;
    }
    let seed = resolve_seed(&cfg, seed)?;
    cfg.seed = seed;

    let net;
    let controller = if boids {
        cfg.model = ModelKind::Boids;
        Controller::Boids
    } else {
        let path = checkpoint.context("either --checkpoint or --boids is required")?;
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read checkpoint {}", path.display()))?;
        let ckpt = Checkpoint::from_json(&text)?;
        cfg.model = ckpt.model_kind;
        let expected = obs_dim(cfg.model, cfg.raycast.n_rays);
        net = ckpt.to_net(Some(expected))?;
        Controller::Policy(&net)
    };
    cfg.validate()?;

    let record_trajectory = trajectory_out.is_some();
    let out = run_eval(&cfg, controller, steps, seed, record_trajectory)?;
    write_file(metrics_out, &out.metrics_csv)?;
    if let Some(p) = trajectory_out {
        write_file(p, &out.trajectory_jsonl)?;
    }
    println!("evaluated {steps} ticks; metrics at {}", metrics_out.display());
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridConfig {
    #[serde(default)]
    base: serde_json::Value,
    models: Vec<ModelKind>,
    populations: Vec<usize>,
    seeds: Vec<u64>,
    #[serde(default = "default_eval_steps")]
    eval_steps: u64,
}

fn default_eval_steps() -> u64 {
    10_000
}

fn run_cell(
    base: &SimConfig,
    model: ModelKind,
    population: usize,
    seed: u64,
    eval_steps: u64,
    dir: &Path,
) -> Result<swarm_core::metrics::MetricsRecord> {
    let mut cfg = base.clone();
    cfg.model = model;
    cfg.n_agents = population;
    cfg.seed = seed;
    cfg.validate()?;
    fs::create_dir_all(dir)?;

    let trained;
    let controller = match model {
        ModelKind::Boids => Controller::Boids,
        _ => {
            let result = train(&cfg, seed)?;
            let ckpt = Checkpoint::from_net(&result.net, model, result.steps_done, cfg.digest());
            write_file(&dir.join("checkpoint.json"), &ckpt.to_json())?;
            let mut curve = String::from("step,mean_cumulative_reward\n");
            for (step, reward) in &result.curve {
                curve.push_str(&format!("{step},{reward:.6}\n"));
            }
            write_file(&dir.join("reward_curve.csv"), &curve)?;
            trained = result.net;
            Controller::Policy(&trained)
        }
    };
    let out = run_eval(&cfg, controller, eval_steps, seed, false)?;
    write_file(&dir.join("metrics.csv"), &out.metrics_csv)?;
    let manifest = RunManifest {
        config_digest: cfg.digest(),
        seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        start_tick: 0,
        end_tick: eval_steps,
        outputs: vec![dir.join("metrics.csv").display().to_string()],
        status: "ok".into(),
    };
    write_file(&dir.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(out.summary)
}

fn fmt_mean(m: swarm_core::metrics::MetricMean) -> String {
    m.mean.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn cmd_experiment(grid_path: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(grid_path)
        .with_context(|| format!("cannot read grid file {}", grid_path.display()))?;
    let grid: GridConfig = serde_json::from_str(&text).context("grid config parse failed")?;
    let base: SimConfig = if grid.base.is_null() {
        SimConfig::default()
    } else {
        serde_json::from_value(grid.base.clone()).context("grid base config invalid")?
    };

    let mut comparison = String::from(
        "model,population,seed,status,alignment_err,cohesion_err,neighbor_avoid_err,predator_avoid_err,foraging_err,grouping_dist,predator_dist,neighbor_count\n",
    );
    let mut failures = 0;
    for &model in &grid.models {
        for &population in &grid.populations {
            for &seed in &grid.seeds {
                let name = format!("{}_{population}_s{seed}", model.as_str());
                let dir = out.join(&name);
                match run_cell(&base, model, population, seed, grid.eval_steps, &dir) {
                    Ok(s) => {
                        comparison.push_str(&format!(
                            "{},{population},{seed},ok,{},{},{},{},{},{},{},{}\n",
                            model.as_str(),
                            fmt_mean(s.alignment_err),
                            fmt_mean(s.cohesion_err),
                            fmt_mean(s.neighbor_avoid_err),
                            fmt_mean(s.predator_avoid_err),
                            fmt_mean(s.foraging_err),
                            fmt_mean(s.grouping_dist),
                            fmt_mean(s.predator_dist),
                            fmt_mean(s.neighbor_count),
                        ));
                    }
                    Err(e) => {
                        failures += 1;
                        comparison.push_str(&format!(
                            "{},{population},{seed},failed,,,,,,,,\n",
                            model.as_str()
                        ));
                        let _ = write_file(&dir.join("error.txt"), &format!("{e:#}"));
                        eprintln!("cell {name} failed: {e:#}");
                    }
                }
            }
        }
    }
    write_file(&out.join("comparison.csv"), &comparison)?;
    println!("experiment grid done ({failures} failed cells); comparison at {}", out.join("comparison.csv").display());
    Ok(())
}

fn cmd_describe_obs(model: &str) -> Result<()> {
    let model: ModelKind = model.parse()?;
    if model == ModelKind::Boids {
        bail!("the boids baseline has no observation vector");
    }
    let cfg = SimConfig::default();
    println!("# model: {}  (length {})", model.as_str(), obs_dim(model, cfg.raycast.n_rays));
    println!("offset,name");
    for (name, offset) in feature_layout(model, cfg.raycast.n_rays) {
        println!("{offset},{name}");
    }
    Ok(())
}

fn cmd_validate_config(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let cfg = SimConfig::from_json(&text)?;
    println!("ok: digest {}", cfg.digest());
    Ok(())
}

/// Usage and config problems exit 2, runtime failures exit 1.
fn classify(err: &anyhow::Error) -> u8 {
    let msg = format!("{err:#}");
    let usage = err.is::<swarm_core::config::ConfigError>()
        || msg.contains("config")
        || msg.contains("SWARM_SEED")
        || msg.contains("--checkpoint or --boids")
        || msg.contains("unknown model kind")
        || msg.contains("not trainable");
    if usage {
        EXIT_USAGE
    } else {
        EXIT_RUNTIME
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train { config, model, seed, out } => {
            cmd_train(config.as_deref(), model.as_deref(), *seed, out)
        }
        Command::Eval {
            config,
            checkpoint,
            boids,
            steps,
            agents,
            seed,
            metrics_out,
            trajectory_out,
        } => cmd_eval(
            config.as_deref(),
            checkpoint.as_deref(),
            *boids,
            *steps,
            *agents,
            *seed,
            metrics_out,
            trajectory_out.as_deref(),
        ),
        Command::Experiment { grid, out } => cmd_experiment(grid, out),
        Command::DescribeObs { model } => cmd_describe_obs(model),
        Command::ValidateConfig { config } => cmd_validate_config(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}
