//! Argument parsing. Every subcommand accepts the same run options; the
//! subcommand-specific flags are shorthands for config keys and win over
//! the config file the same way.
//!
//! Exit codes: 0 on success, 2 for a config error, 3 for a runtime error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use compass_core::haptic::Condition;
use compass_core::policy::ExpertMode;
use serde_json::{json, Value};

use crate::commands;
use crate::config::{parse_assignment, resolve, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "compass", version, about = "Directional haptic teleoperation: service, experiments and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML config file; flags override its values.
    #[arg(long, short = 'c', global = true)]
    pub config: Option<PathBuf>,
    /// Task preset: key, key_prealigned, usb or spaghetti.
    #[arg(long, global = true)]
    pub task: Option<String>,
    /// Feedback condition C1..C4.
    #[arg(long, global = true)]
    pub condition: Option<Condition>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for logs, tables and policies.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Set any config key, e.g. `--set task.clearance=0.001`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Print the resolved config as TOML and exit without side effects.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the node graph: TCP and web-socket endpoints, static UI under /ui.
    Serve {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        tcp_port: Option<u16>,
        #[arg(long)]
        ws_port: Option<u16>,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        /// real_time (fixed tick rate) or driven (one tick per hand pose).
        #[arg(long)]
        pacing: Option<String>,
        #[arg(long)]
        tick_hz: Option<f64>,
        /// Stop after this many episodes (0 = until interrupted).
        #[arg(long)]
        max_episodes: Option<usize>,
    },
    /// Scripted-operator episodes per condition, aggregated into CSV tables.
    Experiment {
        #[command(flatten)]
        run: RunArgs,
        /// Episodes per condition.
        #[arg(long, short = 'n')]
        episodes: Option<usize>,
        /// Comma-separated conditions, e.g. C1,C4.
        #[arg(long, value_delimiter = ',')]
        conditions: Option<Vec<Condition>>,
        /// Also write every episode log.
        #[arg(long)]
        save_logs: bool,
    },
    /// Metrics of a recorded episode log, optionally checked by re-simulation.
    Replay {
        #[command(flatten)]
        run: RunArgs,
        log: PathBuf,
        /// Re-run the logged actions and fail if the result differs.
        #[arg(long)]
        check: bool,
    },
    /// Synthetic forced-choice direction study.
    Afc {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        choices: Option<usize>,
        /// Repetitions of every direction.
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        kappa: Option<f64>,
        /// Vertical sensitivity in [0, 1].
        #[arg(long)]
        attenuation: Option<f64>,
    },
    /// Collect scripted demonstrations and train a chunking policy.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// reactive or nonreactive.
        #[arg(long)]
        expert: Option<ExpertMode>,
        #[arg(long)]
        demos: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Policy file (default: <out_dir>/policy.bin).
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
    /// Roll a trained policy out on fresh seeds.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, short = 'n')]
        episodes: Option<usize>,
    },
    /// Tables from a set of episode logs (files or directories).
    ExportCsv {
        #[command(flatten)]
        run: RunArgs,
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn push(out: &mut Vec<(String, Value)>, key: &str, v: Option<Value>) {
    if let Some(v) = v {
        out.push((key.to_string(), v));
    }
}

fn run_overrides(a: &RunArgs) -> Result<Vec<(String, Value)>, CliError> {
    let mut o = Vec::new();
    push(&mut o, "run.task", a.task.clone().map(Value::from));
    push(&mut o, "run.condition", a.condition.map(|c| json!(c)));
    push(&mut o, "run.seed", a.seed.map(Value::from));
    push(&mut o, "run.out_dir", a.out_dir.as_ref().map(|p| json!(p)));
    for s in &a.set {
        o.push(parse_assignment(s)?);
    }
    Ok(o)
}

/// Resolves the config; prints it and returns `None` on a dry run.
fn load(a: &RunArgs, extra: Vec<(String, Value)>, default_task: &str) -> Result<Option<RunConfig>, CliError> {
    let mut o = run_overrides(a)?;
    // Subcommand flags go first, so a `--set` on the same key is applied last.
    o.splice(0..0, extra);
    let cfg = resolve(a.config.as_deref(), &o, default_task)?;
    if a.dry_run {
        print!("{}", cfg.to_toml());
        return Ok(None);
    }
    Ok(Some(cfg))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve { run, bind, tcp_port, ws_port, ui_dir, pacing, tick_hz, max_episodes } => {
            let mut o = Vec::new();
            push(&mut o, "serve.bind", bind.map(Value::from));
            push(&mut o, "serve.tcp_port", tcp_port.map(Value::from));
            push(&mut o, "serve.ws_port", ws_port.map(Value::from));
            push(&mut o, "serve.ui_dir", ui_dir.map(|p| json!(p)));
            push(&mut o, "serve.pacing", pacing.map(Value::from));
            push(&mut o, "serve.tick_hz", tick_hz.map(Value::from));
            push(&mut o, "serve.max_episodes", max_episodes.map(Value::from));
            if let Some(cfg) = load(&run, o, "key")? {
                commands::serve(&cfg)?;
            }
        }
        Command::Experiment { run, episodes, conditions, save_logs } => {
            let mut o = Vec::new();
            push(&mut o, "experiment.episodes", episodes.map(Value::from));
            push(&mut o, "experiment.conditions", conditions.map(|c| json!(c)));
            push(&mut o, "experiment.save_logs", save_logs.then_some(Value::Bool(true)));
            if let Some(cfg) = load(&run, o, "key")? {
                commands::experiment(&cfg)?;
            }
        }
        Command::Replay { run, log, check } => {
            if load(&run, Vec::new(), "key")?.is_some() {
                commands::replay(&log, check)?;
            }
        }
        Command::Afc { run, choices, repetitions, kappa, attenuation } => {
            let mut o = Vec::new();
            push(&mut o, "afc.n_choices", choices.map(Value::from));
            push(&mut o, "afc.repetitions", repetitions.map(Value::from));
            push(&mut o, "afc.kappa", kappa.map(Value::from));
            push(&mut o, "afc.attenuation_y", attenuation.map(Value::from));
            // The study seed follows the run seed unless the file sets it.
            push(&mut o, "afc.seed", run.seed.map(Value::from));
            if let Some(cfg) = load(&run, o, "key")? {
                commands::afc(&cfg)?;
            }
        }
        Command::Train { run, expert, demos, epochs, output } => {
            let mut o = Vec::new();
            push(&mut o, "train.expert", expert.map(|m| json!(m)));
            push(&mut o, "train.demos", demos.map(Value::from));
            push(&mut o, "train.epochs", epochs.map(Value::from));
            if let Some(cfg) = load(&run, o, "key_prealigned")? {
                commands::train(&cfg, output.as_deref())?;
            }
        }
        Command::Eval { run, policy, episodes } => {
            let mut o = Vec::new();
            push(&mut o, "eval.episodes", episodes.map(Value::from));
            if let Some(cfg) = load(&run, o, "key_prealigned")? {
                commands::eval(&cfg, &policy)?;
            }
        }
        Command::ExportCsv { run, logs } => {
            if let Some(cfg) = load(&run, Vec::new(), "key")? {
                let out = cfg.run.out_dir.clone();
                commands::export_csv(&cfg, &logs, &out)?;
            }
        }
    }
    Ok(())
}
