//! Subcommand bodies. Each takes a resolved [`RunConfig`] and writes its
//! artifacts under `run.out_dir` unless told otherwise.

use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use compass_core::afc::{afc_stats, canonical_angle, choice_label, AfcStats, AfcTrial};
use compass_core::experiment::{episode_seed, run_condition};
use compass_core::metrics::{episode_metrics, EpisodeLog, EpisodeMetrics, EventKind};
use compass_core::policy::io::{read_policy, write_policy};
use compass_core::policy::{collect_demos, rollout, train_bc, Dataset};
use compass_core::session::{Session, SessionSpec};
use compass_transport::graph::{EpisodeReport, GraphConfig, NodeGraph, Pacing};
use compass_transport::log::{log_path, read_log, write_log};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::tables::{render_summary, summary_rows, write_csv, EpisodeRow, EPISODES_FILE, SUMMARY_FILE};

pub const AFC_FILE: &str = "afc.json";
pub const AFC_RADAR_FILE: &str = "afc_radar.csv";
pub const POLICY_FILE: &str = "policy.bin";
pub const LOSS_FILE: &str = "train_loss.csv";

/// Batch of scripted-operator episodes for every configured condition.
pub fn experiment(cfg: &RunConfig) -> Result<Vec<EpisodeRow>, CliError> {
    let n = cfg.experiment.episodes;
    let config = cfg.to_json();
    // Conditions are independent and seeded, so they run side by side.
    let results: Vec<Result<Vec<(EpisodeLog, EpisodeMetrics)>, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .experiment
            .conditions
            .iter()
            .map(|&c| {
                let base = cfg.session_spec(c, cfg.run.seed);
                s.spawn(move || run_condition(&base, c, n, &cfg.operator).map_err(CliError::runtime))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("experiment worker panicked")).collect()
    });
    let mut rows = Vec::new();
    for (&c, res) in cfg.experiment.conditions.iter().zip(results) {
        for (i, (log, m)) in res?.into_iter().enumerate() {
            let seed = episode_seed(cfg.run.seed, i);
            rows.push(EpisodeRow::new(
                cfg.task.task_kind.as_str(),
                c.as_str(),
                i,
                seed,
                &m,
                log.terminal_event().map(|e| &e.kind),
            ));
            if cfg.experiment.save_logs {
                write_log(&log_path(&cfg.run.out_dir.join("logs"), &log, i), &log)?;
            }
        }
    }
    let summary = summary_rows(&rows);
    write_csv(&cfg.run.out_dir.join(EPISODES_FILE), &config, &rows)?;
    write_csv(&cfg.run.out_dir.join(SUMMARY_FILE), &config, &summary)?;
    print!("{}", render_summary(&summary));
    println!("wrote {}", cfg.run.out_dir.join(SUMMARY_FILE).display());
    Ok(rows)
}

#[derive(Debug, Serialize)]
struct RadarRow {
    direction_deg: f64,
    label: &'static str,
    trials: u64,
    accuracy: f64,
}

/// Synthetic forced-choice study; writes the full result as JSON and the
/// per-direction accuracy as a radar-plot table.
pub fn afc(cfg: &RunConfig) -> Result<AfcStats, CliError> {
    let trials: Vec<AfcTrial> = cfg.afc.run()?;
    let stats = afc_stats(&trials).map_err(CliError::runtime)?;
    let n = stats.n_choices;
    let radar: Vec<RadarRow> = (0..n)
        .map(|i| RadarRow {
            direction_deg: canonical_angle(i, n).to_degrees(),
            label: choice_label(i, n),
            trials: stats.confusion[i].iter().sum(),
            accuracy: stats.per_direction_accuracy(i),
        })
        .collect();
    let doc = json!({
        "config": cfg.to_json(),
        "n_choices": n,
        "labels": (0..n).map(|i| choice_label(i, n)).collect::<Vec<_>>(),
        "accuracy": stats.accuracy,
        "mean_angular_error_deg": stats.mean_angular_error_deg,
        "confusion": stats.confusion,
        "per_direction": radar,
        "trials": trials,
    });
    std::fs::create_dir_all(&cfg.run.out_dir)?;
    let path = cfg.run.out_dir.join(AFC_FILE);
    std::fs::write(&path, serde_json::to_vec_pretty(&doc).map_err(CliError::runtime)?)?;
    write_csv(&cfg.run.out_dir.join(AFC_RADAR_FILE), &cfg.to_json(), &radar)?;
    println!(
        "{n}-AFC, {} trials: accuracy {:.3}, mean angular error {:.1}°",
        trials.len(),
        stats.accuracy,
        stats.mean_angular_error_deg
    );
    for (i, row) in stats.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>4}")).collect();
        println!("  {:<10}{}", choice_label(i, n), cells.join(""));
    }
    println!("wrote {}", path.display());
    Ok(stats)
}

#[derive(Debug, Serialize)]
struct LossRow {
    epoch: usize,
    loss: f64,
}

/// Collects scripted demonstrations and trains a policy on them. Returns
/// the policy path.
pub fn train(cfg: &RunConfig, output: Option<&Path>) -> Result<PathBuf, CliError> {
    let mode = cfg.train.expert;
    let base = cfg.session_spec(mode.condition(), cfg.run.seed);
    let demos =
        collect_demos(mode, &base, &cfg.expert, cfg.train.demos, cfg.train.successes_only, cfg.train.demos * 20)?;
    let ok = demos.iter().filter(|l| matches!(l.terminal_event().map(|e| &e.kind), Some(EventKind::Success))).count();
    let data = Dataset::from_logs(&demos, &cfg.pipeline, cfg.train.horizon)?;
    let result = train_bc(&data, &cfg.train.hyper())?;
    let path = output.map(Path::to_path_buf).unwrap_or_else(|| cfg.run.out_dir.join(POLICY_FILE));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    write_policy(&mut file, &result.policy, &cfg.to_json())?;
    file.flush()?;
    let losses: Vec<LossRow> =
        result.loss_curve.iter().enumerate().map(|(epoch, &loss)| LossRow { epoch, loss }).collect();
    write_csv(&cfg.run.out_dir.join(LOSS_FILE), &cfg.to_json(), &losses)?;
    println!(
        "{} {:?} demos ({ok} successful), {} transitions, loss {:.5} -> {:.5}",
        demos.len(),
        mode,
        data.len(),
        result.loss_curve[0],
        result.loss_curve.last().expect("loss curve is never empty")
    );
    println!("wrote {}", path.display());
    Ok(path)
}

/// Rolls a stored policy out on `eval.episodes` seeds.
pub fn eval(cfg: &RunConfig, policy_path: &Path) -> Result<Vec<EpisodeRow>, CliError> {
    let mut file = std::fs::File::open(policy_path)
        .map_err(|e| CliError::Config(format!("cannot open policy {}: {e}", policy_path.display())))?;
    let (policy, _) = read_policy(&mut std::io::BufReader::new(&mut file))?;
    let base = cfg.session_spec(cfg.run.condition, cfg.eval.seed);
    let seeds: Vec<u64> = (0..cfg.eval.episodes as u64).map(|i| cfg.eval.seed + i).collect();
    let out = rollout(&policy, &base, &seeds, &cfg.rollout)?;
    let rows: Vec<EpisodeRow> = out
        .iter()
        .zip(&seeds)
        .enumerate()
        .map(|(i, ((log, m), &seed))| {
            EpisodeRow::new(
                cfg.task.task_kind.as_str(),
                cfg.run.condition.as_str(),
                i,
                seed,
                m,
                log.terminal_event().map(|e| &e.kind),
            )
        })
        .collect();
    let summary = summary_rows(&rows);
    let config = json!({ "run": cfg.to_json(), "policy": policy_path.display().to_string() });
    write_csv(&cfg.run.out_dir.join("eval_episodes.csv"), &config, &rows)?;
    write_csv(&cfg.run.out_dir.join("eval_summary.csv"), &config, &summary)?;
    print!("{}", render_summary(&summary));
    Ok(rows)
}

/// Session spec a log was recorded with: from its embedded config when it
/// holds one, else the preset of its task with defaults.
pub fn spec_for_log(log: &EpisodeLog) -> SessionSpec {
    match serde_json::from_value::<RunConfig>(log.meta.config.clone()) {
        Ok(cfg) => cfg.session_spec(log.meta.condition, log.meta.seed),
        Err(_) => SessionSpec::for_task(log.meta.task.preset(), log.meta.condition, log.meta.seed),
    }
}

pub fn log_metrics(log: &EpisodeLog) -> Result<EpisodeMetrics, CliError> {
    let spec = spec_for_log(log);
    episode_metrics(log, spec.pipeline.contact_threshold, &spec.task.lever).map_err(CliError::runtime)
}

/// Re-runs the recorded actions through a fresh session and reports whether
/// every frame, cue, telemetry sample and task event matches the log.
/// Transport events (sequence gaps, aborts) are not simulator output and
/// are left out of the comparison.
pub fn resimulate(log: &EpisodeLog) -> Result<bool, CliError> {
    let spec = spec_for_log(log);
    let mut session = Session::new(&spec)?;
    for a in &log.actions {
        if session.is_finished() {
            return Ok(false);
        }
        session.tick(*a).map_err(CliError::runtime)?;
    }
    let fresh = session.into_log();
    let sim_events = |l: &EpisodeLog| -> Vec<_> {
        l.events
            .iter()
            .filter(|e| !matches!(e.kind, EventKind::SeqGap { .. } | EventKind::Aborted { .. }))
            .cloned()
            .collect()
    };
    Ok(fresh.frames == log.frames
        && fresh.cues == log.cues
        && fresh.telemetry == log.telemetry
        && sim_events(&fresh) == sim_events(log))
}

/// Prints the metrics of a stored log and optionally checks it against a
/// re-simulation.
pub fn replay(path: &Path, check: bool) -> Result<Value, CliError> {
    let log = read_log(path)?;
    let m = log_metrics(&log)?;
    let mut doc = json!({
        "log": path.display().to_string(),
        "task": log.meta.task.as_str(),
        "condition": log.meta.condition.as_str(),
        "seed": log.meta.seed,
        "ticks": log.actions.len(),
        "outcome": crate::tables::outcome_label(log.terminal_event().map(|e| &e.kind)),
        "metrics": m,
    });
    if check {
        let same = resimulate(&log)?;
        doc["resimulation_matches"] = json!(same);
        println!("{}", serde_json::to_string_pretty(&doc).map_err(CliError::runtime)?);
        if !same {
            return Err(CliError::Runtime(format!("{}: re-simulation diverges from the log", path.display())));
        }
    } else {
        println!("{}", serde_json::to_string_pretty(&doc).map_err(CliError::runtime)?);
    }
    Ok(doc)
}

/// Expands directories into the episode logs they hold, sorted by name.
pub fn collect_log_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.to_string_lossy().ends_with(".jsonl.gz"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("no episode logs given".into()));
    }
    Ok(out)
}

/// Per-episode and summary tables for a set of stored logs.
pub fn export_csv(cfg: &RunConfig, inputs: &[PathBuf], out_dir: &Path) -> Result<Vec<EpisodeRow>, CliError> {
    let paths = collect_log_paths(inputs)?;
    let mut rows = Vec::with_capacity(paths.len());
    for (i, p) in paths.iter().enumerate() {
        let log = read_log(p)?;
        let m = log_metrics(&log)?;
        rows.push(EpisodeRow::new(
            log.meta.task.as_str(),
            log.meta.condition.as_str(),
            i,
            log.meta.seed,
            &m,
            log.terminal_event().map(|e| &e.kind),
        ));
    }
    let config = json!({
        "run": cfg.to_json(),
        "sources": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    let summary = summary_rows(&rows);
    write_csv(&out_dir.join(EPISODES_FILE), &config, &rows)?;
    write_csv(&out_dir.join(SUMMARY_FILE), &config, &summary)?;
    print!("{}", render_summary(&summary));
    Ok(rows)
}

pub fn graph_config(cfg: &RunConfig) -> Result<GraphConfig, CliError> {
    let ip: IpAddr =
        cfg.serve.bind.parse().map_err(|e| CliError::Config(format!("serve.bind `{}`: {e}", cfg.serve.bind)))?;
    let pacing = match cfg.serve.pacing.as_str() {
        "driven" => Pacing::Driven,
        _ => Pacing::RealTime { tick_hz: cfg.serve.tick_hz },
    };
    let mut g = GraphConfig::new(cfg.session_spec(cfg.run.condition, cfg.run.seed), cfg.run.out_dir.join("logs"));
    g.tcp_addr = SocketAddr::new(ip, cfg.serve.tcp_port);
    g.ws_addr = Some(SocketAddr::new(ip, cfg.serve.ws_port));
    g.ui_dir = cfg.serve.ui_dir.clone();
    g.pacing = pacing;
    g.retarget_scale = cfg.serve.retarget_scale;
    g.max_episodes = (cfg.serve.max_episodes > 0).then_some(cfg.serve.max_episodes);
    Ok(g)
}

/// Runs the node graph until interrupted (or `serve.max_episodes` finish).
pub fn serve(cfg: &RunConfig) -> Result<Vec<EpisodeReport>, CliError> {
    let gcfg = graph_config(cfg)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let graph = NodeGraph::bind(gcfg).await?;
        println!(
            "serving task={} condition={} seed={}",
            cfg.task.task_kind.as_str(),
            cfg.run.condition.as_str(),
            cfg.run.seed
        );
        println!("  tcp  {}  (JSON lines)", graph.tcp_addr());
        if let Some(ws) = graph.ws_addr() {
            println!("  ws   ws://{ws}/ws");
            println!("  ui   http://{ws}/ui/");
        }
        println!("  logs {}", cfg.run.out_dir.join("logs").display());
        std::io::stdout().flush()?;
        let shutdown = async {
            // If the handler cannot be installed, serve until max_episodes.
            if tokio::signal::ctrl_c().await.is_err() {
                std::future::pending::<()>().await;
            }
        };
        let reports = graph
            .run(shutdown, |r| {
                println!(
                    "episode {} seed {} {} -> {}",
                    r.index,
                    r.seed,
                    crate::tables::outcome_label(r.terminal.as_ref()),
                    r.log_path.display()
                );
                let _ = std::io::stdout().flush();
            })
            .await?;
        println!("shut down after {} episode(s)", reports.len());
        for r in &reports {
            println!("log {}", r.log_path.display());
        }
        Ok(reports)
    })
}
