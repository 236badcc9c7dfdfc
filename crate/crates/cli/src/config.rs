//! Run configuration: one TOML file with a section per module, layered over
//! the defaults of the selected task preset, with command-line flags on top.
//!
//! Resolution order is preset defaults, then the file, then flags. The
//! merged document is deserialized with unknown fields rejected, so a typo in
//! a section name or key is a config error rather than a silent default.

use std::path::{Path, PathBuf};

use compass_core::afc::AfcConfig;
use compass_core::device::DeviceConfig;
use compass_core::haptic::{Condition, PipelineConfig};
use compass_core::operator::OperatorConfig;
use compass_core::policy::{ExpertConfig, ExpertMode, RolloutConfig, TrainHyper};
use compass_core::session::SessionSpec;
use compass_core::sim::TaskConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Task presets selectable with `run.task` or `--task`.
pub const PRESETS: [&str; 4] = ["key", "key_prealigned", "usb", "spaghetti"];

pub fn preset(name: &str) -> Result<TaskConfig, CliError> {
    match name {
        "key" | "key_insertion" => Ok(TaskConfig::key()),
        "key_prealigned" => Ok(TaskConfig::key_prealigned()),
        "usb" | "usb_insertion" => Ok(TaskConfig::usb()),
        "spaghetti" | "probe" | "spaghetti_probing" => Ok(TaskConfig::spaghetti()),
        other => {
            Err(CliError::Config(format!("unknown task preset `{other}` (expected one of {})", PRESETS.join(", "))))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Preset the `task` section starts from.
    pub task: String,
    pub condition: Condition,
    pub seed: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Episodes per condition.
    pub episodes: usize,
    pub conditions: Vec<Condition>,
    /// Also write every episode log next to the CSV files.
    pub save_logs: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self { episodes: 20, conditions: vec![Condition::C1, Condition::C4], save_logs: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub hidden: usize,
    /// Chunk horizon.
    pub horizon: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// Weight initialization seed.
    pub seed: u64,
    /// Number of demonstrations to collect.
    pub demos: usize,
    /// Keep only successful demonstrations.
    pub successes_only: bool,
    pub expert: ExpertMode,
}

impl Default for TrainSection {
    fn default() -> Self {
        let h = TrainHyper::default();
        Self {
            hidden: h.hidden,
            horizon: h.horizon,
            learning_rate: h.learning_rate,
            momentum: h.momentum,
            epochs: h.epochs,
            seed: h.seed,
            demos: 10,
            successes_only: false,
            expert: ExpertMode::Reactive,
        }
    }
}

impl TrainSection {
    pub fn hyper(&self) -> TrainHyper {
        TrainHyper {
            hidden: self.hidden,
            horizon: self.horizon,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            epochs: self.epochs,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub episodes: usize,
    /// First rollout seed; kept away from the demonstration seeds.
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { episodes: 10, seed: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeSection {
    pub bind: String,
    pub tcp_port: u16,
    pub ws_port: u16,
    pub ui_dir: PathBuf,
    /// `real_time` or `driven`.
    pub pacing: String,
    pub tick_hz: f64,
    pub retarget_scale: f64,
    /// 0 keeps serving until interrupted.
    pub max_episodes: usize,
}

impl Default for ServeSection {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            tcp_port: compass_transport::graph::DEFAULT_TCP_PORT,
            ws_port: compass_transport::graph::DEFAULT_WS_PORT,
            ui_dir: PathBuf::from("ui"),
            pacing: "real_time".into(),
            tick_hz: compass_transport::graph::DEFAULT_TICK_HZ,
            retarget_scale: compass_core::experiment::DEFAULT_RETARGET_SCALE,
            max_episodes: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub task: TaskConfig,
    pub pipeline: PipelineConfig,
    pub device: DeviceConfig,
    pub operator: OperatorConfig,
    pub experiment: ExperimentSection,
    pub afc: AfcConfig,
    pub expert: ExpertConfig,
    pub train: TrainSection,
    pub rollout: RolloutConfig,
    pub eval: EvalSection,
    pub serve: ServeSection,
}

impl RunConfig {
    /// Every section at its default, with the task and device rotation
    /// taken from `preset_name`.
    pub fn defaults(preset_name: &str) -> Result<Self, CliError> {
        let task = preset(preset_name)?;
        let pipeline = PipelineConfig { rotation: task.default_device_rotation(), ..PipelineConfig::default() };
        Ok(Self {
            run: RunSection {
                task: preset_name.to_string(),
                condition: Condition::C4,
                seed: 0,
                out_dir: PathBuf::from("out"),
            },
            task,
            pipeline,
            device: DeviceConfig::default(),
            operator: OperatorConfig::default(),
            experiment: ExperimentSection::default(),
            afc: AfcConfig::default(),
            expert: ExpertConfig::default(),
            train: TrainSection::default(),
            rollout: RolloutConfig::default(),
            eval: EvalSection::default(),
            serve: ServeSection::default(),
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.task.validate()?;
        self.pipeline.validate()?;
        self.device.build()?;
        self.operator.validate()?;
        self.afc.validate()?;
        self.train.hyper().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.experiment.episodes == 0 {
            return Err(CliError::Config("experiment.episodes must be > 0".into()));
        }
        if self.experiment.conditions.is_empty() {
            return Err(CliError::Config("experiment.conditions must not be empty".into()));
        }
        if self.eval.episodes == 0 {
            return Err(CliError::Config("eval.episodes must be > 0".into()));
        }
        if self.train.demos == 0 {
            return Err(CliError::Config("train.demos must be > 0".into()));
        }
        if self.rollout.replan_every == 0 || self.rollout.replan_every > self.train.horizon {
            return Err(CliError::Config(format!(
                "rollout.replan_every must be in 1..={}, got {}",
                self.train.horizon, self.rollout.replan_every
            )));
        }
        match self.serve.pacing.as_str() {
            "real_time" | "driven" => {}
            other => return Err(CliError::Config(format!("serve.pacing must be real_time or driven, got `{other}`"))),
        }
        if !(self.serve.tick_hz.is_finite() && self.serve.tick_hz > 0.0) {
            return Err(CliError::Config(format!("serve.tick_hz must be > 0, got {}", self.serve.tick_hz)));
        }
        Ok(())
    }

    /// The resolved configuration as JSON, embedded in every artifact.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// The resolved configuration as a TOML document that loads back to
    /// the same value.
    pub fn to_toml(&self) -> String {
        let mut v = self.to_json();
        strip_nulls(&mut v);
        toml::to_string(&v).expect("config without nulls serializes to TOML")
    }

    /// Session for `condition` and `seed` with this configuration embedded.
    pub fn session_spec(&self, condition: Condition, seed: u64) -> SessionSpec {
        SessionSpec {
            task: self.task.clone(),
            pipeline: self.pipeline,
            device: self.device,
            condition,
            seed,
            config: self.to_json(),
        }
    }
}

/// Resolves the configuration from an optional file and flag overrides.
///
/// `overrides` are dotted paths (`task.clearance`) with JSON values; they
/// win over the file, which wins over the preset defaults. `default_task`
/// is the preset used when neither the flags nor the file name one.
pub fn resolve(file: Option<&Path>, overrides: &[(String, Value)], default_task: &str) -> Result<RunConfig, CliError> {
    let file_doc = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
            let table: toml::Table =
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::to_value(table).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => Value::Object(Default::default()),
    };
    let mut flags = Value::Object(Default::default());
    for (path, value) in overrides {
        set_path(&mut flags, path, value.clone())?;
    }
    let preset_name = [&flags, &file_doc]
        .iter()
        .find_map(|d| d.pointer("/run/task").cloned())
        .map(|v| match v {
            Value::String(s) => Ok(s),
            other => Err(CliError::Config(format!("run.task must be a string, got {other}"))),
        })
        .transpose()?
        .unwrap_or_else(|| default_task.to_string());
    let mut doc = RunConfig::defaults(&preset_name)?.to_json();
    merge(&mut doc, file_doc);
    merge(&mut doc, flags);
    let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a `--set path=value` argument. The value is read as a TOML value
/// (`0.001`, `true`, `"C4"`, `[1, 0, 0]`) and falls back to a bare string.
pub fn parse_assignment(arg: &str) -> Result<(String, Value), CliError> {
    let (path, raw) =
        arg.split_once('=').ok_or_else(|| CliError::Config(format!("expected path=value, got `{arg}`")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(CliError::Config(format!("empty path in `{arg}`")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => {
            serde_json::to_value(t.remove("v").expect("key present")).map_err(|e| CliError::Config(e.to_string()))?
        }
        Err(_) => Value::String(raw.trim().to_string()),
    };
    Ok((path.to_string(), value))
}

fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Config(format!("malformed config path `{path}`")));
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("`{}` is not a section", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Deep merge: objects merge key by key, anything else is replaced.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn strip_nulls(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.retain(|_, x| !x.is_null());
            m.values_mut().for_each(strip_nulls);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_nulls),
        _ => {}
    }
}
