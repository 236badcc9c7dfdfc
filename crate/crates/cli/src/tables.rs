//! CSV tables. Every file starts with a `# config: {json}` line carrying the
//! resolved configuration; readers skip it as a comment.
//!
//! Column order follows the usual results table: success rate, completion
//! time, contact duration and max force, with max bending torque appended.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use compass_core::metrics::{summarize, EpisodeMetrics, EventKind};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const EPISODES_FILE: &str = "episodes.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub task: String,
    pub condition: String,
    pub episode: usize,
    pub seed: u64,
    pub success: bool,
    pub completion_time_s: f64,
    pub contact_duration_s: f64,
    pub max_force_n: f64,
    pub max_bending_torque_nm: f64,
    /// Terminal event, or `incomplete` for an aborted episode.
    pub outcome: String,
}

impl EpisodeRow {
    pub fn new(
        task: &str,
        condition: &str,
        episode: usize,
        seed: u64,
        m: &EpisodeMetrics,
        outcome: Option<&EventKind>,
    ) -> Self {
        Self {
            task: task.to_string(),
            condition: condition.to_string(),
            episode,
            seed,
            success: m.success,
            completion_time_s: m.completion_time,
            contact_duration_s: m.contact_duration,
            max_force_n: m.max_force,
            max_bending_torque_nm: m.max_bending_torque,
            outcome: outcome_label(outcome),
        }
    }

    fn metrics(&self) -> EpisodeMetrics {
        EpisodeMetrics {
            success: self.success,
            completion_time: self.completion_time_s,
            contact_duration: self.contact_duration_s,
            max_force: self.max_force_n,
            max_bending_torque: self.max_bending_torque_nm,
        }
    }
}

pub fn outcome_label(kind: Option<&EventKind>) -> String {
    match kind {
        Some(EventKind::Success) => "success",
        Some(EventKind::Fracture) => "fracture",
        Some(EventKind::Timeout) => "timeout",
        Some(EventKind::Aborted { .. }) | None => "incomplete",
        Some(EventKind::SeqGap { .. }) => "seq_gap",
    }
    .to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub task: String,
    pub condition: String,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub completion_time_mean_s: f64,
    pub completion_time_std_s: f64,
    pub contact_duration_mean_s: f64,
    pub contact_duration_std_s: f64,
    pub max_force_mean_n: f64,
    pub max_force_std_n: f64,
    pub max_bending_torque_mean_nm: f64,
    pub max_bending_torque_std_nm: f64,
}

/// One summary row per (task, condition), in sorted order.
pub fn summary_rows(rows: &[EpisodeRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String), Vec<EpisodeMetrics>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.task.clone(), r.condition.clone())).or_default().push(r.metrics());
    }
    groups
        .into_iter()
        .map(|((task, condition), ms)| {
            let s = summarize(&ms);
            SummaryRow {
                task,
                condition,
                episodes: s.episodes,
                successes: s.successes,
                success_rate: s.success_rate,
                completion_time_mean_s: s.completion_time.mean,
                completion_time_std_s: s.completion_time.std,
                contact_duration_mean_s: s.contact_duration.mean,
                contact_duration_std_s: s.contact_duration.std,
                max_force_mean_n: s.max_force.mean,
                max_force_std_n: s.max_force.std,
                max_bending_torque_mean_nm: s.max_bending_torque.mean,
                max_bending_torque_std_nm: s.max_bending_torque.std,
            }
        })
        .collect()
}

/// Writes `rows` to `path` behind the config header line.
pub fn write_csv<T: Serialize>(path: &Path, config: &Value, rows: &[T]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "# config: {}", serde_json::to_string(config).map_err(CliError::runtime)?)?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_csv`], returning the embedded config.
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(Value, Vec<T>), CliError> {
    let text = std::fs::read_to_string(path)?;
    let config = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# config: "))
        .ok_or_else(|| CliError::Runtime(format!("{}: missing config header", path.display())))?;
    let config = serde_json::from_str(config).map_err(CliError::runtime)?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok((config, rows))
}

/// Fixed-width text rendering of summary rows for the terminal.
pub fn render_summary(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<10} {:<4} {:>4} {:>8} {:>16} {:>16} {:>16} {:>14}\n",
        "task", "cond", "n", "success", "time (s)", "contact (s)", "max force (N)", "bend (N·m)"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<10} {:<4} {:>4} {:>7.1}% {:>7.2} ± {:<6.2} {:>7.2} ± {:<6.2} {:>7.1} ± {:<6.1} {:>6.2} ± {:<5.2}\n",
            r.task,
            r.condition,
            r.episodes,
            100.0 * r.success_rate,
            r.completion_time_mean_s,
            r.completion_time_std_s,
            r.contact_duration_mean_s,
            r.contact_duration_std_s,
            r.max_force_mean_n,
            r.max_force_std_n,
            r.max_bending_torque_mean_nm,
            r.max_bending_torque_std_nm,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn row(cond: &str, success: bool, force: f64) -> EpisodeRow {
        let m = EpisodeMetrics {
            success,
            completion_time: 2.0,
            contact_duration: 1.0,
            max_force: force,
            max_bending_torque: 0.1,
        };
        EpisodeRow::new("key", cond, 0, 1, &m, Some(&EventKind::Success))
    }

    #[test]
    fn groups_by_task_and_condition() {
        let rows = vec![row("C4", true, 10.0), row("C1", false, 50.0), row("C4", false, 30.0)];
        let s = summary_rows(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].condition, "C1");
        assert_eq!(s[1].episodes, 2);
        assert_eq!(s[1].success_rate, 0.5);
        assert_eq!(s[1].max_force_mean_n, 20.0);
    }

    #[test]
    fn csv_round_trips_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![row("C4", true, 10.0)];
        write_csv(&path, &json!({"run": {"seed": 4}}), &rows).unwrap();
        let (cfg, back): (Value, Vec<EpisodeRow>) = read_csv(&path).unwrap();
        assert_eq!(cfg, json!({"run": {"seed": 4}}));
        assert_eq!(back, rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "task,condition,episode,seed,success,completion_time_s,contact_duration_s,max_force_n,max_bending_torque_nm,outcome"
        );
    }
}
