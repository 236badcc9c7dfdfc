//! Scripted operators under different feedback conditions on the key task.

use compass_core::experiment::{replay_poses, run_condition, run_scripted_episode};
use compass_core::haptic::Condition;
use compass_core::metrics::summarize;
use compass_core::operator::OperatorConfig;
use compass_core::session::SessionSpec;
use compass_core::sim::TaskConfig;

#[test]
fn directional_cues_beat_vision_only() {
    let base = SessionSpec::for_task(TaskConfig::key(), Condition::C1, 1);
    let op = OperatorConfig::default();
    let metrics = |c| run_condition(&base, c, 20, &op).unwrap().into_iter().map(|r| r.1).collect::<Vec<_>>();
    let c1 = summarize(&metrics(Condition::C1));
    let c4 = summarize(&metrics(Condition::C4));
    assert!(c4.success_rate > c1.success_rate, "{} vs {}", c4.success_rate, c1.success_rate);
    assert!(c4.max_force.mean < c1.max_force.mean, "{} vs {}", c4.max_force.mean, c1.max_force.mean);
}

#[test]
fn recorded_poses_replay_to_the_same_log() {
    let spec = SessionSpec::for_task(TaskConfig::key(), Condition::C4, 12);
    let run = run_scripted_episode(&spec, &OperatorConfig::default()).unwrap();
    assert_eq!(replay_poses(&spec, &run.poses).unwrap(), run.log);
}
