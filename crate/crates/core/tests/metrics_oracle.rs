//! Episode metrics and bending torque against brute-force reimplementations.

use std::time::Instant;

use compass_core::frame::SensorFrame;
use compass_core::haptic::Condition;
use compass_core::metrics::{
    bending_torque, episode_metrics, EpisodeLog, EpisodeMeta, EventKind, LeverConfig, LogEvent,
};
use compass_core::sim::TaskKind;
use compass_core::vec3::{Vec3, Wrench};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_bend(f: [f64; 3], tau: [f64; 3], r: [f64; 3], u: [f64; 3]) -> f64 {
    let rxf = [r[1] * f[2] - r[2] * f[1], r[2] * f[0] - r[0] * f[2], r[0] * f[1] - r[1] * f[0]];
    let mut s = 0.0;
    for i in 0..3 {
        s += u[i] * (tau[i] - rxf[i]);
    }
    s.abs()
}

fn unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

#[test]
fn bending_torque_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let f: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-100.0..100.0));
        let tau: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-20.0..20.0));
        let r: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.3..0.3));
        let u = unit(&mut rng);
        let lev = LeverConfig::new(Vec3::from_array(r), Vec3::from_array(u)).unwrap();
        let got = bending_torque(&Wrench::new(Vec3::from_array(f), Vec3::from_array(tau)), &lev);
        worst = worst.max((got - brute_bend(f, tau, r, u)).abs());
    }
    assert!(worst <= 1e-12, "max diff {worst}");
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn bending_ignores_force_along_the_lever() {
    // A force through the grip point along r has no moment about it.
    let lev = LeverConfig::new(Vec3::new(0.0, 0.0, -0.1), Vec3::new(0.0, 1.0, 0.0)).unwrap();
    let tau = Vec3::new(0.3, -0.7, 0.1);
    let a = bending_torque(&Wrench::new(Vec3::ZERO, tau), &lev);
    let b = bending_torque(&Wrench::new(Vec3::new(0.0, 0.0, 55.0), tau), &lev);
    assert!((a - b).abs() < 1e-15);
}

fn random_log(rng: &mut ChaCha8Rng, n: usize, t0: f64) -> EpisodeLog {
    let meta = EpisodeMeta {
        task: TaskKind::KeyInsertion,
        condition: Condition::C4,
        seed: 0,
        config: serde_json::Value::Null,
    };
    let mut log = EpisodeLog::new(meta);
    let mut t = t0;
    for _ in 0..n {
        let on = rng.gen_bool(0.4);
        let mag = if on { 10.0 } else { 1.0 };
        let force = Vec3::new(rng.gen_range(-mag..mag), rng.gen_range(-mag..mag), rng.gen_range(-mag..mag));
        let torque = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        log.frames.push(SensorFrame {
            t,
            tactile: Vec3::ZERO,
            wrench: Wrench::new(force, torque),
            ee_pose: Vec3::ZERO,
        });
        t += rng.gen_range(0.005..0.03);
    }
    log.events.push(LogEvent { t: log.frames.last().unwrap().t, kind: EventKind::Success });
    log
}

#[test]
fn metrics_match_oracle_on_random_logs() {
    let lev = LeverConfig::new(Vec3::new(0.0, 0.0, -0.1), Vec3::new(0.0, 1.0, 0.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let log = random_log(&mut rng, 200, 0.0);
        let m = episode_metrics(&log, 2.0, &lev).unwrap();
        let norm = |f: &SensorFrame| {
            let v = f.wrench.force.to_array();
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
        };
        let mut contact = 0.0;
        for i in 1..log.frames.len() {
            if norm(&log.frames[i]) > 2.0 {
                contact += log.frames[i].t - log.frames[i - 1].t;
            }
        }
        let max_force = log.frames.iter().map(norm).fold(f64::NEG_INFINITY, f64::max);
        let max_bend = log
            .frames
            .iter()
            .map(|f| {
                brute_bend(f.wrench.force.to_array(), f.wrench.torque.to_array(), [0.0, 0.0, -0.1], [0.0, 1.0, 0.0])
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(m.success);
        assert!((m.completion_time - (log.frames[199].t - log.frames[0].t)).abs() < 1e-12);
        assert!((m.contact_duration - contact).abs() < 1e-9);
        assert_eq!(m.max_force, max_force);
        assert!((m.max_bending_torque - max_bend).abs() < 1e-12);
        assert!(m.contact_duration <= m.completion_time + 1e-12);
    }
}

#[test]
fn metrics_are_invariant_to_a_time_shift() {
    let lev = LeverConfig::new(Vec3::new(0.0, 0.0, -0.1), Vec3::new(0.0, 1.0, 0.0)).unwrap();
    let a = episode_metrics(&random_log(&mut ChaCha8Rng::seed_from_u64(4), 200, 0.0), 2.0, &lev).unwrap();
    let b = episode_metrics(&random_log(&mut ChaCha8Rng::seed_from_u64(4), 200, 1000.0), 2.0, &lev).unwrap();
    assert_eq!(a.success, b.success);
    assert_eq!(a.max_force, b.max_force);
    assert!((a.completion_time - b.completion_time).abs() < 1e-9);
    assert!((a.contact_duration - b.contact_duration).abs() < 1e-9);
}
