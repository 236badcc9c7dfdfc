//! Acceptance suite. Prints one PASS or FAIL line per criterion with the
//! measured numbers and exits non-zero if any criterion fails.
//!
//! Every check uses the public crate APIs and an independent oracle where a
//! value is computed, so a regression anywhere in the stack shows up here.

use std::f64::consts::{PI, TAU};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use compass_core::afc::{afc_stats, run_study, AfcConfig};
use compass_core::experiment::{run_condition, run_scripted_episode, DEFAULT_RETARGET_SCALE};
use compass_core::frame::SensorFrame;
use compass_core::haptic::{compute_cue, pipeline_step, BaselineState, Condition, HapticCue, PipelineConfig};
use compass_core::metrics::{bending_torque, summarize, EpisodeLog, LeverConfig};
use compass_core::operator::OperatorConfig;
use compass_core::policy::{
    collect_demos, rollout, train_bc, ActionChunk, Dataset, ExpertConfig, ExpertMode, Normalization, Observation,
    Policy, PolicyDims, RolloutConfig, TrainHyper, Transition,
};
use compass_core::retarget::HandPose;
use compass_core::session::SessionSpec;
use compass_core::sim::{sim_reset, sim_step, TaskConfig, TaskEvent};
use compass_core::vec3::{Force2, Rotation3, Vec3, Wrench};
use compass_transport::client::{connect, drive_episode};
use compass_transport::driver::run_lockstep;
use compass_transport::envelope::{decode_binary, decode_json, encode_binary, encode_json, Envelope, Kind};
use compass_transport::graph::{GraphConfig, NodeGraph, Pacing};
use compass_transport::log::read_log;
use compass_transport::messages::LatencyProbe;
use compass_transport::seq::{SeqStatus, SeqTracker};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("rendering math properties", rendering),
        ("bending-torque oracle equivalence", bending),
        ("protocol golden fixtures, round trip and soak", protocol),
        ("end-to-end determinism", determinism),
        ("simulator sanity", simulator),
        ("condition-effect reproduction", condition_effect),
        ("forced-choice machinery", forced_choice),
        ("learning pipeline", learning),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let r = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !r.pass {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{:.2} s]",
            if r.pass { "PASS" } else { "FAIL" },
            r.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", 8 - failed, 8);
    if failed > 0 {
        std::process::exit(1);
    }
}

// Rendering ------------------------------------------------------------------

fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation3 {
    Rotation3::about_z(rng.gen_range(-PI..PI))
        .compose(&Rotation3::about_y(rng.gen_range(-PI..PI)))
        .compose(&Rotation3::about_x(rng.gen_range(-PI..PI)))
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn rendering() -> Outcome {
    const TRIALS: usize = 1000;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let cfg = PipelineConfig::default();

    // Norm under R, against a plain-array product.
    let mut norm_err: f64 = 0.0;
    let mut product_err: f64 = 0.0;
    for _ in 0..TRIALS {
        let r = random_rotation(&mut rng);
        let v = Vec3::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
        let got = r.apply(v);
        let m = r.rows();
        let a = v.to_array();
        let want: [f64; 3] = std::array::from_fn(|i| m[i][0] * a[0] + m[i][1] * a[1] + m[i][2] * a[2]);
        norm_err = norm_err.max((got.magnitude() - v.magnitude()).abs());
        product_err = product_err.max((got - Vec3::from_array(want)).magnitude());
    }

    // Direction under positive scaling, against atan2 on the raw components.
    let mut dir_err: f64 = 0.0;
    let mut n = 0;
    while n < TRIALS {
        let f = Force2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let s = 10f64.powf(rng.gen_range(-2.0..2.0));
        if f.magnitude() < cfg.deadband || f.scale(s).magnitude() < cfg.deadband {
            continue;
        }
        let a = compute_cue(f, &cfg, HapticCue::IDLE).theta;
        let b = compute_cue(f.scale(s), &cfg, HapticCue::IDLE).theta;
        dir_err = dir_err.max(angle_gap(a, b)).max(angle_gap(a, f.fy.atan2(f.fx)));
        n += 1;
    }

    // Amplitude k·|f| and linear in |f| below the clamp.
    let mut gain_err: f64 = 0.0;
    let mut n = 0;
    while n < TRIALS {
        let f = Force2::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
        let s = rng.gen_range(0.0..1.0);
        if cfg.gain_k * f.magnitude() >= cfg.amplitude_max || f.scale(s).magnitude() < cfg.deadband {
            continue;
        }
        let a = compute_cue(f, &cfg, HapticCue::IDLE).amplitude;
        let b = compute_cue(f.scale(s), &cfg, HapticCue::IDLE).amplitude;
        gain_err = gain_err.max((b - s * a).abs()).max((a - cfg.gain_k * (f.fx * f.fx + f.fy * f.fy).sqrt()).abs());
        n += 1;
    }

    // A snap in free space followed by the same frame changes nothing.
    let mut idempotent = true;
    for _ in 0..TRIALS {
        let t = rng.gen_range(0.5..10.0);
        let tactile = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let frame = SensorFrame {
            t,
            tactile,
            wrench: Wrench::new(Vec3::new(0.0, 0.0, rng.gen_range(0.0..cfg.contact_threshold * 0.9)), Vec3::ZERO),
            ee_pose: Vec3::ZERO,
        };
        let state =
            BaselineState { below_threshold_since: Some(t - 1.0), last_update: Some(t - 0.02), ..Default::default() };
        let once = pipeline_step(state, &frame, &cfg).unwrap().0;
        let twice = pipeline_step(once, &frame, &cfg).unwrap().0;
        idempotent &= once.baseline == tactile && twice == once;
    }

    let secs = start.elapsed().as_secs_f64();
    let pass =
        norm_err <= 1e-9 && product_err <= 1e-9 && dir_err <= 1e-9 && gain_err <= 1e-12 && idempotent && secs < 5.0;
    outcome(
        pass,
        format!(
            "{TRIALS} trials each; norm err {norm_err:.1e} (≤ 1e-9), direction err {dir_err:.1e} rad, \
             gain err {gain_err:.1e}, recalibration idempotent {idempotent}, {secs:.3} s (< 5 s)"
        ),
    )
}

// Bending torque -------------------------------------------------------------

fn brute_bend(f: [f64; 3], tau: [f64; 3], r: [f64; 3], u: [f64; 3]) -> f64 {
    let rxf = [r[1] * f[2] - r[2] * f[1], r[2] * f[0] - r[0] * f[2], r[0] * f[1] - r[1] * f[0]];
    (0..3).map(|i| u[i] * (tau[i] - rxf[i])).sum::<f64>().abs()
}

fn bending() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbe4d);
    let cases: Vec<_> = (0..10_000)
        .map(|_| {
            let f: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-100.0..100.0));
            let tau: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-20.0..20.0));
            let r: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.3..0.3));
            let u = loop {
                let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if n > 0.1 && n <= 1.0 {
                    break [v[0] / n, v[1] / n, v[2] / n];
                }
            };
            (f, tau, r, u)
        })
        .collect();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for &(f, tau, r, u) in &cases {
        let lev = LeverConfig::new(Vec3::from_array(r), Vec3::from_array(u)).unwrap();
        let got = bending_torque(&Wrench::new(Vec3::from_array(f), Vec3::from_array(tau)), &lev);
        worst = worst.max((got - brute_bend(f, tau, r, u)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && secs < 1.0,
        format!("10000 tuples, max abs diff {worst:.1e} (≤ 1e-12), {secs:.4} s (< 1 s)"),
    )
}

// Protocol -------------------------------------------------------------------

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../transport/tests/fixtures")
}

fn random_payload(rng: &mut ChaCha8Rng, depth: u32) -> serde_json::Value {
    use serde_json::Value;
    match rng.gen_range(0..if depth == 0 { 4 } else { 6 }) {
        0 => Value::from(rng.gen::<f64>() * 1e6 - 5e5),
        1 => Value::from(rng.gen::<i64>()),
        2 => Value::from((0..rng.gen_range(0..12)).map(|_| rng.gen_range(' '..'\u{2fff}')).collect::<String>()),
        3 => Value::from(rng.gen_bool(0.5)),
        4 => Value::Array((0..rng.gen_range(0..4)).map(|_| random_payload(rng, depth - 1)).collect()),
        _ => Value::Object(
            (0..rng.gen_range(0..4))
                .map(|i| (format!("k{i}_{}", rng.gen::<u16>()), random_payload(rng, depth - 1)))
                .collect(),
        ),
    }
}

fn soak(seconds: u64) -> (u64, u64, bool) {
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap();
    rt.block_on(async {
        let dir = tempfile::tempdir().unwrap();
        let spec = SessionSpec::for_task(TaskConfig::key(), Condition::C4, 0);
        let (g, _) = graph(spec, dir.path(), None).await;
        let tcp = g.tcp_addr();
        let server = tokio::spawn(g.run(std::future::pending(), |_| {}));
        let (mut tx, mut rx) = connect(tcp).await.unwrap();
        let n = seconds * 1000;
        let sender = tokio::spawn(async move {
            let mut tick = tokio::time::interval(Duration::from_millis(1));
            for id in 0..n {
                tick.tick().await;
                let t_client = tx.micros();
                tx.send(Kind::LatencyProbe, &LatencyProbe { id, t_client, t_server: None }).await.unwrap();
            }
            tx
        });
        let mut tracker = SeqTracker::default();
        let mut received = 0;
        let mut ids_in_order = true;
        for id in 0..n {
            let e = rx.recv().await.unwrap().unwrap();
            if tracker.observe(&e.kind, e.seq) != SeqStatus::InOrder {
                break;
            }
            ids_in_order &= e.body::<LatencyProbe>().unwrap().id == id;
            received += 1;
        }
        sender.await.unwrap();
        server.abort();
        (received, tracker.gaps(), ids_in_order)
    })
}

fn protocol() -> Outcome {
    // Frozen fixtures: each JSON line and its binary twin decode to the same
    // envelope, and both re-encode to the stored bytes.
    let mut fixtures = 0;
    let mut exact = true;
    let mut entries: Vec<_> = std::fs::read_dir(fixture_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries.iter().filter(|p| p.extension().is_some_and(|e| e == "jsonl")) {
        let json = std::fs::read(p).unwrap();
        let bin = std::fs::read(p.with_extension("bin")).unwrap();
        let a = decode_json(&json);
        let b = decode_binary(&bin);
        exact &= match (a, b) {
            (Ok(a), Ok((b, used))) => {
                a == b && used == bin.len() && encode_json(&a) == json && encode_binary(&b) == bin
            }
            _ => false,
        };
        fixtures += 1;
    }

    // Random envelopes through both codecs.
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e7);
    let mut failures = 0;
    for _ in 0..10_000 {
        let kind = if rng.gen_bool(0.9) {
            Kind::KNOWN[rng.gen_range(0..Kind::KNOWN.len())].clone()
        } else {
            Kind::parse(&format!("x_{}", rng.gen::<u32>()))
        };
        let env = Envelope::new(rng.gen(), rng.gen(), kind, &random_payload(&mut rng, 3));
        let json_ok = decode_json(&encode_json(&env)).map(|e| e == env).unwrap_or(false);
        let bin = encode_binary(&env);
        let bin_ok = decode_binary(&bin).map(|(e, used)| e == env && used == bin.len()).unwrap_or(false);
        failures += usize::from(!(json_ok && bin_ok));
    }

    let (received, gaps, ordered) = soak(10);
    let pass = fixtures >= 10 && exact && failures == 0 && received == 10_000 && gaps == 0 && ordered;
    outcome(
        pass,
        format!(
            "{fixtures} fixtures exact {exact}; 10000 random envelopes, {failures} failures; \
             1 kHz soak 10 s: {received}/10000 echoes, {gaps} seq gaps"
        ),
    )
}

// Determinism ----------------------------------------------------------------

async fn graph(spec: SessionSpec, dir: &Path, max: Option<usize>) -> (NodeGraph, SocketAddr) {
    let cfg = GraphConfig {
        tcp_addr: SocketAddr::from(([127, 0, 0, 1], 0)),
        ws_addr: Some(SocketAddr::from(([127, 0, 0, 1], 0))),
        ui_dir: dir.join("ui"),
        pacing: Pacing::Driven,
        max_episodes: max,
        ..GraphConfig::new(spec, dir.join("logs"))
    };
    let g = NodeGraph::bind(cfg).await.unwrap();
    let addr = g.tcp_addr();
    (g, addr)
}

fn serve_once(spec: &SessionSpec, poses: &[HandPose]) -> (EpisodeLog, Vec<u8>) {
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap();
    rt.block_on(async {
        let dir = tempfile::tempdir().unwrap();
        let (g, addr) = graph(spec.clone(), dir.path(), Some(1)).await;
        let server = tokio::spawn(g.run(std::future::pending(), |_| {}));
        drive_episode(addr, poses).await.unwrap();
        let reports = server.await.unwrap().unwrap();
        let path = &reports[0].log_path;
        (read_log(path).unwrap(), std::fs::read(path).unwrap())
    })
}

fn determinism() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (task, seed) in [(TaskConfig::key(), 21), (TaskConfig::usb(), 4)] {
        let spec = SessionSpec::for_task(task, Condition::C4, seed);
        let recorded = run_scripted_episode(&spec, &OperatorConfig::default()).unwrap();
        let (a, a_bytes) = serve_once(&spec, &recorded.poses);
        let (b, b_bytes) = serve_once(&spec, &recorded.poses);
        let lock = run_lockstep(&spec, DEFAULT_RETARGET_SCALE, &recorded.poses).unwrap();
        let same = a == b && a_bytes == b_bytes && a == lock && a == recorded.log;
        pass &= same && a.terminal_event().is_some();
        details.push(format!(
            "{} seed {seed}: {} ticks identical {same}",
            spec.task.task_kind.as_str(),
            a.actions.len()
        ));
    }
    outcome(pass, format!("threaded ×2 vs lockstep vs recording; {}", details.join("; ")))
}

// Simulator ------------------------------------------------------------------

fn descend(offset_x: f64, seed: u64) -> (Option<TaskEvent>, f64, Vec<SensorFrame>, f64) {
    let cfg =
        TaskConfig { start_cube_half_extent: 0.0, nominal_start: Vec3::new(offset_x, 0.0, 0.005), ..TaskConfig::key() };
    let start = Instant::now();
    let mut s = sim_reset(&cfg, seed).unwrap();
    let mut max_force: f64 = 0.0;
    let mut frames = Vec::new();
    for _ in 0..=(cfg.time_limit / cfg.dt) as usize {
        let (next, frame, ev) = sim_step(&s, Vec3::new(0.0, 0.0, -0.001), cfg.dt).unwrap();
        max_force = max_force.max(frame.wrench.force.magnitude());
        frames.push(frame);
        s = next;
        if let Some(e) = ev.first() {
            return (Some(*e), max_force, frames, start.elapsed().as_secs_f64());
        }
    }
    (None, max_force, frames, start.elapsed().as_secs_f64())
}

fn simulator() -> Outcome {
    let clearance = TaskConfig::key().clearance;
    let (ok_event, ok_force, ok_frames, ok_secs) = descend(0.0, 1);
    let (bad_event, _, bad_frames, bad_secs) = descend(2.0 * clearance, 1);
    let deterministic = descend(0.0, 1).2 == ok_frames && descend(2.0 * clearance, 1).2 == bad_frames;
    let pass = ok_event == Some(TaskEvent::Success)
        && ok_force < 20.0
        && bad_event == Some(TaskEvent::Fracture)
        && deterministic
        && ok_secs < 1.0
        && bad_secs < 1.0;
    outcome(
        pass,
        format!(
            "aligned: {ok_event:?} with max force {ok_force:.2} N (< 20 N) in {ok_secs:.4} s; \
             2×clearance offset: {bad_event:?} in {bad_secs:.4} s; deterministic {deterministic}"
        ),
    )
}

// Condition effect -----------------------------------------------------------

fn condition_effect() -> Outcome {
    let start = Instant::now();
    let base = SessionSpec::for_task(TaskConfig::key(), Condition::C1, 2024);
    let run = |c: Condition| {
        let ms: Vec<_> =
            run_condition(&base, c, 50, &OperatorConfig::default()).unwrap().into_iter().map(|(_, m)| m).collect();
        summarize(&ms)
    };
    let (c1, c4) = std::thread::scope(|s| {
        let a = s.spawn(|| run(Condition::C1));
        let b = s.spawn(|| run(Condition::C4));
        (a.join().unwrap(), b.join().unwrap())
    });
    let secs = start.elapsed().as_secs_f64();
    let pass = c4.success_rate > c1.success_rate && c4.max_force.mean < c1.max_force.mean && secs < 120.0;
    outcome(
        pass,
        format!(
            "key, 50 episodes each: C4 success {:.0}% max force {:.1} N vs C1 {:.0}% {:.1} N; {secs:.1} s (< 120 s)",
            100.0 * c4.success_rate,
            c4.max_force.mean,
            100.0 * c1.success_rate,
            c1.max_force.mean
        ),
    )
}

// Forced choice --------------------------------------------------------------

fn forced_choice() -> Outcome {
    let perfect = afc_stats(&run_study(8, 50, f64::INFINITY, 1.0, 1)).unwrap();
    // κ = 0 is the uniform circle, so responses are uniform over choices.
    let uniform = afc_stats(&run_study(8, 12_500, 0.0, 1.0, 2)).unwrap();
    // Analytic chance error: mean of the 8 canonical offsets 0..180..45.
    let chance_err = [0.0, 45.0, 90.0, 135.0, 180.0, 135.0, 90.0, 45.0].iter().sum::<f64>() / 8.0;
    let att = AfcConfig { attenuation_y: 0.4, repetitions: 500, seed: 3, ..AfcConfig::default() };
    let attenuated = afc_stats(&att.run().unwrap()).unwrap();
    let (right, up, left, down) = (0, 2, 4, 6);
    let ud = attenuated.swaps(up, down);
    let lr = attenuated.swaps(left, right);
    let pass = perfect.accuracy == 1.0
        && perfect.mean_angular_error_deg == 0.0
        && (uniform.accuracy - 0.125).abs() <= 0.01
        && (uniform.mean_angular_error_deg - chance_err).abs() <= 2.0
        && ud > lr;
    outcome(
        pass,
        format!(
            "perfect: accuracy {} error {}°; uniform over 1e5: accuracy {:.4} (0.125 ± 0.01) error {:.2}° ({chance_err}° ± 2°); \
             attenuation 0.4: up/down swaps {ud} > left/right swaps {lr}",
            perfect.accuracy,
            perfect.mean_angular_error_deg,
            uniform.accuracy,
            uniform.mean_angular_error_deg
        ),
    )
}

// Learning -------------------------------------------------------------------

fn gradient_check() -> f64 {
    let base = SessionSpec::for_task(TaskConfig::key_prealigned(), Condition::C4, 40);
    let logs = collect_demos(ExpertMode::Reactive, &base, &ExpertConfig::default(), 2, false, 2).unwrap();
    let data = Dataset::from_logs(&logs, &base.pipeline, 4).unwrap();
    let policy = Policy::init(PolicyDims { horizon: 4, hidden: 8 }, Normalization::fit(&data), 6);
    let batch = policy.make_batch(&data).unwrap();
    let (_, grad) = policy.loss_and_grad(&batch);
    let params = policy.params();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let i = rng.gen_range(0..params.len());
        let mut probe = policy.clone();
        let mut p = params.clone();
        p[i] = params[i] + h;
        probe.set_params(&p).unwrap();
        let up = probe.loss(&batch);
        p[i] = params[i] - h;
        probe.set_params(&p).unwrap();
        let down = probe.loss(&batch);
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((grad[i] - fd).abs() / (grad[i].abs() + fd.abs()).max(1e-10));
    }
    worst
}

fn overfit() -> f64 {
    let obs = Observation { tactile_delta: Vec3::new(1.5, -0.4, 3.0), ee_position: Vec3::new(0.0004, -0.0002, -0.003) };
    let deltas = (0..5).map(|k| Vec3::new(-0.0001 * k as f64, 0.00005, -0.001)).collect();
    let data = Dataset { horizon: 5, transitions: vec![Transition { obs, chunk: ActionChunk { deltas } }] };
    let hyper = TrainHyper { hidden: 16, horizon: 5, epochs: 3000, learning_rate: 1e-2, momentum: 0.9, seed: 3 };
    *train_bc(&data, &hyper).unwrap().loss_curve.last().unwrap()
}

fn learning() -> Outcome {
    let start = Instant::now();
    let grad_err = gradient_check();
    let overfit_loss = overfit();

    let eval_seeds: Vec<u64> = (5000..5050).collect();
    let train_seeds = [0u64, 1, 2];
    let modes = [ExpertMode::Reactive, ExpertMode::Nonreactive];
    let datasets: Vec<(SessionSpec, Dataset)> = modes
        .iter()
        .map(|&mode| {
            let base = SessionSpec::for_task(TaskConfig::key_prealigned(), mode.condition(), 0);
            let demos = collect_demos(mode, &base, &ExpertConfig::default(), 10, false, 10).unwrap();
            let data = Dataset::from_logs(&demos, &base.pipeline, TrainHyper::default().horizon).unwrap();
            (base, data)
        })
        .collect();
    // Six independent trainings, one thread each.
    let results: Vec<Vec<(bool, f64)>> = std::thread::scope(|s| {
        let handles: Vec<_> = datasets
            .iter()
            .flat_map(|(base, data)| train_seeds.iter().map(move |&ts| (base, data, ts)))
            .map(|(base, data, ts)| {
                let seeds = &eval_seeds;
                s.spawn(move || {
                    let hyper = TrainHyper { seed: ts, ..TrainHyper::default() };
                    let policy = train_bc(data, &hyper).unwrap().policy;
                    rollout(&policy, base, seeds, &RolloutConfig::default())
                        .unwrap()
                        .into_iter()
                        .map(|(_, m)| (m.success, m.max_force))
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let pooled = |rs: &[Vec<(bool, f64)>]| {
        let all: Vec<_> = rs.iter().flatten().collect();
        let n = all.len() as f64;
        (all.iter().filter(|r| r.0).count() as f64 / n, all.iter().map(|r| r.1).sum::<f64>() / n)
    };
    let (re_succ, re_force) = pooled(&results[..3]);
    let (nr_succ, nr_force) = pooled(&results[3..]);
    let per_seed: Vec<String> = (0..3)
        .map(|i| {
            let (a, _) = pooled(&results[i..i + 1]);
            let (b, _) = pooled(&results[i + 3..i + 4]);
            format!("{:.0}/{:.0}", 100.0 * a, 100.0 * b)
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let gap_pp = 100.0 * (re_succ - nr_succ);
    let force_drop = 1.0 - re_force / nr_force;
    let pass = grad_err < 1e-4 && overfit_loss < 1e-4 && gap_pp >= 20.0 && force_drop >= 0.30 && secs < 300.0;
    outcome(
        pass,
        format!(
            "gradient rel err {grad_err:.1e} (< 1e-4); overfit loss {overfit_loss:.1e} (< 1e-4); \
             3 training seeds × 50 rollouts: reactive {:.1}% / {re_force:.1} N vs nonreactive {:.1}% / {nr_force:.1} N, \
             +{gap_pp:.1} pp (≥ 20), force −{:.0}% (≥ 30%), per-seed success % {}; {secs:.1} s (< 300 s)",
            100.0 * re_succ,
            100.0 * nr_succ,
            100.0 * force_drop,
            per_seed.join(", ")
        ),
    )
}
