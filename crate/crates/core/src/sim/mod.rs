//! Deterministic quasi-static contact simulator for the insertion and
//! probing tasks.
//!
//! The object is rigidly held and the tip follows commanded position deltas
//! exactly; contact forces come from penetration (`K·δ` along the face
//! normal) plus Coulomb friction `μ·N` opposing the tangential motion. No
//! inertia is modeled.

pub mod contact;
pub mod probe;
pub mod task;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use contact::{Contact, HoleGeometry};
pub use probe::{probe_field, Obstacle, ResistanceProfile};
pub use task::{TaskConfig, TaskKind};

use crate::error::{ConfigError, SimError};
pub use crate::frame::SensorFrame;
use crate::metrics::bending_torque;
use crate::vec3::{Force3, Vec3, Wrench};

/// Terminal outcome of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskEvent {
    Success,
    Fracture,
    Timeout,
}

/// Slack on the max-step precondition for rounding in callers' clamps.
const STEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub cfg: TaskConfig,
    /// Tool tip position (orientation is fixed).
    pub ee_pose: Vec3,
    pub object_intact: bool,
    pub inserted_depth: f64,
    pub contact_points: Vec<Contact>,
    pub rng: ChaCha8Rng,
    pub clock: f64,
    /// Tip is inside the hole column (insertion tasks).
    pub engaged: bool,
    pub obstacles: Vec<Obstacle>,
    /// Accumulated permanent offset of the fingertip sensor skin (N, sensor frame).
    pub skin_drift: Force3,
    pub terminal: Option<TaskEvent>,
    pub seed: u64,
}

/// Contact forces acting on the held object at one instant.
#[derive(Debug, Clone, PartialEq)]
struct ForceState {
    contacts: Vec<Contact>,
    /// Net force on the object, world frame.
    force: Force3,
}

pub fn sim_reset(cfg: &TaskConfig, seed: u64) -> Result<SimState, ConfigError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = cfg.start_cube_half_extent;
    let mut offset = || if h > 0.0 { rng.gen_range(-h..=h) } else { 0.0 };
    let start = cfg.nominal_start + Vec3::new(offset(), offset(), offset());
    let obstacles = probe::place_obstacles(cfg, &mut rng);
    let mut state = SimState {
        cfg: cfg.clone(),
        ee_pose: start,
        object_intact: true,
        inserted_depth: 0.0,
        contact_points: Vec::new(),
        rng,
        clock: 0.0,
        engaged: false,
        obstacles,
        skin_drift: Vec3::ZERO,
        terminal: None,
        seed,
    };
    state.engaged = state.hole().next_engaged(false, start);
    state.contact_points = state.forces(Vec3::ZERO).contacts;
    state.inserted_depth = state.depth_at(start);
    Ok(state)
}

pub fn sim_step(state: &SimState, action: Vec3, dt: f64) -> Result<(SimState, SensorFrame, Vec<TaskEvent>), SimError> {
    state.step(action, dt)
}

impl SimState {
    fn hole(&self) -> HoleGeometry {
        HoleGeometry { clearance: self.cfg.clearance, chamfer: self.cfg.chamfer, depth: self.cfg.insertion_depth_goal }
    }

    fn depth_at(&self, p: Vec3) -> f64 {
        let inside = match self.cfg.task_kind {
            TaskKind::SpaghettiProbing => {
                let half = self.cfg.container_half_width();
                p.x.abs() <= half && p.y.abs() <= half
            }
            _ => self.engaged,
        };
        if inside {
            (-p.z).clamp(0.0, self.cfg.insertion_depth_goal)
        } else {
            0.0
        }
    }

    /// Contact set and net force at the current pose for tip velocity `v`.
    fn forces(&self, v: Vec3) -> ForceState {
        let cfg = &self.cfg;
        let p = self.ee_pose;
        let contacts = match cfg.task_kind {
            TaskKind::SpaghettiProbing => probe::contacts(cfg, &self.obstacles, p),
            _ => self.hole().contacts(p, self.engaged),
        };
        let speed = v.magnitude();
        let mut force = Vec3::ZERO;
        for c in &contacts {
            let normal_mag = cfg.wall_stiffness * c.penetration;
            force += c.normal.scale(normal_mag);
            let vt = v - c.normal.scale(v.dot(c.normal));
            let vt_mag = vt.magnitude();
            if vt_mag > 1e-12 {
                force -= vt.scale(cfg.friction_mu * normal_mag / vt_mag);
            }
        }
        match cfg.task_kind {
            TaskKind::SpaghettiProbing => {
                let half = cfg.container_half_width();
                let in_medium = p.z < 0.0 && p.x.abs() <= half && p.y.abs() <= half;
                if in_medium && speed > 1e-12 {
                    force -= v.scale(probe::granular_drag_at(cfg, -p.z) / speed);
                }
            }
            TaskKind::UsbInsertion => {
                let depth = -p.z;
                let goal = cfg.insertion_depth_goal;
                if self.engaged && v.z < 0.0 && depth >= goal - cfg.retention_length && depth > 0.0 {
                    force += Vec3::new(0.0, 0.0, cfg.retention_force);
                }
            }
            TaskKind::KeyInsertion => {}
        }
        ForceState { contacts, force }
    }

    /// Contact force expressed in the fingertip sensor frame.
    fn fingertip_load(&self, force: Force3) -> Force3 {
        self.cfg.fingertip_rotation.transpose().apply(force)
    }

    fn make_frame(&self, force: Force3) -> SensorFrame {
        let tactile = self.fingertip_load(force) + self.cfg.grasp_preload + self.skin_drift;
        let wrench = Wrench::new(force, self.cfg.tip_offset.cross(force));
        SensorFrame { t: self.clock, tactile, wrench, ee_pose: self.ee_pose }
    }

    /// Sensor frame for the current pose with the tip at rest.
    pub fn observe(&self) -> SensorFrame {
        self.make_frame(self.forces(Vec3::ZERO).force)
    }

    /// Tactile offset that is not due to contact (preload plus skin drift).
    pub fn tactile_offset(&self) -> Force3 {
        self.cfg.grasp_preload + self.skin_drift
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal.is_some()
    }

    /// Column resistance under the probe (probing task only).
    pub fn probe_profile(&self) -> Option<ResistanceProfile> {
        (self.cfg.task_kind == TaskKind::SpaghettiProbing)
            .then(|| probe_field(&self.obstacles, self.ee_pose, &self.cfg))
    }

    pub fn step(&self, action: Vec3, dt: f64) -> Result<(SimState, SensorFrame, Vec<TaskEvent>), SimError> {
        if let Some(ev) = self.terminal {
            return Err(SimError::Terminal(ev));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SimError::BadDt(dt));
        }
        if !action.is_finite() {
            return Err(SimError::NonFiniteAction);
        }
        let norm = action.magnitude();
        if norm > self.cfg.max_step + STEP_TOL {
            return Err(SimError::ActionTooLarge { norm, max: self.cfg.max_step });
        }

        let mut next = self.clone();
        next.clock = self.clock + dt;
        next.ee_pose = self.ee_pose + action;
        next.engaged = next.hole().next_engaged(self.engaged, next.ee_pose);
        next.inserted_depth = next.depth_at(next.ee_pose);

        let fs = next.forces(action.scale(1.0 / dt));
        next.skin_drift += next.fingertip_load(fs.force).scale(next.cfg.skin_drift_rate * dt);
        next.contact_points = fs.contacts;
        let frame = next.make_frame(fs.force);

        let mut events = Vec::new();
        let bend = bending_torque(&frame.wrench, &next.cfg.lever);
        let over_torque = next.cfg.fracture_torque.is_some_and(|t| bend > t);
        let buckled = next.cfg.buckling_force.is_some_and(|b| fs.force.z > b);
        if over_torque || buckled {
            next.object_intact = false;
            events.push(TaskEvent::Fracture);
        } else if next.inserted_depth >= next.cfg.insertion_depth_goal {
            events.push(TaskEvent::Success);
        } else if next.clock >= next.cfg.time_limit - 1e-9 {
            events.push(TaskEvent::Timeout);
        }
        next.terminal = events.first().copied();
        Ok((next, frame, events))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_at(p: Vec3) -> SimState {
        let mut s = sim_reset(&TaskConfig::key(), 0).unwrap();
        s.ee_pose = p;
        s.engaged = s.hole().next_engaged(false, p);
        s
    }

    #[test]
    fn reset_is_seeded() {
        let a = sim_reset(&TaskConfig::key(), 11).unwrap();
        let b = sim_reset(&TaskConfig::key(), 11).unwrap();
        let c = sim_reset(&TaskConfig::key(), 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.ee_pose, c.ee_pose);
    }

    #[test]
    fn free_space_descent_is_force_free() {
        let mut s = key_at(Vec3::new(0.0, 0.0, 0.01));
        for _ in 0..20 {
            let (n, f, ev) = s.step(Vec3::new(0.0, 0.0, -0.0005), 0.02).unwrap();
            assert_eq!(f.tactile, Vec3::ZERO);
            assert_eq!(f.wrench, Wrench::ZERO);
            assert!(ev.is_empty());
            s = n;
        }
    }

    #[test]
    fn hooke_wall_push() {
        let mut cfg = TaskConfig::key();
        cfg.friction_mu = 0.0;
        let mut s = sim_reset(&cfg, 0).unwrap();
        s.ee_pose = Vec3::new(cfg.clearance, 0.0, -0.01);
        s.engaged = true;
        let (_, f, _) = s.step(Vec3::new(0.001, 0.0, 0.0), 0.02).unwrap();
        assert!((f.wrench.force.x + 5.0).abs() < 1e-9, "{:?}", f.wrench.force);
    }

    #[test]
    fn oversized_action_rejected() {
        let s = key_at(Vec3::new(0.0, 0.0, 0.01));
        assert!(matches!(s.step(Vec3::new(0.0, 0.0, -0.006), 0.02), Err(SimError::ActionTooLarge { .. })));
        assert!(matches!(s.step(Vec3::ZERO, 0.0), Err(SimError::BadDt(_))));
    }

    #[test]
    fn terminal_is_absorbing() {
        let mut s = key_at(Vec3::new(0.0, 0.0, 0.0));
        let goal = s.cfg.insertion_depth_goal;
        let mut ev = Vec::new();
        while ev.is_empty() {
            let step = Vec3::new(0.0, 0.0, -(goal / 10.0));
            let r = s.step(step, 0.02).unwrap();
            s = r.0;
            ev = r.2;
        }
        assert_eq!(ev, vec![TaskEvent::Success]);
        assert_eq!(s.step(Vec3::ZERO, 0.02), Err(SimError::Terminal(TaskEvent::Success)));
    }

    #[test]
    fn timeout_fires() {
        let mut cfg = TaskConfig::key();
        cfg.time_limit = 0.1;
        let mut s = sim_reset(&cfg, 1).unwrap();
        let mut last = Vec::new();
        for _ in 0..5 {
            let r = s.step(Vec3::ZERO, 0.02).unwrap();
            s = r.0;
            last = r.2;
        }
        assert_eq!(last, vec![TaskEvent::Timeout]);
    }

    #[test]
    fn usb_retention_plateau() {
        let cfg = TaskConfig::usb();
        let mut s = sim_reset(&cfg, 0).unwrap();
        s.ee_pose = Vec3::new(0.0, 0.0, -(cfg.insertion_depth_goal - 0.0015));
        s.engaged = true;
        let (_, f, _) = s.step(Vec3::new(0.0, 0.0, -0.0001), 0.02).unwrap();
        assert!((f.wrench.force.z - 8.0).abs() < 1e-12);
    }

    #[test]
    fn skin_drift_accumulates_after_contact() {
        let mut cfg = TaskConfig::key();
        cfg.friction_mu = 0.0;
        let mut s = sim_reset(&cfg, 0).unwrap();
        s.ee_pose = Vec3::new(cfg.clearance + 0.002, 0.0, -0.01);
        s.engaged = true;
        for _ in 0..10 {
            s = s.step(Vec3::ZERO, 0.02).unwrap().0;
        }
        assert!(s.skin_drift.magnitude() > 0.0);
        s.ee_pose = Vec3::new(0.0, 0.0, -0.01);
        let f = s.observe();
        assert_eq!(f.wrench.force, Vec3::ZERO);
        assert_eq!(f.tactile, s.skin_drift);
    }
}
