use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::metrics::LeverConfig;
use crate::vec3::{Force3, Rotation3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    KeyInsertion,
    UsbInsertion,
    SpaghettiProbing,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::KeyInsertion => "key",
            TaskKind::UsbInsertion => "usb",
            TaskKind::SpaghettiProbing => "spaghetti",
        }
    }

    pub fn preset(self) -> TaskConfig {
        match self {
            TaskKind::KeyInsertion => TaskConfig::key(),
            TaskKind::UsbInsertion => TaskConfig::usb(),
            TaskKind::SpaghettiProbing => TaskConfig::spaghetti(),
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "key" | "key_insertion" => Ok(TaskKind::KeyInsertion),
            "usb" | "usb_insertion" => Ok(TaskKind::UsbInsertion),
            "spaghetti" | "probe" | "spaghetti_probing" => Ok(TaskKind::SpaghettiProbing),
            other => Err(format!("unknown task `{other}` (expected key, usb or spaghetti)")),
        }
    }
}

/// Geometry, material and sensing parameters of one task.
///
/// The hole (or container) opening is centered at the world origin with
/// its axis along −z; the tool tip is commanded in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub task_kind: TaskKind,
    /// Radial gap between object and hole wall, per side (m).
    pub clearance: f64,
    /// Horizontal width of the 45° entrance chamfer (m).
    pub chamfer: f64,
    /// N/m
    pub wall_stiffness: f64,
    pub friction_mu: f64,
    /// Bending torque (N·m) that breaks the object; `None` means unbreakable.
    pub fracture_torque: Option<f64>,
    /// Axial compressive force (N) that buckles the object.
    pub buckling_force: Option<f64>,
    pub insertion_depth_goal: f64,
    pub start_cube_half_extent: f64,
    /// Tip position the start cube is centered on.
    pub nominal_start: Vec3,
    pub obstacle_count: usize,
    /// Probe grid: cells per side and cell size (m).
    pub grid_cells: usize,
    pub cell_size: f64,
    pub obstacle_thickness: f64,
    /// Granular drag magnitude near the surface (N).
    pub granular_drag: f64,
    /// Resistance plateau (N) over the last `retention_length` m of insertion.
    pub retention_force: f64,
    pub retention_length: f64,
    /// Tip position relative to the wrist F/T sensor origin (m).
    pub tip_offset: Vec3,
    /// Grip point and primary bending axis used for fracture checks.
    pub lever: LeverConfig,
    /// Orientation of the fingertip sensor frame in the world frame.
    pub fingertip_rotation: Rotation3,
    /// Constant grasp load seen by the fingertip sensor (N, sensor frame).
    pub grasp_preload: Force3,
    /// Fraction per second of the fingertip load that turns into permanent skin drift.
    pub skin_drift_rate: f64,
    pub max_step: f64,
    pub dt: f64,
    /// Episode length cap (s); reaching it emits a timeout.
    pub time_limit: f64,
}

impl TaskConfig {
    pub fn key() -> Self {
        Self {
            task_kind: TaskKind::KeyInsertion,
            clearance: 0.0005,
            chamfer: 0.002,
            wall_stiffness: 5000.0,
            friction_mu: 0.4,
            fracture_torque: Some(6.0),
            buckling_force: None,
            insertion_depth_goal: 0.02,
            start_cube_half_extent: 0.025,
            nominal_start: Vec3::new(0.0, 0.0, 0.03),
            obstacle_count: 0,
            grid_cells: 0,
            cell_size: 0.0,
            obstacle_thickness: 0.0,
            granular_drag: 0.0,
            retention_force: 0.0,
            retention_length: 0.0,
            tip_offset: Vec3::new(0.0, 0.0, -0.15),
            lever: LeverConfig::new(Vec3::new(0.0, 0.0, -0.10), Vec3::new(0.0, 1.0, 0.0)).expect("unit axis"),
            fingertip_rotation: Rotation3::about_z(std::f64::consts::PI),
            grasp_preload: Vec3::ZERO,
            skin_drift_rate: 0.02,
            max_step: 0.005,
            dt: 0.02,
            time_limit: 20.0,
        }
    }

    /// Key insertion with the lock fixed and the gripper pre-aligned to
    /// within about a millimeter, used for demonstration collection.
    pub fn key_prealigned() -> Self {
        Self {
            start_cube_half_extent: 0.001,
            nominal_start: Vec3::new(0.0, 0.0, 0.006),
            time_limit: 6.0,
            ..Self::key()
        }
    }

    pub fn usb() -> Self {
        Self {
            task_kind: TaskKind::UsbInsertion,
            clearance: 0.0003,
            chamfer: 0.0015,
            fracture_torque: None,
            insertion_depth_goal: 0.012,
            start_cube_half_extent: 0.05,
            nominal_start: Vec3::new(0.0, 0.0, 0.06),
            retention_force: 8.0,
            retention_length: 0.002,
            tip_offset: Vec3::new(0.0, 0.0, -0.14),
            lever: LeverConfig::new(Vec3::new(0.0, 0.0, -0.10), Vec3::new(0.0, 1.0, 0.0)).expect("unit axis"),
            ..Self::key()
        }
    }

    pub fn spaghetti() -> Self {
        Self {
            task_kind: TaskKind::SpaghettiProbing,
            clearance: 0.05,
            chamfer: 0.0,
            fracture_torque: Some(0.3),
            buckling_force: Some(4.0),
            insertion_depth_goal: 0.08,
            start_cube_half_extent: 0.02,
            nominal_start: Vec3::new(0.0, 0.0, 0.03),
            obstacle_count: 6,
            grid_cells: 5,
            cell_size: 0.02,
            obstacle_thickness: 0.015,
            granular_drag: 0.5,
            tip_offset: Vec3::new(0.0, 0.0, -0.20),
            lever: LeverConfig::new(Vec3::new(0.0, 0.0, -0.10), Vec3::new(0.0, 1.0, 0.0)).expect("unit axis"),
            time_limit: 30.0,
            ..Self::key()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn pos(name: &'static str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::param(name, format!("must be > 0, got {v}")))
            }
        }
        fn nonneg(name: &'static str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ConfigError::param(name, format!("must be >= 0, got {v}")))
            }
        }
        pos("clearance", self.clearance)?;
        nonneg("chamfer", self.chamfer)?;
        pos("wall_stiffness", self.wall_stiffness)?;
        if !(0.0..=1.5).contains(&self.friction_mu) {
            return Err(ConfigError::param("friction_mu", "must be in [0, 1.5]"));
        }
        if let Some(t) = self.fracture_torque {
            pos("fracture_torque", t)?;
        }
        if let Some(b) = self.buckling_force {
            pos("buckling_force", b)?;
        }
        pos("insertion_depth_goal", self.insertion_depth_goal)?;
        nonneg("start_cube_half_extent", self.start_cube_half_extent)?;
        nonneg("granular_drag", self.granular_drag)?;
        nonneg("retention_force", self.retention_force)?;
        nonneg("retention_length", self.retention_length)?;
        nonneg("skin_drift_rate", self.skin_drift_rate)?;
        pos("max_step", self.max_step)?;
        pos("dt", self.dt)?;
        pos("time_limit", self.time_limit)?;
        self.lever.validate()?;
        Rotation3::from_rows(self.fingertip_rotation.rows())?;
        if !self.nominal_start.is_finite() || !self.tip_offset.is_finite() || !self.grasp_preload.is_finite() {
            return Err(ConfigError::param("nominal_start", "vectors must be finite"));
        }
        if self.task_kind == TaskKind::SpaghettiProbing {
            if self.grid_cells == 0 {
                return Err(ConfigError::param("grid_cells", "probing needs at least one column"));
            }
            pos("cell_size", self.cell_size)?;
            pos("obstacle_thickness", self.obstacle_thickness)?;
            if self.obstacle_count > self.grid_cells * self.grid_cells {
                return Err(ConfigError::param("obstacle_count", "more obstacles than grid cells"));
            }
        }
        Ok(())
    }

    /// Half-width of the probing container (m).
    pub fn container_half_width(&self) -> f64 {
        0.5 * self.grid_cells as f64 * self.cell_size
    }

    /// Sensor→device rotation that lays the world x–y plane on the device plane.
    pub fn default_device_rotation(&self) -> Rotation3 {
        self.fingertip_rotation
    }
}
