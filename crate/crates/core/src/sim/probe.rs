//! Granular container with rigid obstacles for the probing task.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::contact::Contact;
use super::task::TaskConfig;
use crate::vec3::Vec3;

/// Axis-aligned rigid block filling one grid cell over a depth band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub cell: (usize, usize),
    pub min: Vec3,
    pub max: Vec3,
}

impl Obstacle {
    /// Smallest-penetration face contact for a point inside the block.
    pub fn contact(&self, p: Vec3) -> Option<Contact> {
        let inside = p.x > self.min.x
            && p.x < self.max.x
            && p.y > self.min.y
            && p.y < self.max.y
            && p.z > self.min.z
            && p.z < self.max.z;
        if !inside {
            return None;
        }
        let faces = [
            (self.max.z - p.z, Vec3::new(0.0, 0.0, 1.0)),
            (p.z - self.min.z, Vec3::new(0.0, 0.0, -1.0)),
            (self.max.x - p.x, Vec3::new(1.0, 0.0, 0.0)),
            (p.x - self.min.x, Vec3::new(-1.0, 0.0, 0.0)),
            (self.max.y - p.y, Vec3::new(0.0, 1.0, 0.0)),
            (p.y - self.min.y, Vec3::new(0.0, -1.0, 0.0)),
        ];
        let (penetration, normal) =
            faces.into_iter().fold((f64::INFINITY, Vec3::ZERO), |best, f| if f.0 < best.0 { f } else { best });
        Some(Contact { position: p, normal, penetration })
    }
}

/// Places `cfg.obstacle_count` blocks in distinct random cells, each with
/// its top somewhere between 20% and 70% of the container depth.
pub fn place_obstacles<R: Rng>(cfg: &TaskConfig, rng: &mut R) -> Vec<Obstacle> {
    let n = cfg.grid_cells;
    if n == 0 || cfg.obstacle_count == 0 {
        return Vec::new();
    }
    let half = cfg.container_half_width();
    let depth = cfg.insertion_depth_goal;
    let mut cells: Vec<usize> = sample(rng, n * n, cfg.obstacle_count).into_vec();
    cells.sort_unstable();
    cells
        .into_iter()
        .map(|idx| {
            let (i, j) = (idx % n, idx / n);
            let top = -depth * rng.gen_range(0.2..0.7);
            let x0 = -half + i as f64 * cfg.cell_size;
            let y0 = -half + j as f64 * cfg.cell_size;
            Obstacle {
                cell: (i, j),
                min: Vec3::new(x0, y0, top - cfg.obstacle_thickness),
                max: Vec3::new(x0 + cfg.cell_size, y0 + cfg.cell_size, top),
            }
        })
        .collect()
}

/// Grid cell containing a lateral position, if inside the container.
pub fn cell_of(cfg: &TaskConfig, p: Vec3) -> Option<(usize, usize)> {
    let half = cfg.container_half_width();
    let fx = (p.x + half) / cfg.cell_size;
    let fy = (p.y + half) / cfg.cell_size;
    let n = cfg.grid_cells as f64;
    if fx < 0.0 || fy < 0.0 || fx >= n || fy >= n {
        return None;
    }
    Some((fx as usize, fy as usize))
}

/// Granular drag magnitude at a given depth below the surface (N).
///
/// Grows linearly from `granular_drag` at the surface to twice that at
/// the container bottom.
pub fn granular_drag_at(cfg: &TaskConfig, depth: f64) -> f64 {
    if depth <= 0.0 {
        return 0.0;
    }
    cfg.granular_drag * (1.0 + (depth / cfg.insertion_depth_goal).min(1.0))
}

/// Depth-resolved resistance of the column under the probe tip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResistanceProfile {
    pub cell: Option<(usize, usize)>,
    /// (depth of top face, depth of bottom face) of blocks in this column (m, positive down).
    pub obstacles: Vec<(f64, f64)>,
    /// Sampled (depth, drag N) pairs from surface to bottom.
    pub drag: Vec<(f64, f64)>,
}

impl ResistanceProfile {
    /// First rigid stop below the surface, if any.
    pub fn first_obstacle_depth(&self) -> Option<f64> {
        self.obstacles.iter().map(|o| o.0).fold(None, |m, d| Some(m.map_or(d, |m: f64| m.min(d))))
    }
}

/// Column profile at the current lateral probe position.
pub fn probe_field(obstacles: &[Obstacle], p: Vec3, cfg: &TaskConfig) -> ResistanceProfile {
    let cell = cell_of(cfg, p);
    let obstacles = obstacles.iter().filter(|o| Some(o.cell) == cell).map(|o| (-o.max.z, -o.min.z)).collect();
    let steps = 16;
    let drag = (0..=steps)
        .map(|k| {
            let d = cfg.insertion_depth_goal * k as f64 / steps as f64;
            (d, granular_drag_at(cfg, d))
        })
        .collect();
    ResistanceProfile { cell, obstacles, drag }
}

/// Rigid contacts for the probe tip: obstacle blocks, container walls and floor.
pub fn contacts(cfg: &TaskConfig, obstacles: &[Obstacle], p: Vec3) -> Vec<Contact> {
    let mut out = Vec::new();
    if p.z >= 0.0 {
        return out;
    }
    let half = cfg.container_half_width();
    if p.x.abs() > half || p.y.abs() > half {
        // Outside the container: the tip rests on the rim.
        out.push(Contact { position: p, normal: Vec3::new(0.0, 0.0, 1.0), penetration: -p.z });
        return out;
    }
    for o in obstacles {
        if let Some(c) = o.contact(p) {
            out.push(c);
        }
    }
    if p.z < -cfg.insertion_depth_goal {
        out.push(Contact {
            position: p,
            normal: Vec3::new(0.0, 0.0, 1.0),
            penetration: -cfg.insertion_depth_goal - p.z,
        });
    }
    out
}
