//! Penalty point contacts for the insertion tasks.
//!
//! The hole is a square column of half-width `c` (the clearance) with a 45°
//! chamfer of width `w` around its opening at `z = 0` and a floor at the goal
//! depth. Whether the tip is inside the column is tracked across steps
//! (`engaged`): a tip that is jammed on the chamfer keeps being pushed out
//! through the chamfer face, never sideways through the column wall.

use serde::{Deserialize, Serialize};

use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub position: Vec3,
    /// Unit normal pointing out of the obstacle, into free space.
    pub normal: Vec3,
    /// Penetration depth along `normal` (m), > 0.
    pub penetration: f64,
}

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Geometry parameters of an insertion hole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleGeometry {
    pub clearance: f64,
    pub chamfer: f64,
    pub depth: f64,
}

impl HoleGeometry {
    pub fn in_column(&self, p: Vec3) -> bool {
        p.x.abs() <= self.clearance && p.y.abs() <= self.clearance
    }

    /// Decides whether the tip at `p` is inside the column, given whether it
    /// was on the previous step.
    pub fn next_engaged(&self, was_engaged: bool, p: Vec3) -> bool {
        if p.z >= 0.0 {
            false
        } else {
            was_engaged || self.in_column(p)
        }
    }

    pub fn contacts(&self, p: Vec3, engaged: bool) -> Vec<Contact> {
        let mut out = Vec::new();
        if p.z >= 0.0 {
            return out;
        }
        let c = self.clearance;
        let w = self.chamfer;
        if engaged {
            for (u, axis) in [(p.x, Vec3::new(1.0, 0.0, 0.0)), (p.y, Vec3::new(0.0, 1.0, 0.0))] {
                let a = u.abs();
                let outward = axis.scale(-u.signum());
                if p.z <= -w {
                    if a > c {
                        out.push(Contact { position: p, normal: outward, penetration: a - c });
                    }
                } else {
                    let pen = (a - c - w - p.z) * SQRT_HALF;
                    if pen > 0.0 {
                        let normal = (outward + Vec3::new(0.0, 0.0, 1.0)).scale(SQRT_HALF);
                        out.push(Contact { position: p, normal, penetration: pen });
                    }
                }
            }
            if p.z < -self.depth {
                out.push(Contact { position: p, normal: Vec3::new(0.0, 0.0, 1.0), penetration: -self.depth - p.z });
            }
        } else {
            let mut top = false;
            for (u, axis) in [(p.x, Vec3::new(1.0, 0.0, 0.0)), (p.y, Vec3::new(0.0, 1.0, 0.0))] {
                let a = u.abs();
                if a <= c {
                    continue;
                }
                let surface = a - c - w;
                if surface >= 0.0 {
                    top = true;
                } else if p.z < surface {
                    let outward = axis.scale(-u.signum());
                    let normal = (outward + Vec3::new(0.0, 0.0, 1.0)).scale(SQRT_HALF);
                    out.push(Contact { position: p, normal, penetration: (surface - p.z) * SQRT_HALF });
                }
            }
            if top {
                out.push(Contact { position: p, normal: Vec3::new(0.0, 0.0, 1.0), penetration: -p.z });
            }
        }
        out
    }
}
