use serde::{Deserialize, Serialize};

/// Spherical-cap lens standing on a horizontal base plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lens {
    /// Centre of the base disk, nm.
    pub base_center: [f64; 3],
    pub base_radius: f64,
    pub height: f64,
}

impl Lens {
    pub fn is_degenerate(&self) -> bool {
        self.base_radius <= 0.0 || self.height <= 0.0
    }

    /// Radius of the sphere the cap is cut from.
    pub fn sphere_radius(&self) -> f64 {
        (self.base_radius * self.base_radius + self.height * self.height) / (2.0 * self.height)
    }

    /// z of the sphere centre.
    pub fn sphere_center_z(&self) -> f64 {
        self.base_center[2] + self.height - self.sphere_radius()
    }

    /// Geometric centre used for profiles: half height above the base centre.
    pub fn center(&self) -> [f64; 3] {
        [
            self.base_center[0],
            self.base_center[1],
            self.base_center[2] + 0.5 * self.height,
        ]
    }

    pub fn apex(&self) -> [f64; 3] {
        [
            self.base_center[0],
            self.base_center[1],
            self.base_center[2] + self.height,
        ]
    }

    pub fn volume(&self) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        let (r, h) = (self.base_radius, self.height);
        std::f64::consts::PI * h * (3.0 * r * r + h * h) / 6.0
    }

    /// Strict interior test. Points on the surface are outside.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        if self.is_degenerate() {
            return false;
        }
        let dz = p[2] - self.base_center[2];
        if dz <= 0.0 || dz >= self.height {
            return false;
        }
        let dx = p[0] - self.base_center[0];
        let dy = p[1] - self.base_center[1];
        let zc = p[2] - self.sphere_center_z();
        let r = self.sphere_radius();
        dx * dx + dy * dy + zc * zc < r * r
    }

    /// Unsigned Euclidean distance from `p` to the lens surface
    /// (spherical cap plus base disk).
    pub fn distance_to_surface(&self, p: [f64; 3]) -> f64 {
        let dx = p[0] - self.base_center[0];
        let dy = p[1] - self.base_center[1];
        let dz = p[2] - self.base_center[2];
        let rho = (dx * dx + dy * dy).sqrt();
        let rb = self.base_radius.max(0.0);
        let rim = ((rho - rb).powi(2) + dz * dz).sqrt();

        let disk = if rho <= rb { dz.abs() } else { rim };
        if self.is_degenerate() {
            return disk;
        }

        // Nearest point on the full sphere; valid for the cap when it lies
        // on or above the base plane, else the rim is nearest.
        let r = self.sphere_radius();
        let zs = self.sphere_center_z() - self.base_center[2];
        let vz = dz - zs;
        let dist_c = (rho * rho + vz * vz).sqrt();
        let cap = if dist_c == 0.0 {
            r
        } else {
            let foot_z = zs + r * vz / dist_c;
            if foot_z >= 0.0 {
                (dist_c - r).abs()
            } else {
                rim
            }
        };
        disk.min(cap)
    }
}
