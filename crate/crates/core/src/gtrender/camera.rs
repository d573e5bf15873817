use serde::{Deserialize, Serialize};

use crate::explore::Pose;
use crate::geomesh::{Point, Vec3};

use super::RenderError;

/// Pinhole intrinsics in pixels. Pixel `(x, y)` is sampled at its center
/// `(x + 0.5, y + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraModel {
    pub fn new(width: u32, height: u32, fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, RenderError> {
        let cam = CameraModel {
            width,
            height,
            fx,
            fy,
            cx,
            cy,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Principal point at the image center, square pixels, given horizontal
    /// field of view.
    pub fn with_hfov(width: u32, height: u32, hfov_deg: f64) -> Result<Self, RenderError> {
        if !(hfov_deg > 0.0 && hfov_deg < 180.0) {
            return Err(RenderError::InvalidCamera(format!("horizontal fov {hfov_deg}")));
        }
        let f = width as f64 / 2.0 / (hfov_deg.to_radians() / 2.0).tan();
        Self::new(width, height, f, f, width as f64 / 2.0, height as f64 / 2.0)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::InvalidCamera(format!("size {}x{}", self.width, self.height)));
        }
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(RenderError::InvalidCamera(format!("focal lengths {} {}", self.fx, self.fy)));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(RenderError::InvalidCamera("principal point".into()));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Optical-frame ray (x right, y down, z forward) through a pixel center,
    /// scaled to unit z so that the hit parameter equals z-depth.
    pub fn optical_ray(&self, px: u32, py: u32) -> Vec3 {
        Vec3::new(
            (px as f64 + 0.5 - self.cx) / self.fx,
            (py as f64 + 0.5 - self.cy) / self.fy,
            1.0,
        )
    }

    /// World-space ray origin and direction for a pixel seen from `pose`.
    pub fn world_ray(&self, pose: &Pose, px: u32, py: u32) -> (Point, Vec3) {
        (pose.position, pose.orientation * optical_to_body(&self.optical_ray(px, py)))
    }

    /// Projects a world point to continuous pixel coordinates and z-depth.
    /// Points at or behind the image plane return `None`.
    pub fn project(&self, pose: &Pose, p: &Point) -> Option<(f64, f64, f64)> {
        let body = pose.orientation.inverse_transform_vector(&(p - pose.position));
        let o = body_to_optical(&body);
        if o.z <= 0.0 {
            return None;
        }
        Some((self.fx * o.x / o.z + self.cx, self.fy * o.y / o.z + self.cy, o.z))
    }
}

/// Optical (x right, y down, z forward) to body (x forward, y left, z up).
pub fn optical_to_body(v: &Vec3) -> Vec3 {
    Vec3::new(v.z, -v.x, -v.y)
}

pub fn body_to_optical(v: &Vec3) -> Vec3 {
    Vec3::new(-v.y, -v.z, v.x)
}
