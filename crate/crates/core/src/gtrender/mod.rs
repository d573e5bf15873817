//! Per-frame geometric ground truth by ray casting: instance, semantic and
//! depth maps, a flat-shaded RGB proxy, and per-instance masks and boxes.

mod camera;
pub mod raster;
mod render;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::MaskError;
use crate::scenegen::{SceneError, SemanticClass};

pub use camera::{body_to_optical, optical_to_body, CameraModel};
pub use render::{
    bbox_from_mask, masks_from_instance_map, palette, FrameGroundTruth, FrameSource, RawRows, SceneRenderer,
    Snapshot, TrajectorySource, DEPTH_MISS,
};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("time {t} outside valid range (duration {duration})")]
    OutOfRange { t: f64, duration: f64 },
    #[error("instance id {0} does not fit a 16-bit instance map")]
    TooManyInstances(u32),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("raster format: {0}")]
    Format(String),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterDecision {
    Keep,
    /// `coverage` is the fraction of the image covered by close flying objects.
    Discard { coverage: f64 },
}

/// Drops frames where flying objects close to the camera cover too much of
/// the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OcclusionFilter {
    /// Depth below which a flying-object pixel counts as occluding, m.
    pub near: f64,
    /// Image fraction at or above which the frame is discarded.
    pub fraction: f64,
}

impl Default for OcclusionFilter {
    fn default() -> Self {
        OcclusionFilter {
            near: 1.0,
            fraction: 0.25,
        }
    }
}

impl OcclusionFilter {
    pub fn new(near: f64, fraction: f64) -> Result<Self, RenderError> {
        let f = OcclusionFilter { near, fraction };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.near > 0.0 && (0.0..=1.0).contains(&self.fraction)) {
            return Err(RenderError::Format(format!(
                "occlusion thresholds near {} fraction {}",
                self.near, self.fraction
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, frame: &FrameGroundTruth) -> FilterDecision {
        let flying = SemanticClass::FlyingObject.id();
        let close = frame
            .semantic_map
            .iter()
            .zip(&frame.depth)
            .filter(|&(&s, &d)| s == flying && (d as f64) < self.near)
            .count();
        let total = frame.width as usize * frame.height as usize;
        let coverage = close as f64 / total as f64;
        if close > 0 && coverage >= self.fraction {
            FilterDecision::Discard { coverage }
        } else {
            FilterDecision::Keep
        }
    }
}

/// Applies `filter` to one frame.
pub fn occlusion_filter(frame: &FrameGroundTruth, filter: &OcclusionFilter) -> FilterDecision {
    filter.evaluate(frame)
}
