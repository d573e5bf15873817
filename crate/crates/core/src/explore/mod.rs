//! Camera motion: an occupancy grid built from the environment, a greedy
//! frontier-exploration planner producing a fixed-rate trajectory, and IMU
//! readings derived from it.

mod grid;
mod imu;
mod planner;
mod trajectory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{triangle_box_overlap, voxelize, CellIndex, CellState, OccupancyGrid};
pub use imu::{derive_imu, imu_from_text, imu_to_text, ImuSample, GRAVITY};
pub use planner::{plan_exploration, random_free_start, Exploration, StartPose};
pub use trajectory::{Pose, SixDof, Trajectory};

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("grid of {cells} cells exceeds budget of {budget}")]
    GridTooLarge { cells: f64, budget: usize },
    #[error("no free space for the camera")]
    NoFreeSpace,
    #[error("trajectory has {poses} poses, need at least 3")]
    TooShort { poses: usize },
    #[error("time {t} outside trajectory range [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },
    #[error("invalid exploration config: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExploreConfig {
    /// Voxel edge length, m.
    pub cell_size: f64,
    /// Upper bound on the number of grid cells.
    pub max_cells: usize,
    /// Speed limit, m/s.
    pub v_max: f64,
    /// Sensing range, m.
    pub sensor_range: f64,
    /// Horizontal and vertical field of view, degrees.
    pub fov_deg: [f64; 2],
    /// Ray fan resolution (horizontal, vertical).
    pub sensor_rays: [usize; 2],
    pub pitch_deg: f64,
    pub roll_deg: f64,
    pub max_yaw_rate_deg: f64,
    /// Yaw rate while hovering with nothing left to explore.
    pub hover_yaw_rate_deg: f64,
    /// Minimum distance to occupied cells, in cells.
    pub clearance: usize,
    /// Allowed camera height above the floor, m.
    pub altitude: [f64; 2],
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            cell_size: 0.2,
            max_cells: 8_000_000,
            v_max: 1.0,
            sensor_range: 5.0,
            fov_deg: [90.0, 60.0],
            sensor_rays: [32, 24],
            pitch_deg: 0.0,
            roll_deg: 0.0,
            max_yaw_rate_deg: 90.0,
            hover_yaw_rate_deg: 15.0,
            clearance: 1,
            altitude: [0.4, 2.2],
        }
    }
}

impl ExploreConfig {
    pub fn validate(&self) -> Result<(), ExploreError> {
        let bad = |m: String| Err(ExploreError::InvalidConfig(m));
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return bad(format!("cell_size {}", self.cell_size));
        }
        if !(self.v_max >= 0.0 && self.v_max.is_finite()) {
            return bad(format!("v_max {}", self.v_max));
        }
        if !(self.sensor_range > 0.0 && self.sensor_range.is_finite()) {
            return bad(format!("sensor_range {}", self.sensor_range));
        }
        if self.fov_deg.iter().any(|f| !(*f >= 0.0 && *f < 360.0)) {
            return bad(format!("fov_deg {:?}", self.fov_deg));
        }
        if self.sensor_rays.contains(&0) {
            return bad("sensor_rays must be positive".into());
        }
        if !(self.max_yaw_rate_deg >= 0.0 && self.hover_yaw_rate_deg.is_finite()) {
            return bad("yaw rates".into());
        }
        if !(self.altitude[0] <= self.altitude[1]) {
            return bad(format!("altitude {:?}", self.altitude));
        }
        Ok(())
    }
}
