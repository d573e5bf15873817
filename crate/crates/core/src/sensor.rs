//! Sensor effects on top of ideal renders: exposure-window motion blur,
//! rolling-shutter row timing, and annotation correction for the blur.
//!
//! Both effects are sampled by re-rendering: an exposure of `e` seconds is
//! approximated by `N` sub-renders and a readout of `r` seconds by `K` time
//! slices whose rows are taken from the nearest slice.

use std::ops::Range;

use rand_distr::{Distribution, Normal};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geomesh::Vec3;
use crate::gtrender::{body_to_optical, masks_from_instance_map, optical_to_body, CameraModel, FrameSource, RenderError};
use crate::mask::{BBox, InstanceMask, MaskError};
use crate::seeding;

/// Largest exposure accepted by default, s.
pub const EXPOSURE_CAP: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SensorError {
    #[error("invalid sensor model: {0}")]
    InvalidModel(String),
    #[error("time {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no subframes to correct")]
    NoSubframes,
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Render(#[from] RenderError),
}

impl From<MaskError> for SensorError {
    fn from(e: MaskError) -> Self {
        match e {
            MaskError::DimensionMismatch(m) => SensorError::DimensionMismatch(m),
            e => SensorError::InvariantViolation(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExposureModel {
    Fixed { value: f64 },
    Uniform { range: [f64; 2] },
}

impl Default for ExposureModel {
    fn default() -> Self {
        ExposureModel::Fixed { value: 0.02 }
    }
}

impl ExposureModel {
    pub fn validate(&self) -> Result<(), SensorError> {
        self.validate_with_cap(EXPOSURE_CAP)
    }

    pub fn validate_with_cap(&self, cap: f64) -> Result<(), SensorError> {
        let ok = match *self {
            ExposureModel::Fixed { value } => (0.0..=cap).contains(&value),
            ExposureModel::Uniform { range: [lo, hi] } => lo >= 0.0 && lo <= hi && hi <= cap,
        };
        if !ok {
            return Err(SensorError::InvalidModel(format!("exposure {self:?} outside [0, {cap}]")));
        }
        Ok(())
    }
}

/// Exposure for one frame; uniform draws depend only on `(seed, frame)`.
pub fn sample_exposure(model: &ExposureModel, seed: u64, frame: u64) -> f64 {
    match *model {
        ExposureModel::Fixed { value } => value,
        ExposureModel::Uniform { range: [lo, hi] } if lo == hi => lo,
        ExposureModel::Uniform { range: [lo, hi] } => {
            seeding::stream(seed, "exposure", frame).random_range(lo..=hi)
        }
    }
}

/// Per-frame readout duration drawn from `N(mu, sigma)` and clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RollingShutterModel {
    pub mu: f64,
    pub sigma: f64,
    /// Number of time slices the readout is rendered with.
    pub slices: usize,
}

impl Default for RollingShutterModel {
    fn default() -> Self {
        RollingShutterModel {
            mu: 0.015,
            sigma: 0.006,
            slices: 16,
        }
    }
}

impl RollingShutterModel {
    pub fn validate(&self) -> Result<(), SensorError> {
        if !(self.mu >= 0.0 && self.sigma >= 0.0 && self.mu.is_finite() && self.sigma.is_finite()) {
            return Err(SensorError::InvalidModel(format!("shutter mu {} sigma {}", self.mu, self.sigma)));
        }
        if self.slices == 0 {
            return Err(SensorError::InvalidModel("shutter slices must be positive".into()));
        }
        Ok(())
    }
}

pub fn sample_readout(model: &RollingShutterModel, seed: u64, frame: u64) -> f64 {
    if model.sigma == 0.0 {
        return model.mu.max(0.0);
    }
    let normal = Normal::new(model.mu, model.sigma).expect("validated shutter model");
    normal.sample(&mut seeding::stream(seed, "readout", frame)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlurMode {
    /// Average of re-rendered subframes.
    Rerender,
    /// Line kernel along the rotational pixel flow implied by the gyro.
    ImuKernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlurConfig {
    /// Odd number of samples across the exposure window.
    pub subframes: usize,
    pub mode: BlurMode,
}

impl Default for BlurConfig {
    fn default() -> Self {
        BlurConfig {
            subframes: 9,
            mode: BlurMode::Rerender,
        }
    }
}

impl BlurConfig {
    pub fn validate(&self) -> Result<(), SensorError> {
        if self.subframes == 0 || self.subframes.is_multiple_of(2) {
            return Err(SensorError::InvalidModel(format!("subframes {} must be odd", self.subframes)));
        }
        Ok(())
    }
}

/// Result of integrating a frame over its exposure and readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Exposure {
    pub width: u32,
    pub height: u32,
    /// Interleaved RGB, rounded mean over the subframes.
    pub rgb: Vec<u8>,
    /// Instance masks of every subframe, in time order.
    pub subframe_masks: Vec<Vec<(u32, InstanceMask)>>,
    pub exposure: f64,
    pub readout: f64,
}

impl Exposure {
    /// Masks of the middle subframe (exposure midpoint).
    pub fn mid_masks(&self) -> &[(u32, InstanceMask)] {
        &self.subframe_masks[self.subframe_masks.len() / 2]
    }
}

/// A sensor-realistic frame with annotations adjusted to the blur.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyFrame {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<u8>,
    pub masks: Vec<(u32, InstanceMask)>,
    pub boxes: Vec<(u32, BBox)>,
    pub exposure: f64,
    pub readout: f64,
}

fn subframe_offsets(exposure: f64, n: usize) -> Vec<f64> {
    if exposure == 0.0 || n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|k| exposure * (k as f64 / (n - 1) as f64 - 0.5))
        .collect()
}

/// Row ranges served by each of `k` slices, with the slice's fraction of the
/// readout. Row `r` uses the slice nearest to `r / (H - 1)`.
fn slice_rows(height: u32, k: usize) -> Vec<(Range<u32>, f64)> {
    if height <= 1 || k <= 1 {
        return vec![(0..height, 0.0)];
    }
    let nearest = |r: u32| ((r as f64 / (height - 1) as f64) * (k - 1) as f64).round() as usize;
    let mut out: Vec<(Range<u32>, f64)> = Vec::new();
    let mut start = 0;
    for r in 1..=height {
        if r == height || nearest(r) != nearest(start) {
            out.push((start..r, nearest(start) as f64 / (k - 1) as f64));
            start = r;
        }
    }
    out
}

/// Renders one frame through the sensor: `subframes` samples spread over the
/// exposure window, each assembled from `slices` rolling-shutter slices. Row
/// `r` of subframe `k` is rendered at
/// `t + exposure * (k / (N - 1) - 1/2) + readout * s(r)`, where `s(r)` is the
/// nearest slice fraction to `r / (H - 1)`.
pub fn expose(
    source: &dyn FrameSource,
    t: f64,
    exposure: f64,
    readout: f64,
    subframes: usize,
    slices: usize,
) -> Result<Exposure, SensorError> {
    if subframes == 0 || subframes.is_multiple_of(2) {
        return Err(SensorError::InvalidModel(format!("subframes {subframes} must be odd")));
    }
    if !(exposure >= 0.0 && exposure.is_finite() && readout >= 0.0 && readout.is_finite()) {
        return Err(SensorError::InvalidModel(format!("exposure {exposure}, readout {readout}")));
    }
    if slices == 0 {
        return Err(SensorError::InvalidModel("slices must be positive".into()));
    }
    let (w, h) = (source.width(), source.height());
    let offsets = subframe_offsets(exposure, subframes);
    let rows = if readout == 0.0 { vec![(0..h, 0.0)] } else { slice_rows(h, slices) };
    let (start, end) = source.time_range();
    let jobs: Vec<(usize, Range<u32>, f64)> = offsets
        .iter()
        .enumerate()
        .flat_map(|(k, off)| rows.iter().map(move |(r, frac)| (k, r.clone(), t + off + readout * frac)))
        .collect();
    for (_, _, tau) in &jobs {
        if !(*tau >= start - 1e-9 && *tau <= end + 1e-9) {
            return Err(SensorError::OutOfRange { t: *tau, start, end });
        }
    }
    let rendered = jobs
        .par_iter()
        .map(|(_, r, tau)| source.render_rows(tau.clamp(start, end), r.clone()))
        .collect::<Result<Vec<_>, _>>()?;

    let n = offsets.len();
    let px = w as usize * h as usize;
    let mut sums = vec![0u32; 3 * px];
    let mut ids = vec![vec![0u16; px]; n];
    for ((k, r, _), raw) in jobs.iter().zip(rendered) {
        if raw.width != w || raw.rows != *r {
            return Err(SensorError::DimensionMismatch(format!(
                "source returned rows {:?} of width {}, wanted {:?} of width {w}",
                raw.rows, raw.width, r
            )));
        }
        let a = r.start as usize * w as usize;
        for (s, v) in sums[3 * a..3 * a + raw.rgb.len()].iter_mut().zip(&raw.rgb) {
            *s += *v as u32;
        }
        ids[*k][a..a + raw.instance.len()].copy_from_slice(&raw.instance);
    }
    let n32 = n as u32;
    let rgb = sums.iter().map(|&s| ((s + n32 / 2) / n32) as u8).collect();
    let subframe_masks = ids.iter().map(|m| masks_from_instance_map(w, h, m)).collect();
    Ok(Exposure {
        width: w,
        height: h,
        rgb,
        subframe_masks,
        exposure,
        readout,
    })
}

/// Exposure-window blur without rolling shutter.
pub fn apply_motion_blur(
    source: &dyn FrameSource,
    t_mid: f64,
    exposure: f64,
    subframes: usize,
) -> Result<Exposure, SensorError> {
    expose(source, t_mid, exposure, 0.0, subframes, 1)
}

/// Rolling shutter without blur: row `r` is seen at `t + readout * r / (H - 1)`,
/// quantized to `slices` render times.
pub fn apply_rolling_shutter(
    source: &dyn FrameSource,
    t: f64,
    readout: f64,
    slices: usize,
) -> Result<Vec<u8>, SensorError> {
    Ok(expose(source, t, 0.0, readout, 1, slices)?.rgb)
}

/// Per instance, the union of its masks over all subframes, and the tight box
/// of that union. Instances absent from every subframe do not appear.
#[allow(clippy::type_complexity)]
pub fn correct_annotations(
    subframes: &[Vec<(u32, InstanceMask)>],
) -> Result<(Vec<(u32, InstanceMask)>, Vec<(u32, BBox)>), SensorError> {
    let first = subframes.iter().flatten().next();
    if subframes.is_empty() {
        return Err(SensorError::NoSubframes);
    }
    let mut merged: std::collections::BTreeMap<u32, InstanceMask> = Default::default();
    for (id, m) in subframes.iter().flatten() {
        if let Some((_, f)) = first {
            if (f.width(), f.height()) != (m.width(), m.height()) {
                return Err(SensorError::DimensionMismatch(format!(
                    "{}x{} vs {}x{}",
                    f.width(),
                    f.height(),
                    m.width(),
                    m.height()
                )));
            }
        }
        if m.is_empty() {
            continue;
        }
        let next = match merged.get(id) {
            Some(prev) => prev.union(m)?,
            None => m.clone(),
        };
        merged.insert(*id, next);
    }
    let masks: Vec<(u32, InstanceMask)> = merged.into_iter().collect();
    let boxes = masks
        .iter()
        .map(|(id, m)| Ok((*id, m.bbox()?)))
        .collect::<Result<_, MaskError>>()?;
    Ok((masks, boxes))
}

/// Turns an exposure into a noisy frame. With `correct`, annotations are the
/// subframe unions (checked to contain the mid-exposure masks); otherwise
/// `ideal` is kept as is.
pub fn finish_frame(
    exposed: Exposure,
    correct: bool,
    ideal: &[(u32, InstanceMask)],
) -> Result<NoisyFrame, SensorError> {
    let (masks, boxes) = if correct {
        let (masks, boxes) = correct_annotations(&exposed.subframe_masks)?;
        for (id, mid) in exposed.mid_masks() {
            let Some((_, m)) = masks.iter().find(|(i, _)| i == id) else {
                return Err(SensorError::InvariantViolation(format!("instance {id} lost by correction")));
            };
            if m.intersection_area(mid)? != mid.area() {
                return Err(SensorError::InvariantViolation(format!(
                    "corrected mask of instance {id} does not contain its mid-exposure mask"
                )));
            }
        }
        (masks, boxes)
    } else {
        for (_, m) in ideal {
            if (m.width(), m.height()) != (exposed.width, exposed.height) {
                return Err(SensorError::DimensionMismatch(format!(
                    "{}x{} mask for a {}x{} frame",
                    m.width(),
                    m.height(),
                    exposed.width,
                    exposed.height
                )));
            }
        }
        correct_annotations(&[ideal.to_vec()])?
    };
    Ok(NoisyFrame {
        width: exposed.width,
        height: exposed.height,
        rgb: exposed.rgb,
        masks,
        boxes,
        exposure: exposed.exposure,
        readout: exposed.readout,
    })
}

/// Paints masks back into a row-major instance map; later masks win.
pub fn instance_map_from_masks(width: u32, height: u32, masks: &[(u32, InstanceMask)]) -> Vec<u16> {
    let mut map = vec![0u16; width as usize * height as usize];
    for (id, m) in masks {
        for (start, len) in m.runs() {
            for p in start..start + len {
                let (x, y) = (p / height as u64, p % height as u64);
                map[(y * width as u64 + x) as usize] = *id as u16;
            }
        }
    }
    map
}

/// Blur by a per-pixel line kernel: the displacement each pixel undergoes
/// when the camera rotates at `gyro` (body frame, rad/s) for `exposure`
/// seconds around the capture time, with `samples` taps along the line. The
/// same taps are applied to the instance map to produce per-tap masks.
pub fn imu_kernel_blur(
    camera: &CameraModel,
    rgb: &[u8],
    instance: &[u16],
    gyro: &Vec3,
    exposure: f64,
    samples: usize,
) -> Result<Exposure, SensorError> {
    let (w, h) = (camera.width, camera.height);
    let px = camera.pixel_count();
    if rgb.len() != 3 * px || instance.len() != px {
        return Err(SensorError::DimensionMismatch(format!("buffers do not match a {w}x{h} camera")));
    }
    if samples == 0 || samples.is_multiple_of(2) {
        return Err(SensorError::InvalidModel(format!("samples {samples} must be odd")));
    }
    let offsets = subframe_offsets(exposure, samples);
    let rot = |dt: f64| nalgebra::UnitQuaternion::from_scaled_axis(gyro * dt);
    let n = offsets.len();
    let mut sums = vec![0u32; 3 * px];
    let mut ids = vec![vec![0u16; px]; n];
    for (k, dt) in offsets.iter().enumerate() {
        // pixel ray b at time dt looks along R(dt) b in the body frame at time 0
        let r = rot(*dt);
        for y in 0..h {
            for x in 0..w {
                let b = optical_to_body(&camera.optical_ray(x, y));
                let o = body_to_optical(&(r * b));
                let (sx, sy) = if o.z > 0.0 {
                    (camera.fx * o.x / o.z + camera.cx, camera.fy * o.y / o.z + camera.cy)
                } else {
                    (x as f64 + 0.5, y as f64 + 0.5)
                };
                let ux = sx.floor().clamp(0.0, (w - 1) as f64) as usize;
                let uy = sy.floor().clamp(0.0, (h - 1) as f64) as usize;
                let src = uy * w as usize + ux;
                let dst = y as usize * w as usize + x as usize;
                for c in 0..3 {
                    sums[3 * dst + c] += rgb[3 * src + c] as u32;
                }
                ids[k][dst] = instance[src];
            }
        }
    }
    let n32 = n as u32;
    Ok(Exposure {
        width: w,
        height: h,
        rgb: sums.iter().map(|&s| ((s + n32 / 2) / n32) as u8).collect(),
        subframe_masks: ids.iter().map(|m| masks_from_instance_map(w, h, m)).collect(),
        exposure,
        readout: 0.0,
    })
}
