use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;

use crate::explore::{Pose, Trajectory};
use crate::geomesh::{Bvh, TriangleMesh, Vec3};
use crate::mask::{BBox, InstanceMask};
use crate::scenegen::{Scene, SceneError};

use super::{CameraModel, RenderError};

/// Depth stored for pixels whose ray hits nothing.
pub const DEPTH_MISS: f32 = 1e30;

/// Deterministic flat color for a key, each channel in `[0.25, 1]`.
pub fn palette(key: u64) -> [f64; 3] {
    let mut z = key.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    let c = |shift: u32| 0.25 + 0.75 * ((z >> shift) & 0xff) as f64 / 255.0;
    [c(0), c(8), c(16)]
}

fn instance_color(id: u32) -> [f64; 3] {
    palette(0x1_0000_0000 | id as u64)
}

struct Geometry {
    mesh: TriangleMesh,
    bvh: Bvh,
}

impl Geometry {
    fn new(mesh: TriangleMesh) -> Option<Self> {
        let bvh = Bvh::build(&mesh).ok()?;
        Some(Geometry { mesh, bvh })
    }
}

struct InstanceGeometry {
    id: u16,
    class: u8,
    color: [f64; 3],
    geom: Geometry,
}

/// Instance geometry frozen at one point in time.
pub struct Snapshot {
    t: f64,
    instances: Vec<InstanceGeometry>,
}

impl Snapshot {
    pub fn time(&self) -> f64 {
        self.t
    }
}

/// Pixel rows produced by a render call, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRows {
    pub width: u32,
    pub rows: Range<u32>,
    pub instance: Vec<u16>,
    pub semantic: Vec<u8>,
    pub depth: Vec<f32>,
    /// Interleaved RGB.
    pub rgb: Vec<u8>,
}

impl RawRows {
    fn with_capacity(width: u32, rows: Range<u32>) -> Self {
        let n = width as usize * rows.len();
        RawRows {
            width,
            rows,
            instance: Vec::with_capacity(n),
            semantic: Vec::with_capacity(n),
            depth: Vec::with_capacity(n),
            rgb: Vec::with_capacity(3 * n),
        }
    }
}

/// Ray-casting ground-truth renderer over a static environment BVH plus
/// per-instance BVHs built at each requested time.
pub struct SceneRenderer<'a> {
    scene: &'a Scene,
    camera: CameraModel,
    env: Option<Geometry>,
    /// First union-mesh triangle of each static mesh.
    env_offsets: Vec<usize>,
    env_colors: Vec<[f64; 3]>,
    light: [f64; 3],
}

impl<'a> SceneRenderer<'a> {
    pub fn new(scene: &'a Scene, camera: CameraModel) -> Result<Self, RenderError> {
        camera.validate()?;
        if let Some(i) = scene.instances.iter().find(|i| i.id == 0 || i.id > u16::MAX as u32) {
            return Err(RenderError::TooManyInstances(i.id));
        }
        let env = &scene.environment;
        let mut env_offsets = Vec::with_capacity(env.meshes().len());
        let mut acc = 0;
        for m in env.meshes() {
            env_offsets.push(acc);
            acc += m.mesh.triangle_count();
        }
        let tex = &scene.appearance.texture_ids;
        let env_colors = (0..env.meshes().len())
            .map(|i| palette(tex.get(i).copied().unwrap_or(0) as u64))
            .collect();
        let a = &scene.appearance;
        let light = a.light_color.map(|c| c * a.light_intensity);
        Ok(SceneRenderer {
            scene,
            camera,
            env: Geometry::new(env.union_mesh(true)),
            env_offsets,
            env_colors,
            light,
        })
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    /// Builds the instance geometry at time `t`.
    pub fn snapshot(&self, t: f64) -> Result<Snapshot, RenderError> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(RenderError::OutOfRange { t, duration: f64::NAN });
        }
        let instances = self
            .scene
            .instances
            .par_iter()
            .map(|inst| {
                let mesh = inst.mesh_at(t).map_err(|e| match e {
                    SceneError::OutOfRange { t, duration } => RenderError::OutOfRange { t, duration },
                    e => RenderError::Scene(e),
                })?;
                Ok(Geometry::new(mesh).map(|geom| InstanceGeometry {
                    id: inst.id as u16,
                    class: inst.class.id(),
                    color: instance_color(inst.id),
                    geom,
                }))
            })
            .collect::<Result<Vec<_>, RenderError>>()?
            .into_iter()
            .flatten()
            .collect();
        Ok(Snapshot { t, instances })
    }

    fn env_color(&self, triangle: usize) -> [f64; 3] {
        let k = self.env_offsets.partition_point(|&o| o <= triangle) - 1;
        self.env_colors[k]
    }

    /// Renders `rows` of the image seen from `pose` with the instance state in
    /// `snap`. Rows are traced in parallel; the output does not depend on the
    /// schedule.
    pub fn render_rows(&self, snap: &Snapshot, pose: &Pose, rows: Range<u32>) -> RawRows {
        let rows = rows.start..rows.end.min(self.camera.height);
        let per_row: Vec<RawRows> = rows
            .clone()
            .into_par_iter()
            .map(|y| self.trace_row(snap, pose, y))
            .collect();
        let mut out = RawRows::with_capacity(self.camera.width, rows);
        for r in per_row {
            out.instance.extend(r.instance);
            out.semantic.extend(r.semantic);
            out.depth.extend(r.depth);
            out.rgb.extend(r.rgb);
        }
        out
    }

    fn trace_row(&self, snap: &Snapshot, pose: &Pose, y: u32) -> RawRows {
        let mut out = RawRows::with_capacity(self.camera.width, y..y + 1);
        for x in 0..self.camera.width {
            let (o, d) = self.camera.world_ray(pose, x, y);
            let mut best: Option<(f64, Vec3, [f64; 3], u16, u8)> = None;
            if let Some(env) = &self.env {
                if let Some(h) = env.bvh.ray_cast(&o, &d, f64::INFINITY) {
                    best = Some((h.t, env.mesh.normal(h.triangle), self.env_color(h.triangle), 0, 0));
                }
            }
            for inst in &snap.instances {
                let t_max = best.map_or(f64::INFINITY, |b| b.0);
                if let Some(h) = inst.geom.bvh.ray_cast(&o, &d, t_max) {
                    if best.is_none_or(|b| h.t < b.0) {
                        best = Some((h.t, inst.geom.mesh.normal(h.triangle), inst.color, inst.id, inst.class));
                    }
                }
            }
            match best {
                Some((t, n, base, id, class)) => {
                    let shade = n.dot(&(-d.normalize())).max(0.0);
                    out.instance.push(id);
                    out.semantic.push(class);
                    out.depth.push(t as f32);
                    for (b, l) in base.iter().zip(&self.light) {
                        out.rgb.push((b * l * shade * 255.0).round().clamp(0.0, 255.0) as u8);
                    }
                }
                None => {
                    out.instance.push(0);
                    out.semantic.push(0);
                    out.depth.push(DEPTH_MISS);
                    out.rgb.extend([0, 0, 0]);
                }
            }
        }
        out
    }

    /// Full ground truth for one frame.
    pub fn render(&self, frame: usize, pose: &Pose, t: f64) -> Result<FrameGroundTruth, RenderError> {
        let snap = self.snapshot(t)?;
        let raw = self.render_rows(&snap, pose, 0..self.camera.height);
        Ok(FrameGroundTruth::from_raw(frame, self.camera.height, raw))
    }
}

/// Something that can render image rows at a given time. The sensor models
/// are written against this so that tests can plug in synthetic imagery.
pub trait FrameSource: Sync {
    fn width(&self) -> u32;
    fn height(&self) -> u32;
    /// Valid time interval `[start, end]`.
    fn time_range(&self) -> (f64, f64);
    fn render_rows(&self, t: f64, rows: Range<u32>) -> Result<RawRows, RenderError>;
}

/// A scene seen along a trajectory.
pub struct TrajectorySource<'a> {
    pub renderer: &'a SceneRenderer<'a>,
    pub trajectory: &'a Trajectory,
}

impl FrameSource for TrajectorySource<'_> {
    fn width(&self) -> u32 {
        self.renderer.camera.width
    }

    fn height(&self) -> u32 {
        self.renderer.camera.height
    }

    fn time_range(&self) -> (f64, f64) {
        (0.0, self.trajectory.duration())
    }

    fn render_rows(&self, t: f64, rows: Range<u32>) -> Result<RawRows, RenderError> {
        let pose = self.trajectory.pose_at(t).map_err(|_| RenderError::OutOfRange {
            t,
            duration: self.trajectory.duration(),
        })?;
        let snap = self.renderer.snapshot(t)?;
        Ok(self.renderer.render_rows(&snap, &pose, rows))
    }
}

/// Per-frame ground truth. Maps are row-major, `width * height` long.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGroundTruth {
    pub frame: usize,
    pub width: u32,
    pub height: u32,
    pub instance_map: Vec<u16>,
    pub semantic_map: Vec<u8>,
    pub depth: Vec<f32>,
    pub rgb: Vec<u8>,
    /// Sorted by instance id; one entry per id present in the instance map.
    pub boxes: Vec<(u32, BBox)>,
    pub masks: Vec<(u32, InstanceMask)>,
}

impl FrameGroundTruth {
    pub fn from_raw(frame: usize, height: u32, raw: RawRows) -> Self {
        assert_eq!(raw.rows, 0..height, "ground truth needs every row");
        let masks = masks_from_instance_map(raw.width, height, &raw.instance);
        let boxes = masks
            .iter()
            .map(|(id, m)| (*id, m.bbox().expect("masks built from present ids are non-empty")))
            .collect();
        FrameGroundTruth {
            frame,
            width: raw.width,
            height,
            instance_map: raw.instance,
            semantic_map: raw.semantic,
            depth: raw.depth,
            rgb: raw.rgb,
            boxes,
            masks,
        }
    }

    pub fn mask(&self, id: u32) -> Option<&InstanceMask> {
        self.masks.iter().find(|(i, _)| *i == id).map(|(_, m)| m)
    }

    pub fn bbox(&self, id: u32) -> Option<BBox> {
        self.boxes.iter().find(|(i, _)| *i == id).map(|(_, b)| *b)
    }
}

/// One column-major RLE mask per non-zero id in `map`, sorted by id.
pub fn masks_from_instance_map(width: u32, height: u32, map: &[u16]) -> Vec<(u32, InstanceMask)> {
    let mut runs: BTreeMap<u16, Vec<(u64, u64)>> = BTreeMap::new();
    let h = height as u64;
    for x in 0..width as u64 {
        for y in 0..h {
            let id = map[(y * width as u64 + x) as usize];
            if id == 0 {
                continue;
            }
            let p = x * h + y;
            let r = runs.entry(id).or_default();
            match r.last_mut() {
                Some((s, l)) if *s + *l == p => *l += 1,
                _ => r.push((p, 1)),
            }
        }
    }
    runs.into_iter()
        .map(|(id, r)| (id as u32, InstanceMask::from_runs(width, height, &r)))
        .collect()
}

/// Tight box around the set pixels of a mask.
pub fn bbox_from_mask(mask: &InstanceMask) -> Result<BBox, RenderError> {
    Ok(mask.bbox()?)
}
