use crate::geomesh::{Point, Transform, TriangleMesh};

use super::SceneError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keyframe {
    pub time: f64,
    pub transform: Transform,
}

/// How an asset moves over time.
#[derive(Debug, Clone, PartialEq)]
pub enum AnimationTrack {
    /// Per-frame vertex arrays sharing the base mesh's triangle list, sampled at
    /// the nearest frame. A looping sequence never runs out.
    MeshSequence {
        frames: Vec<Vec<Point>>,
        rate: f64,
        looping: bool,
    },
    /// Timestamped transforms, interpolated linearly in position and
    /// spherically in rotation. The first key sits at `t = 0`.
    RigidKeyframes { keys: Vec<Keyframe> },
}

impl AnimationTrack {
    pub fn mesh_sequence(
        base: &TriangleMesh,
        frames: Vec<Vec<Point>>,
        rate: f64,
        looping: bool,
    ) -> Result<Self, SceneError> {
        if frames.is_empty() {
            return Err(SceneError::InvalidTrack("mesh sequence has no frames".into()));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(SceneError::InvalidTrack(format!("rate {rate} must be positive")));
        }
        let n = base.vertices().len();
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.len() != n) {
            return Err(SceneError::InvalidTrack(format!(
                "frame {i} has {} vertices, base mesh has {n}",
                f.len()
            )));
        }
        Ok(AnimationTrack::MeshSequence { frames, rate, looping })
    }

    pub fn rigid(keys: Vec<Keyframe>) -> Result<Self, SceneError> {
        match keys.first() {
            None => return Err(SceneError::InvalidTrack("no keyframes".into())),
            Some(k) if k.time != 0.0 => {
                return Err(SceneError::InvalidTrack("first keyframe must be at t = 0".into()))
            }
            _ => {}
        }
        if keys.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(SceneError::InvalidTrack("keyframe times must strictly increase".into()));
        }
        Ok(AnimationTrack::RigidKeyframes { keys })
    }

    pub fn duration(&self) -> f64 {
        match self {
            AnimationTrack::MeshSequence { looping: true, .. } => f64::INFINITY,
            AnimationTrack::MeshSequence { frames, rate, .. } => (frames.len() - 1) as f64 / rate,
            AnimationTrack::RigidKeyframes { keys } => keys.last().map_or(0.0, |k| k.time),
        }
    }

    fn check_time(&self, t: f64) -> Result<(), SceneError> {
        let duration = self.duration();
        if !(t >= 0.0 && t <= duration) {
            return Err(SceneError::OutOfRange { t, duration });
        }
        Ok(())
    }

    /// Index of the frame shown at time `t` (mesh sequences only).
    pub fn frame_index_at(&self, t: f64) -> Result<usize, SceneError> {
        self.check_time(t)?;
        match self {
            AnimationTrack::MeshSequence { frames, rate, looping } => {
                let raw = (t * rate).round() as usize;
                Ok(if *looping {
                    raw % frames.len()
                } else {
                    raw.min(frames.len() - 1)
                })
            }
            AnimationTrack::RigidKeyframes { .. } => Ok(0),
        }
    }

    /// Interpolated rigid transform at `t` (identity for mesh sequences).
    pub fn transform_at(&self, t: f64) -> Result<Transform, SceneError> {
        self.check_time(t)?;
        match self {
            AnimationTrack::MeshSequence { .. } => Ok(Transform::identity()),
            AnimationTrack::RigidKeyframes { keys } => {
                let next = keys.partition_point(|k| k.time <= t);
                if next == 0 {
                    return Ok(keys[0].transform);
                }
                if next == keys.len() {
                    return Ok(keys[keys.len() - 1].transform);
                }
                let (a, b) = (&keys[next - 1], &keys[next]);
                if t == a.time {
                    return Ok(a.transform);
                }
                let alpha = (t - a.time) / (b.time - a.time);
                Ok(a.transform.interpolate(&b.transform, alpha))
            }
        }
    }

    /// Local-frame geometry at `t`: the nearest frame snapshot for sequences,
    /// the base mesh under the interpolated transform for rigid tracks.
    pub fn local_mesh_at(&self, base: &TriangleMesh, t: f64) -> Result<TriangleMesh, SceneError> {
        match self {
            AnimationTrack::MeshSequence { frames, .. } => {
                let i = self.frame_index_at(t)?;
                Ok(base.with_vertices(frames[i].clone())?)
            }
            AnimationTrack::RigidKeyframes { .. } => Ok(base.transformed(&self.transform_at(t)?)),
        }
    }

    /// Union of the geometry over the whole track, in the local frame. For
    /// sequences every frame is included; rigid tracks return the base mesh.
    pub fn swept_mesh(&self, base: &TriangleMesh) -> Result<TriangleMesh, SceneError> {
        match self {
            AnimationTrack::MeshSequence { frames, .. } => {
                let mut out = TriangleMesh::empty(format!("{}_swept", base.name()));
                for f in frames {
                    out.append(&base.with_vertices(f.clone())?);
                }
                Ok(out)
            }
            AnimationTrack::RigidKeyframes { .. } => Ok(base.clone()),
        }
    }
}
