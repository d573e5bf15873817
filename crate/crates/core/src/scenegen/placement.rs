use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geomesh::{bvh_collide, Aabb, Bvh, Point, Transform, TriangleMesh, Vec3};
use crate::seeding;

use super::{AnimationTrack, AssetInstance, Environment, HumanAsset, Keyframe, SceneError, SemanticClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlacementConfig {
    /// Rejection-sampling budget per human.
    pub max_attempts: usize,
    /// Also reject humans whose swept volumes touch each other.
    pub reject_human_overlap: bool,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        PlacementConfig {
            max_attempts: 100,
            reject_human_overlap: true,
        }
    }
}

/// Places `count` humans by rejection sampling: uniform yaw, uniform floor
/// position such that the rotated asset stays inside the environment bounds,
/// feet on the floor. The asset's swept mesh (all animation frames) must not
/// touch any non-floor environment mesh nor, when enabled, another human.
///
/// Returned ids are `1..=count` in placement order.
pub fn place_humans(
    env: &Environment,
    assets: &[HumanAsset],
    count: usize,
    seed: u64,
    config: &PlacementConfig,
) -> Result<Vec<AssetInstance>, SceneError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if assets.is_empty() {
        return Err(SceneError::EmptyLibrary("human assets"));
    }
    let swept: Vec<TriangleMesh> = assets
        .iter()
        .map(|a| a.track.swept_mesh(&a.mesh))
        .collect::<Result<_, _>>()?;
    if let Some(i) = swept.iter().position(|m| m.is_empty()) {
        return Err(SceneError::InvalidTrack(format!("human asset {i} has no triangles")));
    }
    let obstacles = env.obstacle_bvh();
    let bounds = env.bounds();
    let mut placed_bvhs: Vec<Bvh> = Vec::with_capacity(count);
    let mut out = Vec::with_capacity(count);

    for k in 0..count {
        let mut rng = seeding::stream(seed, "human", k as u64);
        let which = rng.random_range(0..assets.len());
        let mut success = None;
        for _ in 0..config.max_attempts {
            let yaw = rng.random_range(0.0..TAU);
            let rotation = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw);
            let rotated = swept[which].transformed(&Transform::from_rotation_translation(rotation, Vec3::zeros()));
            let rb = rotated.bounds();
            let lift = env.floor_height() - rb.min.z;
            if rb.max.z + lift > bounds.max.z {
                continue;
            }
            let (Some(x), Some(y)) = (
                sample_axis(&mut rng, bounds.min.x - rb.min.x, bounds.max.x - rb.max.x),
                sample_axis(&mut rng, bounds.min.y - rb.min.y, bounds.max.y - rb.max.y),
            ) else {
                continue;
            };
            let placement = Transform::from_rotation_translation(rotation, Vec3::new(x, y, lift));
            let world = Bvh::build(&swept[which].transformed(&placement))?;
            if obstacles.as_ref().is_some_and(|o| bvh_collide(o, &world)) {
                continue;
            }
            if config.reject_human_overlap && placed_bvhs.iter().any(|p| bvh_collide(p, &world)) {
                continue;
            }
            success = Some((placement, world));
            break;
        }
        let Some((placement, world)) = success else {
            return Err(SceneError::PlacementFailed {
                placed: k,
                requested: count,
            });
        };
        placed_bvhs.push(world);
        out.push(AssetInstance {
            id: k as u32 + 1,
            class: SemanticClass::Human,
            base_mesh: Arc::clone(&assets[which].mesh),
            track: Arc::clone(&assets[which].track),
            placement,
        });
    }
    Ok(out)
}

fn sample_axis(rng: &mut impl Rng, lo: f64, hi: f64) -> Option<f64> {
    if lo > hi {
        None
    } else if lo == hi {
        Some(lo)
    } else {
        Some(rng.random_range(lo..=hi))
    }
}

/// Uniformly distributed rotation (Shoemake).
fn random_rotation(rng: &mut impl Rng) -> UnitQuaternion<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = nalgebra::Quaternion::new(
        b * (TAU * u3).cos(),
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
    );
    UnitQuaternion::new_normalize(q)
}

fn random_point(rng: &mut impl Rng, b: &Aabb) -> Point {
    Point::new(
        sample_axis(rng, b.min.x, b.max.x).unwrap(),
        sample_axis(rng, b.min.y, b.max.y).unwrap(),
        sample_axis(rng, b.min.z, b.max.z).unwrap(),
    )
}

/// Gives each object a piecewise-linear path through uniformly drawn waypoints
/// inside the environment bounds, one random orientation per waypoint and a
/// constant speed per segment drawn from `speed`. Collisions are not checked.
/// Paths extend to at least `duration`. Ids start at `first_id`.
pub fn spawn_flying_objects(
    env: &Environment,
    meshes: &[Arc<TriangleMesh>],
    count: usize,
    seed: u64,
    speed: [f64; 2],
    duration: f64,
    first_id: u32,
) -> Result<Vec<AssetInstance>, SceneError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let [vmin, vmax] = speed;
    if !(vmin > 0.0 && vmin <= vmax && vmax.is_finite()) {
        return Err(SceneError::BadRange(format!("object speed [{vmin}, {vmax}]")));
    }
    if meshes.is_empty() {
        return Err(SceneError::EmptyLibrary("object meshes"));
    }
    if let Some(m) = meshes.iter().find(|m| m.is_empty()) {
        return Err(SceneError::InvalidEnvironment(format!("object mesh '{}' is empty", m.name())));
    }
    let bounds = env.bounds();
    let min_step = 1e-3 * bounds.extent().norm().max(1e-9);
    (0..count)
        .map(|k| {
            let mut rng = seeding::stream(seed, "object", k as u64);
            let which = rng.random_range(0..meshes.len());
            let mut pos = random_point(&mut rng, bounds);
            let mut keys = vec![Keyframe {
                time: 0.0,
                transform: Transform::from_rotation_translation(random_rotation(&mut rng), pos.coords),
            }];
            let mut t = 0.0;
            while t < duration {
                let next = loop {
                    let p = random_point(&mut rng, bounds);
                    if (p - pos).norm() > min_step {
                        break p;
                    }
                };
                let v = sample_axis(&mut rng, vmin, vmax).unwrap();
                t += (next - pos).norm() / v;
                pos = next;
                keys.push(Keyframe {
                    time: t,
                    transform: Transform::from_rotation_translation(random_rotation(&mut rng), pos.coords),
                });
            }
            Ok(AssetInstance {
                id: first_id + k as u32,
                class: SemanticClass::FlyingObject,
                base_mesh: Arc::clone(&meshes[which]),
                track: Arc::new(AnimationTrack::rigid(keys)?),
                placement: Transform::identity(),
            })
        })
        .collect()
}
