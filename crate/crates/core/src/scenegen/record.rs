//! Scene audit records and environment manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geomesh::stl::read_stl_file;
use crate::geomesh::{Aabb, Point, Transform};

use super::{AnimationTrack, AppearanceRandomization, Environment, Scene, SceneError, SemanticClass, StaticMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    /// `[w, x, y, z]`
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
    pub scale: f64,
}

impl From<&Transform> for TransformRecord {
    fn from(t: &Transform) -> Self {
        let q = t.rotation().quaternion();
        TransformRecord {
            rotation: [q.w, q.i, q.j, q.k],
            translation: [t.translation().x, t.translation().y, t.translation().z],
            scale: t.scale(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeRecord {
    pub time: f64,
    pub transform: TransformRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrackRecord {
    MeshSequence {
        frames: usize,
        rate: f64,
        looping: bool,
    },
    RigidKeyframes {
        keys: Vec<KeyframeRecord>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: u32,
    pub class: SemanticClass,
    pub mesh: String,
    pub triangles: usize,
    pub placement: TransformRecord,
    pub track: TrackRecord,
}

/// Everything needed to audit a generated scene: seed, counts, placements and
/// keyframes. Meshes are referenced by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub seed: u64,
    pub environment: String,
    pub humans: usize,
    pub flying_objects: usize,
    pub appearance: AppearanceRandomization,
    pub instances: Vec<InstanceRecord>,
}

impl SceneRecord {
    pub fn from_scene(scene: &Scene) -> Self {
        let instances = scene
            .instances
            .iter()
            .map(|i| InstanceRecord {
                id: i.id,
                class: i.class,
                mesh: i.base_mesh.name().to_string(),
                triangles: i.base_mesh.triangle_count(),
                placement: (&i.placement).into(),
                track: match i.track.as_ref() {
                    AnimationTrack::MeshSequence { frames, rate, looping } => TrackRecord::MeshSequence {
                        frames: frames.len(),
                        rate: *rate,
                        looping: *looping,
                    },
                    AnimationTrack::RigidKeyframes { keys } => TrackRecord::RigidKeyframes {
                        keys: keys
                            .iter()
                            .map(|k| KeyframeRecord {
                                time: k.time,
                                transform: (&k.transform).into(),
                            })
                            .collect(),
                    },
                },
            })
            .collect();
        SceneRecord {
            seed: scene.seed,
            environment: scene.environment.id().to_string(),
            humans: scene.count(SemanticClass::Human),
            flying_objects: scene.count(SemanticClass::FlyingObject),
            appearance: scene.appearance.clone(),
            instances,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scene record serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl Scene {
    pub fn to_record(&self) -> SceneRecord {
        SceneRecord::from_scene(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestMesh {
    /// STL path, relative to the manifest's directory.
    pub path: PathBuf,
    pub label: String,
}

/// Environment manifest (TOML):
///
/// ```toml
/// id = "apartment-01"
/// floor_height = 0.0
/// bounds = [[0.0, 0.0, 0.0], [8.0, 6.0, 2.8]]   # optional
///
/// [[mesh]]
/// path = "floor.stl"
/// label = "floor"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentManifest {
    pub id: String,
    pub floor_height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[[f64; 3]; 2]>,
    #[serde(rename = "mesh", default)]
    pub meshes: Vec<ManifestMesh>,
}

pub fn load_environment_manifest(path: impl AsRef<Path>) -> Result<Environment, SceneError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))?;
    let manifest: EnvironmentManifest =
        toml::from_str(&text).map_err(|e| SceneError::Manifest(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let meshes = manifest
        .meshes
        .iter()
        .map(|m| Ok(StaticMesh::new(read_stl_file(dir.join(&m.path))?, m.label.clone())))
        .collect::<Result<Vec<_>, SceneError>>()?;
    let bounds = match manifest.bounds {
        Some([lo, hi]) if (0..3).any(|i| lo[i] > hi[i]) => {
            return Err(SceneError::Manifest(format!("{}: bounds min exceeds max", path.display())))
        }
        Some([lo, hi]) => Some(Aabb::new(Point::from(lo), Point::from(hi))),
        None => None,
    };
    Environment::new(manifest.id, meshes, manifest.floor_height, bounds)
}
