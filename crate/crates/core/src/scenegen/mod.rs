//! Randomized scenes: an environment with randomized appearance, animated humans
//! placed without collisions, and flying objects on random rigid paths.

mod placement;
mod record;
mod track;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geomesh::stl::StlError;
use crate::geomesh::{Aabb, Bvh, GeomError, Point, TriangleMesh, Vec3};
use crate::seeding;

pub use placement::{place_humans, spawn_flying_objects, PlacementConfig};
pub use record::{load_environment_manifest, EnvironmentManifest, ManifestMesh, SceneRecord};
pub use track::{AnimationTrack, Keyframe};

/// Label that marks a static mesh as walkable floor.
pub const FLOOR_LABEL: &str = "floor";

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("bad range: {0}")]
    BadRange(String),
    #[error("placement failed: placed {placed} of {requested} humans")]
    PlacementFailed { placed: usize, requested: usize },
    #[error("time {t} outside track duration {duration}")]
    OutOfRange { t: f64, duration: f64 },
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid animation track: {0}")]
    InvalidTrack(String),
    #[error("asset library has no {0}")]
    EmptyLibrary(&'static str),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Stl(#[from] StlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticClass {
    Human,
    FlyingObject,
}

impl SemanticClass {
    /// Value written in semantic maps; 0 is reserved for background.
    pub fn id(self) -> u8 {
        match self {
            SemanticClass::Human => 1,
            SemanticClass::FlyingObject => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticMesh {
    pub mesh: TriangleMesh,
    pub label: String,
}

impl StaticMesh {
    pub fn new(mesh: TriangleMesh, label: impl Into<String>) -> Self {
        StaticMesh {
            mesh,
            label: label.into(),
        }
    }

    pub fn is_floor(&self) -> bool {
        self.label == FLOOR_LABEL
    }
}

#[derive(Debug, Clone)]
pub struct Environment {
    id: String,
    meshes: Vec<StaticMesh>,
    bounds: Aabb,
    floor_height: f64,
}

impl Environment {
    /// Validates that `bounds` (default: the meshes' bounds) holds every vertex
    /// An environment without
    /// meshes is an empty volume and needs explicit bounds.
    pub fn new(
        id: impl Into<String>,
        meshes: Vec<StaticMesh>,
        floor_height: f64,
        bounds: Option<Aabb>,
    ) -> Result<Self, SceneError> {
        let mesh_bounds = meshes
            .iter()
            .fold(Aabb::empty(), |acc, m| acc.union(&m.mesh.bounds()));
        let bounds = match bounds {
            Some(b) => b,
            None if mesh_bounds.is_empty() => {
                return Err(SceneError::InvalidEnvironment(
                    "an environment without meshes needs explicit bounds".into(),
                ))
            }
            None => mesh_bounds,
        };
        if bounds.is_empty() {
            return Err(SceneError::InvalidEnvironment("empty bounds".into()));
        }
        if !bounds.expanded(1e-9).contains(&mesh_bounds) {
            return Err(SceneError::InvalidEnvironment(
                "bounds do not contain all static mesh vertices".into(),
            ));
        }
        if !(floor_height >= bounds.min.z && floor_height <= bounds.max.z) {
            return Err(SceneError::InvalidEnvironment(format!(
                "floor height {floor_height} outside bounds"
            )));
        }
        Ok(Environment {
            id: id.into(),
            meshes,
            bounds,
            floor_height,
        })
    }

    /// Closed box room `[0, size]` with single-sided quads for floor, ceiling and walls.
    pub fn box_room(id: impl Into<String>, size: Vec3) -> Self {
        Self::box_room_with(id, size, Vec::new())
    }

    /// Box room plus extra static meshes (furniture), which must lie inside it.
    pub fn box_room_with(id: impl Into<String>, size: Vec3, extra: Vec<StaticMesh>) -> Self {
        use crate::procedural::quad_mesh;
        let (x, y, z) = (size.x, size.y, size.z);
        let p = Point::new;
        let mut meshes = vec![
            StaticMesh::new(quad_mesh("floor", [p(0., 0., 0.), p(x, 0., 0.), p(x, y, 0.), p(0., y, 0.)]), FLOOR_LABEL),
            StaticMesh::new(quad_mesh("ceiling", [p(0., 0., z), p(0., y, z), p(x, y, z), p(x, 0., z)]), "ceiling"),
            StaticMesh::new(quad_mesh("wall_south", [p(0., 0., 0.), p(0., 0., z), p(x, 0., z), p(x, 0., 0.)]), "wall"),
            StaticMesh::new(quad_mesh("wall_north", [p(0., y, 0.), p(x, y, 0.), p(x, y, z), p(0., y, z)]), "wall"),
            StaticMesh::new(quad_mesh("wall_west", [p(0., 0., 0.), p(0., y, 0.), p(0., y, z), p(0., 0., z)]), "wall"),
            StaticMesh::new(quad_mesh("wall_east", [p(x, 0., 0.), p(x, 0., z), p(x, y, z), p(x, y, 0.)]), "wall"),
        ];
        meshes.extend(extra);
        let bounds = Aabb::new(Point::origin(), Point::from(size));
        Environment::new(id, meshes, 0.0, Some(bounds)).expect("box room is a valid environment")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn meshes(&self) -> &[StaticMesh] {
        &self.meshes
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn floor_height(&self) -> f64 {
        self.floor_height
    }

    pub fn triangle_count(&self) -> usize {
        self.meshes.iter().map(|m| m.mesh.triangle_count()).sum()
    }

    /// Union of all static meshes, optionally leaving out floors.
    pub fn union_mesh(&self, include_floor: bool) -> TriangleMesh {
        TriangleMesh::merged(
            format!("{}_union", self.id),
            self.meshes
                .iter()
                .filter(|m| include_floor || !m.is_floor())
                .map(|m| &m.mesh),
        )
    }

    /// BVH over everything a standing human may not touch (all but floors).
    pub fn obstacle_bvh(&self) -> Option<Bvh> {
        let u = self.union_mesh(false);
        (!u.is_empty()).then(|| Bvh::build(&u).expect("non-empty"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppearanceRanges {
    /// Texture ids are drawn from `0..texture_count`.
    pub texture_count: u32,
    /// Per-channel light color range within `[0, 1]`.
    pub light_color: [f64; 2],
    pub light_intensity: [f64; 2],
}

impl Default for AppearanceRanges {
    fn default() -> Self {
        AppearanceRanges {
            texture_count: 64,
            light_color: [0.6, 1.0],
            light_intensity: [0.7, 1.3],
        }
    }
}

impl AppearanceRanges {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.texture_count == 0 {
            return Err(SceneError::BadRange("texture_count must be positive".into()));
        }
        let [lo, hi] = self.light_color;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(SceneError::BadRange(format!("light_color [{lo}, {hi}] not within [0, 1]")));
        }
        let [lo, hi] = self.light_intensity;
        if !(0.0 <= lo && lo <= hi && hi.is_finite()) {
            return Err(SceneError::BadRange(format!("light_intensity [{lo}, {hi}]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppearanceRandomization {
    /// One texture id per static mesh, in environment order.
    pub texture_ids: Vec<u32>,
    pub light_color: [f64; 3],
    pub light_intensity: f64,
}

impl AppearanceRandomization {
    /// White light at unit intensity, texture 0 everywhere.
    pub fn neutral(env: &Environment) -> Self {
        AppearanceRandomization {
            texture_ids: vec![0; env.meshes().len()],
            light_color: [1.0; 3],
            light_intensity: 1.0,
        }
    }
}

fn uniform(rng: &mut impl Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Texture ids and light parameters, fully determined by `(seed, env.id())`.
pub fn randomize_environment(
    env: &Environment,
    seed: u64,
    ranges: &AppearanceRanges,
) -> Result<AppearanceRandomization, SceneError> {
    ranges.validate()?;
    let mut rng = seeding::stream(seed, &format!("appearance/{}", env.id()), 0);
    let texture_ids = env
        .meshes()
        .iter()
        .map(|_| rng.random_range(0..ranges.texture_count))
        .collect();
    let light_color = [
        uniform(&mut rng, ranges.light_color),
        uniform(&mut rng, ranges.light_color),
        uniform(&mut rng, ranges.light_color),
    ];
    let light_intensity = uniform(&mut rng, ranges.light_intensity);
    Ok(AppearanceRandomization {
        texture_ids,
        light_color,
        light_intensity,
    })
}

/// A placed, animated asset.
#[derive(Debug, Clone)]
pub struct AssetInstance {
    pub id: u32,
    pub class: SemanticClass,
    pub base_mesh: Arc<TriangleMesh>,
    pub track: Arc<AnimationTrack>,
    pub placement: crate::geomesh::Transform,
}

impl AssetInstance {
    /// World-space geometry at time `t`.
    pub fn mesh_at(&self, t: f64) -> Result<TriangleMesh, SceneError> {
        let local = self.track.local_mesh_at(&self.base_mesh, t)?;
        Ok(local.transformed(&self.placement))
    }
}

pub fn instance_mesh_at(instance: &AssetInstance, t: f64) -> Result<TriangleMesh, SceneError> {
    instance.mesh_at(t)
}

/// An animated human asset: frame-0 mesh plus its animation.
#[derive(Debug, Clone)]
pub struct HumanAsset {
    pub mesh: Arc<TriangleMesh>,
    pub track: Arc<AnimationTrack>,
}

impl HumanAsset {
    pub fn new(mesh: TriangleMesh, track: AnimationTrack) -> Self {
        HumanAsset {
            mesh: Arc::new(mesh),
            track: Arc::new(track),
        }
    }

    /// Procedural walker looping at `rate` Hz.
    pub fn walker(name: &str, height: f64, frames: usize, rate: f64) -> Self {
        let (base, seq) = crate::procedural::walker(name, height, frames);
        let track = AnimationTrack::mesh_sequence(&base, seq, rate, true).expect("walker frames match");
        HumanAsset::new(base, track)
    }
}

#[derive(Debug, Clone, Default)]
pub struct AssetLibrary {
    pub humans: Vec<HumanAsset>,
    pub objects: Vec<Arc<TriangleMesh>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    /// Inclusive range of human counts.
    pub humans: [usize; 2],
    /// Inclusive range of flying-object counts.
    pub objects: [usize; 2],
    /// Flying-object speed range, m/s.
    pub object_speed: [f64; 2],
    /// Experiment length the tracks must cover, seconds.
    pub duration: f64,
    pub appearance: AppearanceRanges,
    pub placement: PlacementConfig,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            humans: [1, 3],
            objects: [0, 3],
            object_speed: [0.3, 1.5],
            duration: 60.0,
            appearance: AppearanceRanges::default(),
            placement: PlacementConfig::default(),
        }
    }
}

/// The randomized world of one experiment.
#[derive(Debug, Clone)]
pub struct Scene {
    pub environment: Arc<Environment>,
    pub appearance: AppearanceRandomization,
    pub instances: Vec<AssetInstance>,
    pub seed: u64,
}

impl Scene {
    /// The bare environment: neutral appearance, no instances.
    pub fn static_scene(env: Arc<Environment>) -> Self {
        Scene {
            appearance: AppearanceRandomization::neutral(&env),
            environment: env,
            instances: Vec::new(),
            seed: 0,
        }
    }

    pub fn instance(&self, id: u32) -> Option<&AssetInstance> {
        // ids are 1..=N in order
        self.instances.get((id as usize).checked_sub(1)?).filter(|i| i.id == id)
    }

    pub fn class_of(&self, id: u32) -> Option<SemanticClass> {
        self.instance(id).map(|i| i.class)
    }

    pub fn has_flying_objects(&self) -> bool {
        self.instances.iter().any(|i| i.class == SemanticClass::FlyingObject)
    }

    pub fn count(&self, class: SemanticClass) -> usize {
        self.instances.iter().filter(|i| i.class == class).count()
    }
}

fn draw_count(rng: &mut impl Rng, [lo, hi]: [usize; 2], what: &str) -> Result<usize, SceneError> {
    if lo > hi {
        return Err(SceneError::BadRange(format!("{what} count range [{lo}, {hi}]")));
    }
    Ok(rng.random_range(lo..=hi))
}

/// Draws the human and object counts, then randomizes appearance, places
/// humans and spawns flying objects, each from its own seed stream.
pub fn sample_scene(
    env: Arc<Environment>,
    library: &AssetLibrary,
    seed: u64,
    config: &SceneConfig,
) -> Result<Scene, SceneError> {
    let mut rng = seeding::stream(seed, "counts", 0);
    let n_humans = draw_count(&mut rng, config.humans, "human")?;
    let n_objects = draw_count(&mut rng, config.objects, "object")?;
    let appearance = randomize_environment(&env, seed, &config.appearance)?;
    for h in &library.humans {
        if h.track.duration() < config.duration {
            return Err(SceneError::InvalidTrack(format!(
                "human track '{}' lasts {} s, experiment needs {} s",
                h.mesh.name(),
                h.track.duration(),
                config.duration
            )));
        }
    }
    let mut instances = place_humans(
        &env,
        &library.humans,
        n_humans,
        seeding::derive_seed(seed, "humans", 0),
        &config.placement,
    )?;
    instances.extend(spawn_flying_objects(
        &env,
        &library.objects,
        n_objects,
        seeding::derive_seed(seed, "objects", 0),
        config.object_speed,
        config.duration,
        n_humans as u32 + 1,
    )?);
    Ok(Scene {
        environment: env,
        appearance,
        instances,
        seed,
    })
}
