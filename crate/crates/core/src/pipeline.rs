//! End-to-end orchestration behind the command-line tool: configuration,
//! experiment generation, dataset assembly, evaluation and statistics.
//!
//! Experiment directory layout under `<output>/experiments/exp_NNNN/`:
//! `scene.json`, `meta.json`, `trajectory.txt`, `imu.txt`, `boxes.json`,
//! `frames/NNNNN_{rgb,instance,semantic}.png`, `frames/NNNNN_depth.pfm` and a
//! `done` marker holding the configuration hash.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{
    assemble_recipe, dataset_stats, write_assembly, Assembly, CocoDataset, DatasetError, DatasetRecipe, DatasetStats,
    Experiment,
};
use crate::detmetrics::{read_detections, threshold_report, EvalError, IouType, ThresholdReport};
use crate::explore::{
    derive_imu, imu_to_text, plan_exploration, random_free_start, voxelize, ExploreConfig, ExploreError, Trajectory,
};
use crate::geomesh::stl::read_stl_file;
use crate::geomesh::{Point, TriangleMesh, Vec3};
use crate::gtrender::{raster, CameraModel, RenderError, SceneRenderer};
use crate::mask::BBox;
use crate::procedural::icosahedron;
use crate::scenegen::{
    load_environment_manifest, sample_scene, AnimationTrack, AssetLibrary, Environment, HumanAsset, Scene,
    SceneConfig, SceneError, SceneRecord, SemanticClass,
};
use crate::seeding;
use crate::sensor::SensorError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("unknown recipe '{0}'")]
    UnknownRecipe(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("experiment {path} has not been generated with this configuration")]
    NotGenerated { path: String },
    #[error("experiment {experiment}: {message}")]
    Experiment { experiment: String, message: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl PipelineError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Usage(_) => "E_USAGE",
            PipelineError::Config { .. } => "E_CONFIG",
            PipelineError::UnknownRecipe(_) => "E_UNKNOWN_RECIPE",
            PipelineError::Io { .. } => "E_IO",
            PipelineError::NotGenerated { .. } => "E_NOT_GENERATED",
            PipelineError::Experiment { .. } => "E_EXPERIMENT",
            PipelineError::Invariant(_) => "E_INVARIANT",
            PipelineError::Dataset(DatasetError::InvariantViolation(_)) => "E_INVARIANT",
            PipelineError::Dataset(DatasetError::Frame { source, .. })
                if matches!(**source, DatasetError::InvariantViolation(_)) =>
            {
                "E_INVARIANT"
            }
            PipelineError::Dataset(DatasetError::Parse { .. }) => "E_PARSE",
            PipelineError::Dataset(_) => "E_DATASET",
            PipelineError::Eval(EvalError::Parse { .. }) => "E_PARSE",
            PipelineError::Eval(EvalError::UnknownImage { .. }) => "E_UNKNOWN_IMAGE",
            PipelineError::Eval(_) => "E_EVAL",
        }
    }

    /// 1 usage, 2 data error, 3 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self.code() {
            "E_USAGE" | "E_UNKNOWN_RECIPE" => 1,
            "E_INVARIANT" => 3,
            _ => 2,
        }
    }

    /// `error[CODE]: message` on one line.
    pub fn report_line(&self) -> String {
        format!("error[{}]: {}", self.code(), self.to_string().replace('\n', " "))
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    /// TOML environment manifest, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    /// Closed box room of this size, used when no manifest is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_room: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HumanSpec {
    Walker { height: f64, frames: usize, rate: f64 },
    /// One STL per animation frame, all with the same triangle list.
    StlSequence { frames: Vec<PathBuf>, rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectSpec {
    Icosahedron { radius: f64 },
    Stl { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetsSpec {
    pub humans: Vec<HumanSpec>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
}

impl Default for AssetsSpec {
    fn default() -> Self {
        AssetsSpec {
            humans: vec![HumanSpec::Walker {
                height: 1.75,
                frames: 24,
                rate: 24.0,
            }],
            objects: vec![ObjectSpec::Icosahedron { radius: 0.15 }],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub width: u32,
    pub height: u32,
    /// Horizontal field of view; ignored when `fx` is given.
    #[serde(default = "default_hfov")]
    pub hfov_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cy: Option<f64>,
}

fn default_hfov() -> f64 {
    90.0
}

impl CameraSpec {
    pub fn model(&self) -> Result<CameraModel, RenderError> {
        match self.fx {
            None => CameraModel::with_hfov(self.width, self.height, self.hfov_deg),
            Some(fx) => CameraModel::new(
                self.width,
                self.height,
                fx,
                self.fy.unwrap_or(fx),
                self.cx.unwrap_or(self.width as f64 / 2.0),
                self.cy.unwrap_or(self.height as f64 / 2.0),
            ),
        }
    }
}

/// The whole run in one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub seed: u64,
    pub experiments: usize,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_fps")]
    pub fps: f64,
    pub output: PathBuf,
    /// Worker threads; 0 uses all hardware threads.
    #[serde(default)]
    pub jobs: usize,
    pub environment: EnvironmentSpec,
    pub camera: CameraSpec,
    #[serde(default)]
    pub assets: AssetsSpec,
    #[serde(default)]
    pub scene: SceneConfig,
    #[serde(default)]
    pub explore: ExploreConfig,
    #[serde(default, rename = "recipe")]
    pub recipes: Vec<DatasetRecipe>,
}

fn default_duration() -> f64 {
    60.0
}

fn default_fps() -> f64 {
    30.0
}

/// Command-line values that replace file keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub experiments: Option<usize>,
    pub output: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, path: &str) -> Result<Self, PipelineError> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config {
            path: path.into(),
            message: e.to_string().replace('\n', " "),
        })?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.experiments {
            self.experiments = n;
        }
        if let Some(p) = &o.output {
            self.output = p.clone();
        }
        if let Some(j) = o.jobs {
            self.jobs = j;
        }
    }

    pub fn frame_count(&self) -> usize {
        (self.duration * self.fps).round() as usize
    }

    pub fn validate(&self, path: &str) -> Result<(), PipelineError> {
        let bad = |m: String| {
            Err(PipelineError::Config {
                path: path.into(),
                message: m,
            })
        };
        if self.version != CONFIG_VERSION {
            return bad(format!("version {} unsupported, expected {CONFIG_VERSION}", self.version));
        }
        if !(self.duration > 0.0 && self.fps > 0.0 && self.duration.is_finite() && self.fps.is_finite()) {
            return bad(format!("duration {} and fps {} must be positive", self.duration, self.fps));
        }
        let frames = self.duration * self.fps;
        if (frames - frames.round()).abs() > 1e-6 {
            return bad(format!("duration x fps = {frames} is not a whole number of frames"));
        }
        match (&self.environment.manifest, &self.environment.box_room) {
            (Some(_), Some(_)) | (None, None) => {
                return bad("environment needs exactly one of `manifest` or `box_room`".into())
            }
            _ => {}
        }
        if self.assets.humans.is_empty() {
            return bad("at least one human asset is required".into());
        }
        if let Err(e) = self.camera.model() {
            return bad(e.to_string());
        }
        if let Err(e) = self.explore.validate() {
            return bad(e.to_string());
        }
        let mut names = std::collections::HashSet::new();
        for r in &self.recipes {
            if !names.insert(&r.name) {
                return bad(format!("recipe '{}' defined twice", r.name));
            }
            if let Err(e) = r.validate() {
                return bad(e.to_string());
            }
        }
        Ok(())
    }

    /// Hash of everything that determines generated experiments.
    pub fn generation_hash(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            version: u32,
            seed: u64,
            duration: f64,
            fps: f64,
            environment: &'a EnvironmentSpec,
            camera: &'a CameraSpec,
            assets: &'a AssetsSpec,
            scene: &'a SceneConfig,
            explore: &'a ExploreConfig,
        }
        let key = Key {
            version: self.version,
            seed: self.seed,
            duration: self.duration,
            fps: self.fps,
            environment: &self.environment,
            camera: &self.camera,
            assets: &self.assets,
            scene: &self.scene,
            explore: &self.explore,
        };
        let digest = Sha256::digest(serde_json::to_vec(&key).expect("key serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMeta {
    pub name: String,
    pub index: u64,
    pub seed: u64,
    pub frames: usize,
    pub has_flying_objects: bool,
    pub humans: usize,
    pub flying_objects: usize,
    pub free_coverage: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FrameBoxes {
    frame: usize,
    instances: Vec<InstanceBox>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceBox {
    id: u32,
    class: Option<SemanticClass>,
    bbox: BBox,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenerateReport {
    pub generated: Vec<String>,
    pub skipped: Vec<String>,
}

/// A loaded configuration with its environment and asset library.
pub struct Pipeline {
    pub config: PipelineConfig,
    base_dir: PathBuf,
    environment: Arc<Environment>,
    library: AssetLibrary,
    camera: CameraModel,
    hash: String,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl Pipeline {
    pub fn load(path: impl AsRef<Path>, overrides: &Overrides) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut config = PipelineConfig::from_toml(&text, &path.display().to_string())?;
        config.apply(overrides);
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::new(config, base, &path.display().to_string())
    }

    /// `base_dir` anchors relative paths in the config.
    pub fn new(mut config: PipelineConfig, base_dir: PathBuf, origin: &str) -> Result<Self, PipelineError> {
        config.validate(origin)?;
        config.scene.duration = config.duration;
        let cfg_err = |m: String| PipelineError::Config {
            path: origin.into(),
            message: m,
        };
        let environment = match (&config.environment.manifest, config.environment.box_room) {
            (Some(m), _) => load_environment_manifest(resolve(&base_dir, m)).map_err(|e| cfg_err(e.to_string()))?,
            (None, Some(s)) => Environment::box_room("box-room", Vec3::new(s[0], s[1], s[2])),
            (None, None) => unreachable!("validated"),
        };
        let mut library = AssetLibrary::default();
        for h in &config.assets.humans {
            library.humans.push(match h {
                HumanSpec::Walker { height, frames, rate } => {
                    if !(*height > 0.0 && *frames > 0 && *rate > 0.0) {
                        return Err(cfg_err(format!("bad walker {h:?}")));
                    }
                    HumanAsset::walker("walker", *height, *frames, *rate)
                }
                HumanSpec::StlSequence { frames, rate } => {
                    let meshes = frames
                        .iter()
                        .map(|p| read_stl_file(resolve(&base_dir, p)).map_err(|e| cfg_err(format!("{}: {e}", p.display()))))
                        .collect::<Result<Vec<TriangleMesh>, _>>()?;
                    let base = meshes.first().ok_or_else(|| cfg_err("empty human sequence".into()))?.clone();
                    if meshes.iter().any(|m| m.triangles() != base.triangles()) {
                        return Err(cfg_err("human sequence frames must share one triangle list".into()));
                    }
                    let seq: Vec<Vec<Point>> = meshes.iter().map(|m| m.vertices().to_vec()).collect();
                    let track =
                        AnimationTrack::mesh_sequence(&base, seq, *rate, true).map_err(|e| cfg_err(e.to_string()))?;
                    HumanAsset::new(base, track)
                }
            });
        }
        for o in &config.assets.objects {
            library.objects.push(Arc::new(match o {
                ObjectSpec::Icosahedron { radius } if *radius > 0.0 => icosahedron("object", *radius),
                ObjectSpec::Icosahedron { radius } => return Err(cfg_err(format!("bad object radius {radius}"))),
                ObjectSpec::Stl { path } => {
                    read_stl_file(resolve(&base_dir, path)).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?
                }
            }));
        }
        let camera = config.camera.model().map_err(|e| cfg_err(e.to_string()))?;
        let hash = config.generation_hash();
        Ok(Pipeline {
            base_dir,
            environment: Arc::new(environment),
            library,
            camera,
            hash,
            config,
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        resolve(&self.base_dir, &self.config.output)
    }

    pub fn experiment_dir(&self, index: usize) -> PathBuf {
        self.output_dir().join("experiments").join(experiment_name(index))
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Runs `f` on a pool with the configured number of threads.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.jobs)
            .build()
            .map_err(|e| PipelineError::Usage(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }

    fn scene_for(&self, index: usize) -> Result<Scene, SceneError> {
        let seed = seeding::derive_seed(self.config.seed, "experiment", index as u64);
        sample_scene(self.environment.clone(), &self.library, seed, &self.config.scene)
    }

    fn is_done(&self, index: usize) -> bool {
        std::fs::read_to_string(self.experiment_dir(index).join("done")).is_ok_and(|h| h.trim() == self.hash)
    }

    /// Generates every experiment that lacks a matching completion marker.
    pub fn generate(&self) -> Result<GenerateReport, PipelineError> {
        let mut report = GenerateReport::default();
        for index in 0..self.config.experiments {
            let name = experiment_name(index);
            if self.is_done(index) {
                log::info!("{name}: up to date");
                report.skipped.push(name);
                continue;
            }
            self.install(|| self.generate_one(index))??;
            report.generated.push(name);
        }
        Ok(report)
    }

    fn generate_one(&self, index: usize) -> Result<(), PipelineError> {
        let name = experiment_name(index);
        let fail = |message: String| PipelineError::Experiment {
            experiment: name.clone(),
            message,
        };
        let dir = self.experiment_dir(index);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        let frames_dir = dir.join("frames");
        std::fs::create_dir_all(&frames_dir).map_err(|e| io_err(&frames_dir, e))?;

        let scene = self.scene_for(index).map_err(|e| fail(e.to_string()))?;
        let explore_err = |e: ExploreError| fail(e.to_string());
        let mut grid =
            voxelize(&self.environment, self.config.explore.cell_size, self.config.explore.max_cells).map_err(explore_err)?;
        for inst in scene.instances.iter().filter(|i| i.class == SemanticClass::Human) {
            let swept = inst.track.swept_mesh(&inst.base_mesh).map_err(|e| fail(e.to_string()))?;
            grid.mark_mesh(&swept.transformed(&inst.placement));
        }
        let start = random_free_start(&grid, &scene, scene.seed, &self.config.explore).map_err(explore_err)?;
        let exploration = plan_exploration(
            grid,
            &start,
            self.environment.floor_height(),
            self.config.duration,
            self.config.fps,
            &self.config.explore,
        )
        .map_err(explore_err)?;
        let coverage = exploration.free_coverage();
        let trajectory = exploration.trajectory;
        let imu = derive_imu(&trajectory).map_err(explore_err)?;

        let renderer = SceneRenderer::new(&scene, self.camera).map_err(|e| fail(e.to_string()))?;
        let (w, h) = (self.camera.width, self.camera.height);
        let boxes = trajectory
            .poses()
            .par_iter()
            .enumerate()
            .map(|(i, pose)| {
                let frame_fail = |e: &dyn std::fmt::Display| fail(format!("frame {i}: {e}"));
                let gt = renderer.render(i, pose, pose.t).map_err(|e| frame_fail(&e))?;
                for (id, b) in &gt.boxes {
                    let tight = gt.mask(*id).and_then(|m| m.bbox().ok());
                    if tight != Some(*b) {
                        return Err(PipelineError::Invariant(format!("{name} frame {i}: box of instance {id}")));
                    }
                }
                let stem = frames_dir.join(format!("{i:05}"));
                let path = |suffix: &str| PathBuf::from(format!("{}_{suffix}", stem.display()));
                raster::write_png_rgb(path("rgb.png"), w, h, &gt.rgb).map_err(|e| frame_fail(&e))?;
                raster::write_png_u16(path("instance.png"), w, h, &gt.instance_map).map_err(|e| frame_fail(&e))?;
                let semantic: Vec<u16> = gt.semantic_map.iter().map(|&s| s as u16).collect();
                raster::write_png_u16(path("semantic.png"), w, h, &semantic).map_err(|e| frame_fail(&e))?;
                raster::write_pfm(path("depth.pfm"), w, h, &gt.depth).map_err(|e| frame_fail(&e))?;
                Ok(FrameBoxes {
                    frame: i,
                    instances: gt
                        .boxes
                        .iter()
                        .map(|(id, bbox)| InstanceBox {
                            id: *id,
                            class: scene.class_of(*id),
                            bbox: *bbox,
                        })
                        .collect(),
                })
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;

        let meta = ExperimentMeta {
            name: name.clone(),
            index: index as u64,
            seed: scene.seed,
            frames: trajectory.len(),
            has_flying_objects: scene.has_flying_objects(),
            humans: scene.count(SemanticClass::Human),
            flying_objects: scene.count(SemanticClass::FlyingObject),
            free_coverage: coverage,
        };
        let write = |file: &str, text: String| {
            let p = dir.join(file);
            std::fs::write(&p, text).map_err(|e| io_err(&p, e))
        };
        write("scene.json", scene.to_record().to_json())?;
        write("meta.json", serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n")?;
        write("trajectory.txt", trajectory.to_text())?;
        write("imu.txt", imu_to_text(&imu))?;
        write("boxes.json", serde_json::to_string(&boxes).expect("boxes serialize") + "\n")?;
        write("done", format!("{}\n", self.hash))?;
        log::info!("{name}: {} frames", trajectory.len());
        Ok(())
    }

    /// Reloads a generated experiment: the scene is re-sampled from its seed
    /// and checked against `scene.json`; the trajectory is read back.
    pub fn load_experiment(&self, index: usize) -> Result<Experiment, PipelineError> {
        let dir = self.experiment_dir(index);
        if !self.is_done(index) {
            return Err(PipelineError::NotGenerated {
                path: dir.display().to_string(),
            });
        }
        let name = experiment_name(index);
        let read = |file: &str| {
            let p = dir.join(file);
            std::fs::read_to_string(&p).map_err(|e| io_err(&p, e))
        };
        let scene = self.scene_for(index).map_err(|e| PipelineError::Experiment {
            experiment: name.clone(),
            message: e.to_string(),
        })?;
        let recorded = SceneRecord::from_json(&read("scene.json")?).map_err(|e| PipelineError::Io {
            path: dir.join("scene.json").display().to_string(),
            message: e.to_string(),
        })?;
        if recorded != scene.to_record() {
            return Err(PipelineError::Invariant(format!("{name}: re-sampled scene differs from scene.json")));
        }
        let trajectory = Trajectory::from_text(&read("trajectory.txt")?).map_err(|e| PipelineError::Io {
            path: dir.join("trajectory.txt").display().to_string(),
            message: e.to_string(),
        })?;
        Ok(Experiment {
            name,
            index: index as u64,
            scene,
            trajectory,
            camera: self.camera,
        })
    }

    pub fn recipe(&self, name: &str) -> Result<&DatasetRecipe, PipelineError> {
        self.config
            .recipes
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| PipelineError::UnknownRecipe(name.into()))
    }

    /// Assembles `recipe` over all configured experiments and writes it to
    /// `out` (default `<output>/datasets/<recipe>`).
    pub fn assemble(&self, recipe: &str, out: Option<&Path>) -> Result<(Assembly, PathBuf), PipelineError> {
        let recipe = self.recipe(recipe)?.clone();
        let out = out
            .map(Path::to_path_buf)
            .unwrap_or_else(|| self.output_dir().join("datasets").join(&recipe.name));
        let experiments = (0..self.config.experiments)
            .map(|i| self.load_experiment(i))
            .collect::<Result<Vec<_>, _>>()?;
        let seed = seeding::derive_seed(self.config.seed, "assemble", 0);
        let assembly = self.install(|| assemble_recipe(&experiments, &recipe, seed))??;
        if out.exists() {
            std::fs::remove_dir_all(&out).map_err(|e| io_err(&out, e))?;
        }
        self.install(|| write_assembly(&assembly, &out))??;
        Ok((assembly, out))
    }
}

pub fn experiment_name(index: usize) -> String {
    format!("exp_{index:04}")
}

/// Evaluates a predictions file against a ground-truth COCO file and
/// optionally writes the report as JSON.
pub fn cmd_evaluate(
    gt: impl AsRef<Path>,
    predictions: impl AsRef<Path>,
    tasks: &[IouType],
    thresholds: &[f64],
    out: Option<&Path>,
) -> Result<ThresholdReport, PipelineError> {
    let gt = CocoDataset::read(gt)?;
    let dets = read_detections(predictions)?;
    let report = threshold_report(&gt, &dets, tasks, thresholds)?;
    if let Some(out) = out {
        let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
        std::fs::write(out, text).map_err(|e| io_err(out, e))?;
    }
    Ok(report)
}

/// Stats of a COCO file, or of `annotations/instances_{train,val}.json`
/// under a dataset directory (train, val, total).
pub fn cmd_stats(path: impl AsRef<Path>) -> Result<Vec<(String, DatasetStats)>, PipelineError> {
    let path = path.as_ref();
    if path.is_dir() {
        let mut rows = Vec::new();
        for split in ["train", "val"] {
            let d = CocoDataset::read(path.join("annotations").join(format!("instances_{split}.json")))?;
            rows.push((split.to_string(), dataset_stats(&d)));
        }
        let total = rows[0].1.clone() + rows[1].1.clone();
        rows.push(("all".into(), total));
        Ok(rows)
    } else {
        Ok(vec![(path.display().to_string(), dataset_stats(&CocoDataset::read(path)?))])
    }
}

/// Parses `"0.7,0.05"`.
pub fn parse_thresholds(text: &str) -> Result<Vec<f64>, PipelineError> {
    text.split(',')
        .map(|s| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| PipelineError::Usage(format!("bad threshold '{s}'")))?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(PipelineError::Usage(format!("threshold {v} outside [0, 1]")))
            }
        })
        .collect()
}

impl From<SensorError> for PipelineError {
    fn from(e: SensorError) -> Self {
        PipelineError::Dataset(e.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_config() -> &'static str {
        r#"
version = 1
seed = 7
experiments = 1
duration = 2.0
fps = 10.0
output = "out"

[environment]
box_room = [4.0, 4.0, 2.5]

[camera]
width = 32
height = 24

[[recipe]]
name = "s"
include_flying_objects = false
exposure = { mode = "fixed", value = 0.02 }
correct_annotations = false
train_fraction = 0.8
"#
    }

    #[test]
    fn config_parses_and_hashes() {
        let c = PipelineConfig::from_toml(sample_config(), "c.toml").unwrap();
        c.validate("c.toml").unwrap();
        assert_eq!(c.frame_count(), 20);
        let mut d = c.clone();
        d.jobs = 8;
        d.output = "elsewhere".into();
        assert_eq!(c.generation_hash(), d.generation_hash());
        d.seed = 8;
        assert_ne!(c.generation_hash(), d.generation_hash());
        let again = PipelineConfig::from_toml(&c.to_toml(), "c.toml").unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn config_rejections() {
        let c = PipelineConfig::from_toml(sample_config(), "c.toml").unwrap();
        let mut bad = c.clone();
        bad.version = 2;
        assert!(bad.validate("c").is_err());
        let mut bad = c.clone();
        bad.duration = 1.05;
        assert!(bad.validate("c").is_err());
        let mut bad = c;
        bad.environment.manifest = Some("x.toml".into());
        assert!(bad.validate("c").is_err());
        assert!(matches!(
            PipelineConfig::from_toml("version = 1\nbogus = 3", "c"),
            Err(PipelineError::Config { .. })
        ));
    }

    #[test]
    fn thresholds_and_codes() {
        assert_eq!(parse_thresholds("0.7,0.05").unwrap(), vec![0.7, 0.05]);
        assert!(parse_thresholds("0.7,x").is_err());
        assert!(parse_thresholds("1.5").is_err());
        assert_eq!(PipelineError::UnknownRecipe("x".into()).exit_code(), 1);
        assert_eq!(PipelineError::Invariant("x".into()).exit_code(), 3);
        let e = PipelineError::NotGenerated { path: "a\nb".into() };
        assert_eq!(e.exit_code(), 2);
        assert!(!e.report_line().contains('\n'));
        assert!(e.report_line().starts_with("error[E_NOT_GENERATED]: "));
    }
}
