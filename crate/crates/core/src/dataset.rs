//! Dataset assembly: recipes over generated experiments, seeded train/val
//! splits, COCO export and counts.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explore::{derive_imu, Trajectory};
use crate::gtrender::{
    raster, CameraModel, FilterDecision, FrameSource, OcclusionFilter, RawRows, RenderError, SceneRenderer,
    TrajectorySource,
};
use crate::mask::{BBox, InstanceMask};
use crate::scenegen::{Scene, SemanticClass};
use crate::seeding;
use crate::sensor::{
    expose, finish_frame, imu_kernel_blur, instance_map_from_masks, sample_exposure, sample_readout, BlurConfig,
    BlurMode, ExposureModel, RollingShutterModel, SensorError,
};

pub const PERSON_CATEGORY: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("empty image list")]
    EmptyList,
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("experiment {experiment} frame {frame}: {source}")]
    Frame {
        experiment: String,
        frame: usize,
        source: Box<DatasetError>,
    },
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

fn io_err(path: &Path, e: impl fmt::Display) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// How a dataset is drawn from experiments and passed through the sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecipe {
    pub name: String,
    pub include_flying_objects: bool,
    pub exposure: ExposureModel,
    #[serde(default)]
    pub shutter: RollingShutterModel,
    #[serde(default)]
    pub blur: BlurConfig,
    pub correct_annotations: bool,
    /// Share of images assigned to train, in (0, 1].
    pub train_fraction: f64,
    /// Keep every n-th frame of each experiment.
    #[serde(default = "one")]
    pub frame_stride: usize,
    #[serde(default)]
    pub occlusion: OcclusionFilter,
}

fn one() -> usize {
    1
}

impl DatasetRecipe {
    /// No flying objects, fixed 0.02 s exposure, annotations left as rendered.
    pub fn s_style(name: impl Into<String>) -> Self {
        DatasetRecipe {
            name: name.into(),
            include_flying_objects: false,
            exposure: ExposureModel::Fixed { value: 0.02 },
            shutter: RollingShutterModel::default(),
            blur: BlurConfig::default(),
            correct_annotations: false,
            train_fraction: 16000.0 / 18000.0,
            frame_stride: 1,
            occlusion: OcclusionFilter::default(),
        }
    }

    /// Every experiment, uniform exposure in [0, 0.1] s, corrected annotations.
    pub fn a_style(name: impl Into<String>) -> Self {
        DatasetRecipe {
            name: name.into(),
            include_flying_objects: true,
            exposure: ExposureModel::Uniform { range: [0.0, 0.1] },
            shutter: RollingShutterModel::default(),
            blur: BlurConfig::default(),
            correct_annotations: true,
            train_fraction: 0.8,
            frame_stride: 1,
            occlusion: OcclusionFilter::default(),
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidRecipe(format!("{}: {m}", self.name)));
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return bad(format!("train fraction {} outside (0, 1]", self.train_fraction));
        }
        if self.frame_stride == 0 {
            return bad("frame stride must be positive".into());
        }
        self.exposure.validate()?;
        self.shutter.validate()?;
        self.blur.validate()?;
        self.occlusion.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub seed: u64,
    pub labels: BTreeMap<u64, Split>,
}

impl SplitAssignment {
    pub fn ids(&self, split: Split) -> impl Iterator<Item = u64> + '_ {
        self.labels.iter().filter(move |(_, s)| **s == split).map(|(id, _)| *id)
    }

    pub fn count(&self, split: Split) -> usize {
        self.ids(split).count()
    }
}

/// Shuffles `ids` with a seeded permutation; the first `floor(fraction * N)`
/// go to train.
pub fn split_dataset(ids: &[u64], fraction: f64, seed: u64) -> Result<SplitAssignment, DatasetError> {
    if ids.is_empty() {
        return Err(DatasetError::EmptyList);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DatasetError::InvalidRecipe(format!("train fraction {fraction} outside (0, 1]")));
    }
    let unique: BTreeSet<u64> = ids.iter().copied().collect();
    if unique.len() != ids.len() {
        return Err(DatasetError::InvariantViolation("duplicate image ids".into()));
    }
    let mut order: Vec<u64> = unique.into_iter().collect();
    order.shuffle(&mut seeding::stream(seed, "split", 0));
    // the epsilon keeps ratios like 16000/18000 from flooring one short
    let n_train = ((fraction * order.len() as f64) + 1e-9).floor() as usize;
    let labels = order
        .iter()
        .enumerate()
        .map(|(i, id)| (*id, if i < n_train { Split::Train } else { Split::Val }))
        .collect();
    Ok(SplitAssignment { seed, labels })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    /// Exposure the image was integrated over, s.
    pub exposure: f64,
    /// Rolling-shutter readout, s.
    pub readout: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocoRle {
    /// `[height, width]`.
    pub size: [u32; 2],
    pub counts: Vec<u32>,
}

impl CocoRle {
    pub fn from_mask(m: &InstanceMask) -> Self {
        CocoRle {
            size: [m.height(), m.width()],
            counts: m.counts().to_vec(),
        }
    }

    pub fn to_mask(&self) -> Result<InstanceMask, DatasetError> {
        InstanceMask::new(self.size[1], self.size[0], self.counts.clone())
            .map_err(|e| DatasetError::InvariantViolation(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u32,
    pub bbox: [f64; 4],
    pub segmentation: CocoRle,
    pub area: u64,
    pub iscrowd: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoDataset {
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

impl Default for CocoDataset {
    fn default() -> Self {
        CocoDataset {
            images: Vec::new(),
            annotations: Vec::new(),
            categories: vec![CocoCategory {
                id: PERSON_CATEGORY,
                name: "person".into(),
            }],
        }
    }
}

impl CocoDataset {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvariantViolation(m));
        let mut images = BTreeMap::new();
        for im in &self.images {
            if images.insert(im.id, im).is_some() {
                return bad(format!("duplicate image id {}", im.id));
            }
        }
        let categories: HashSet<u32> = self.categories.iter().map(|c| c.id).collect();
        let mut seen = HashSet::new();
        for a in &self.annotations {
            if !seen.insert(a.id) {
                return bad(format!("duplicate annotation id {}", a.id));
            }
            let Some(im) = images.get(&a.image_id) else {
                return bad(format!("annotation {} references missing image {}", a.id, a.image_id));
            };
            if !categories.contains(&a.category_id) {
                return bad(format!("annotation {} has unknown category {}", a.id, a.category_id));
            }
            if a.segmentation.size != [im.height, im.width] {
                return bad(format!("annotation {} mask size differs from its image", a.id));
            }
            let mask = a.segmentation.to_mask()?;
            if mask.area() != a.area {
                return bad(format!("annotation {} area {} but mask has {}", a.id, a.area, mask.area()));
            }
            let tight = mask
                .bbox()
                .map_err(|_| DatasetError::InvariantViolation(format!("annotation {} has an empty mask", a.id)))?;
            if tight.to_xywh() != a.bbox {
                return bad(format!("annotation {} bbox {:?} is not the mask bounds {:?}", a.id, a.bbox, tight));
            }
        }
        Ok(())
    }

    /// Compact JSON with a trailing newline; stable under parse and rewrite.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("dataset serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &str) -> Result<Self, DatasetError> {
        serde_json::from_str(text).map_err(|e| DatasetError::Parse {
            path: path.into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let d = Self::from_json(&text, &path.display().to_string())?;
        d.validate()?;
        Ok(d)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| io_err(path, e))
    }

    /// The images of one split with their annotations.
    pub fn subset(&self, split: &SplitAssignment, which: Split) -> CocoDataset {
        let keep: HashSet<u64> = split.ids(which).collect();
        CocoDataset {
            images: self.images.iter().filter(|i| keep.contains(&i.id)).cloned().collect(),
            annotations: self
                .annotations
                .iter()
                .filter(|a| keep.contains(&a.image_id))
                .cloned()
                .collect(),
            categories: self.categories.clone(),
        }
    }
}

/// A sensor-processed frame with its person annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedFrame {
    pub experiment: String,
    pub frame: usize,
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<u8>,
    pub exposure: f64,
    pub readout: f64,
    pub persons: Vec<(BBox, InstanceMask)>,
}

impl AnnotatedFrame {
    pub fn file_name(&self) -> String {
        format!("{}_{:05}.png", self.experiment, self.frame)
    }
}

/// Builds a dataset from frames in the given order. Image and annotation ids
/// count up from 1.
pub fn build_coco(frames: &[AnnotatedFrame]) -> Result<CocoDataset, DatasetError> {
    let mut d = CocoDataset::default();
    let mut ann_id = 0;
    for (i, f) in frames.iter().enumerate() {
        let image_id = i as u64 + 1;
        d.images.push(CocoImage {
            id: image_id,
            file_name: f.file_name(),
            width: f.width,
            height: f.height,
            exposure: f.exposure,
            readout: f.readout,
        });
        for (bbox, mask) in &f.persons {
            if mask.bbox().ok() != Some(*bbox) {
                return Err(DatasetError::InvariantViolation(format!(
                    "{}: bbox {bbox:?} does not bound its mask",
                    f.file_name()
                )));
            }
            ann_id += 1;
            d.annotations.push(CocoAnnotation {
                id: ann_id,
                image_id,
                category_id: PERSON_CATEGORY,
                bbox: bbox.to_xywh(),
                segmentation: CocoRle::from_mask(mask),
                area: mask.area(),
                iscrowd: 0,
            });
        }
    }
    d.validate()?;
    Ok(d)
}

/// Writes `images/<name>.png` and `annotations/instances_{train,val}.json`
/// under `out`, returning the two datasets.
pub fn export_coco(
    frames: &[AnnotatedFrame],
    split: &SplitAssignment,
    out: impl AsRef<Path>,
) -> Result<(CocoDataset, CocoDataset), DatasetError> {
    let out = out.as_ref();
    let all = build_coco(frames)?;
    let images = out.join("images");
    let annotations = out.join("annotations");
    for dir in [&images, &annotations] {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    frames.par_iter().try_for_each(|f| {
        raster::write_png_rgb(images.join(f.file_name()), f.width, f.height, &f.rgb).map_err(DatasetError::from)
    })?;
    let train = all.subset(split, Split::Train);
    let val = all.subset(split, Split::Val);
    train.write(annotations.join("instances_train.json"))?;
    val.write(annotations.join("instances_val.json"))?;
    Ok((train, val))
}

/// One generated experiment: the world, the camera path and the camera.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub index: u64,
    pub scene: Scene,
    pub trajectory: Trajectory,
    pub camera: CameraModel,
}

/// A trajectory source that holds the first and last state outside the
/// recorded interval, so exposure windows at the ends stay renderable.
struct HeldSource<'a>(TrajectorySource<'a>);

impl FrameSource for HeldSource<'_> {
    fn width(&self) -> u32 {
        self.0.width()
    }
    fn height(&self) -> u32 {
        self.0.height()
    }
    fn time_range(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn render_rows(&self, t: f64, rows: Range<u32>) -> Result<RawRows, RenderError> {
        let (a, b) = self.0.time_range();
        self.0.render_rows(t.clamp(a, b), rows)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyLog {
    pub experiments_used: Vec<String>,
    pub experiments_skipped: Vec<String>,
    pub frames_discarded: usize,
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub frames: Vec<AnnotatedFrame>,
    pub split: SplitAssignment,
    pub train: CocoDataset,
    pub val: CocoDataset,
    pub log: AssemblyLog,
}

/// Runs one experiment's frames through the occlusion filter and the
/// recipe's sensor model. `None` marks a discarded frame.
pub fn process_experiment(
    exp: &Experiment,
    recipe: &DatasetRecipe,
    seed: u64,
) -> Result<Vec<Option<AnnotatedFrame>>, DatasetError> {
    let renderer = SceneRenderer::new(&exp.scene, exp.camera)?;
    let source = HeldSource(TrajectorySource {
        renderer: &renderer,
        trajectory: &exp.trajectory,
    });
    let imu = match recipe.blur.mode {
        BlurMode::ImuKernel => Some(derive_imu(&exp.trajectory).map_err(|e| DatasetError::InvalidRecipe(e.to_string()))?),
        BlurMode::Rerender => None,
    };
    let sensor_seed = seeding::derive_seed(seed, "sensor", exp.index);
    let poses = exp.trajectory.poses();
    (0..poses.len())
        .step_by(recipe.frame_stride)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|i| {
            let wrap = |e: DatasetError| DatasetError::Frame {
                experiment: exp.name.clone(),
                frame: i,
                source: Box::new(e),
            };
            let pose = &poses[i];
            let gt = renderer.render(i, pose, pose.t).map_err(|e| wrap(e.into()))?;
            if let FilterDecision::Discard { .. } = recipe.occlusion.evaluate(&gt) {
                return Ok(None);
            }
            let e = sample_exposure(&recipe.exposure, sensor_seed, i as u64);
            let r = sample_readout(&recipe.shutter, sensor_seed, i as u64);
            let exposed = match &imu {
                None => expose(&source, pose.t, e, r, recipe.blur.subframes, recipe.shutter.slices),
                Some(imu) => expose(&source, pose.t, 0.0, r, 1, recipe.shutter.slices).and_then(|sharp| {
                    let ids = instance_map_from_masks(sharp.width, sharp.height, &sharp.subframe_masks[0]);
                    let mut out =
                        imu_kernel_blur(&exp.camera, &sharp.rgb, &ids, &imu[i].gyro, e, recipe.blur.subframes)?;
                    out.readout = r;
                    Ok(out)
                }),
            }
            .map_err(|e| wrap(e.into()))?;
            let noisy = finish_frame(exposed, recipe.correct_annotations, &gt.masks).map_err(|e| wrap(e.into()))?;
            let persons = noisy
                .masks
                .into_iter()
                .zip(noisy.boxes)
                .filter(|((id, _), _)| exp.scene.class_of(*id) == Some(SemanticClass::Human))
                .map(|((_, m), (_, b))| (b, m))
                .collect();
            Ok(Some(AnnotatedFrame {
                experiment: exp.name.clone(),
                frame: i,
                width: noisy.width,
                height: noisy.height,
                rgb: noisy.rgb,
                exposure: noisy.exposure,
                readout: noisy.readout,
                persons,
            }))
        })
        .collect()
}

/// Filters experiments by the recipe, processes them and splits the result.
/// Frames are ordered by (experiment, frame index). No surviving frames gives
/// an empty assembly.
pub fn assemble_recipe(
    experiments: &[Experiment],
    recipe: &DatasetRecipe,
    seed: u64,
) -> Result<Assembly, DatasetError> {
    recipe.validate()?;
    let mut log = AssemblyLog::default();
    let mut frames = Vec::new();
    for exp in experiments {
        if !recipe.include_flying_objects && exp.scene.has_flying_objects() {
            log.experiments_skipped.push(exp.name.clone());
            continue;
        }
        log.experiments_used.push(exp.name.clone());
        for f in process_experiment(exp, recipe, seed)? {
            match f {
                Some(f) => frames.push(f),
                None => log.frames_discarded += 1,
            }
        }
    }
    let all = build_coco(&frames)?;
    let ids: Vec<u64> = all.images.iter().map(|i| i.id).collect();
    let split = if ids.is_empty() {
        SplitAssignment {
            seed: seeding::derive_seed(seed, "split", 0),
            labels: BTreeMap::new(),
        }
    } else {
        split_dataset(&ids, recipe.train_fraction, seeding::derive_seed(seed, "split", 0))?
    };
    Ok(Assembly {
        train: all.subset(&split, Split::Train),
        val: all.subset(&split, Split::Val),
        frames,
        split,
        log,
    })
}

/// Writes an assembly under `out` (see [`export_coco`]) plus `stats.txt`.
pub fn write_assembly(assembly: &Assembly, out: impl AsRef<Path>) -> Result<PathBuf, DatasetError> {
    let out = out.as_ref();
    export_coco(&assembly.frames, &assembly.split, out)?;
    let stats = format!(
        "[train]\n{}[val]\n{}",
        dataset_stats(&assembly.train),
        dataset_stats(&assembly.val)
    );
    let path = out.join("stats.txt");
    std::fs::write(&path, stats).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub images: usize,
    pub with_humans: usize,
    pub background: usize,
    pub annotations: usize,
    /// Annotation count per image -> number of images.
    pub per_image: BTreeMap<usize, usize>,
}

impl std::ops::Add for DatasetStats {
    type Output = DatasetStats;

    fn add(mut self, rhs: DatasetStats) -> DatasetStats {
        self.images += rhs.images;
        self.with_humans += rhs.with_humans;
        self.background += rhs.background;
        self.annotations += rhs.annotations;
        for (k, v) in rhs.per_image {
            *self.per_image.entry(k).or_default() += v;
        }
        self
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "images {}", self.images)?;
        writeln!(f, "with_humans {}", self.with_humans)?;
        writeln!(f, "background {}", self.background)?;
        writeln!(f, "annotations {}", self.annotations)?;
        let hist: Vec<String> = self.per_image.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        writeln!(f, "per_image {}", hist.join(" "))
    }
}

pub fn dataset_stats(d: &CocoDataset) -> DatasetStats {
    let mut per: BTreeMap<u64, usize> = d.images.iter().map(|i| (i.id, 0)).collect();
    for a in &d.annotations {
        *per.entry(a.image_id).or_default() += 1;
    }
    let mut s = DatasetStats {
        images: d.images.len(),
        annotations: d.annotations.len(),
        ..Default::default()
    };
    for n in per.values() {
        if *n > 0 {
            s.with_humans += 1;
        } else {
            s.background += 1;
        }
        *s.per_image.entry(*n).or_default() += 1;
    }
    s
}
