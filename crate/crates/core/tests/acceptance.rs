//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod common;

use std::ops::Range;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use common::*;
use nalgebra::UnitQuaternion;
use rand::Rng;
use synthscene::dataset::*;
use synthscene::detmetrics::*;
use synthscene::explore::Pose;
use synthscene::geomesh::stl::{parse_stl, write_binary_stl};
use synthscene::geomesh::*;
use synthscene::gtrender::raster::{read_png_u16, read_pfm};
use synthscene::gtrender::*;
use synthscene::mask::{decode_rle, encode_rle, BBox, Bitmap};
use synthscene::pipeline::{Overrides, Pipeline};
use synthscene::procedural::quad_mesh;
use synthscene::scenegen::*;
use synthscene::sensor::*;

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

struct Cfg {
    seed: u64,
    experiments: usize,
    duration: f64,
    fps: f64,
    size: (u32, u32),
    humans: [usize; 2],
    objects: [usize; 2],
    recipe_extra: &'static str,
}

impl Cfg {
    fn toml(&self) -> String {
        let recipe = |name: &str, body: &str| format!("[[recipe]]\nname = \"{name}\"\n{body}{}\n", self.recipe_extra);
        format!(
            "version = 1\nseed = {}\nexperiments = {}\nduration = {}\nfps = {}\noutput = \"out\"\n\n\
             [environment]\nbox_room = [5.0, 4.0, 2.6]\n\n[camera]\nwidth = {}\nheight = {}\nhfov_deg = 90.0\n\n\
             [scene]\nhumans = [{}, {}]\nobjects = [{}, {}]\n\n{}{}",
            self.seed,
            self.experiments,
            self.duration,
            self.fps,
            self.size.0,
            self.size.1,
            self.humans[0],
            self.humans[1],
            self.objects[0],
            self.objects[1],
            recipe(
                "s",
                "include_flying_objects = false\nexposure = { mode = \"fixed\", value = 0.02 }\ncorrect_annotations = false\ntrain_fraction = 0.8\n"
            ),
            recipe(
                "a",
                "include_flying_objects = true\nexposure = { mode = \"uniform\", range = [0.0, 0.1] }\ncorrect_annotations = true\ntrain_fraction = 0.8\n"
            ),
        )
    }

    fn pipeline(&self, dir: &Path, overrides: &Overrides) -> Pipeline {
        std::fs::create_dir_all(dir).unwrap();
        let path = dir.join("config.toml");
        std::fs::write(&path, self.toml()).unwrap();
        Pipeline::load(&path, overrides).unwrap()
    }
}

fn all_images(a: &Assembly) -> impl Iterator<Item = &CocoImage> {
    a.train.images.iter().chain(&a.val.images)
}

fn pipeline_constants(root: &Path) -> Check {
    let cfg = Cfg {
        seed: 1,
        experiments: 1,
        duration: 60.0,
        fps: 30.0,
        size: (24, 18),
        humans: [1, 2],
        objects: [0, 0],
        recipe_extra: "frame_stride = 10\n",
    };
    let p = cfg.pipeline(&root.join("c1_long"), &Overrides::default());
    ensure!(p.config.frame_count() == 1800, "frame_count {}", p.config.frame_count());
    p.generate().map_err(|e| e.to_string())?;
    let exp = p.load_experiment(0).map_err(|e| e.to_string())?;
    let rgb = std::fs::read_dir(p.experiment_dir(0).join("frames"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with("_rgb.png"))
        .count();
    ensure!(exp.trajectory.len() == 1800 && rgb == 1800, "{} poses, {rgb} rgb frames", exp.trajectory.len());

    let (s, _) = p.assemble("s", None).map_err(|e| e.to_string())?;
    ensure!(all_images(&s).count() + s.log.frames_discarded == 180, "S kept {}", all_images(&s).count());
    ensure!(all_images(&s).all(|i| i.exposure == 0.02), "S exposure not 0.02");
    let (a, _) = p.assemble("a", None).map_err(|e| e.to_string())?;
    ensure!(all_images(&a).all(|i| (0.0..=0.1).contains(&i.exposure)), "A exposure outside [0, 0.1]");

    let model = RollingShutterModel::default();
    ensure!(model.mu == 0.015 && model.sigma == 0.006, "readout defaults {model:?}");
    let mean = (0..10_000u64).map(|i| sample_readout(&model, 99, i)).sum::<f64>() / 1e4;
    ensure!((0.013..=0.017).contains(&mean), "readout mean {mean}");

    let scaled = Cfg {
        seed: 2,
        experiments: 1,
        duration: 20.0,
        fps: 10.0,
        size: (160, 120),
        humans: [2, 3],
        objects: [1, 2],
        recipe_extra: "",
    };
    let start = Instant::now();
    let p = scaled.pipeline(&root.join("c1_scaled"), &Overrides::default());
    p.generate().map_err(|e| e.to_string())?;
    let (a, _) = p.assemble("a", None).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure!(all_images(&a).count() + a.log.frames_discarded == 200, "scaled run frames");
    ensure!(all_images(&a).all(|i| (0.0..=0.1).contains(&i.exposure)), "scaled A exposure");
    ensure!(secs < 60.0, "200-frame 160x120 run took {secs:.1} s");
    Ok(format!(
        "1800 frames; S exposure 0.02 on {} images; readout mean {mean:.5}; 200-frame 160x120 run {secs:.1} s",
        all_images(&s).count()
    ))
}

fn split_arithmetic() -> Check {
    let ids: Vec<u64> = (1..=18000).collect();
    let s = split_dataset(&ids, DatasetRecipe::s_style("s").train_fraction, 3).map_err(|e| e.to_string())?;
    let (tr, va) = (s.count(Split::Train), s.count(Split::Val));
    ensure!((tr, va) == (16000, 2000), "{tr}/{va}");
    for n in [1usize, 2, 5, 7, 10, 99, 1234, 18000] {
        let s = split_dataset(&ids[..n], 0.8, 0).map_err(|e| e.to_string())?;
        let want = (n * 4) / 5;
        ensure!(s.count(Split::Train) == want && s.count(Split::Val) == n - want, "N = {n}");
    }
    Ok(format!("18000 -> {tr}/{va}; 80/20 floors on 8 sizes"))
}

fn geometry_oracles() -> Check {
    let start = Instant::now();
    let mut r = rng(30);
    let meshes = [
        random_soup(&mut r, 200, Point::origin(), 4.0, 1.0),
        random_soup(&mut r, 500, Point::new(0.5, 0.0, 0.0), 3.0, 0.5),
        random_soup(&mut r, 50, Point::origin(), 2.0, 1.5),
    ];
    let (mut rays, mut hits) = (0, 0);
    for (k, mesh) in meshes.iter().enumerate() {
        let bvh = Bvh::build(mesh).map_err(|e| e.to_string())?;
        let tris: Vec<[Point; 3]> = mesh.triangle_points().collect();
        for _ in 0..if k == 0 { 3334 } else { 3333 } {
            let o = Point::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
            let d = unit_dir(&mut r);
            let got = bvh.ray_cast(&o, &d, 20.0);
            let want = brute_ray(&o, &d, &tris, 20.0);
            rays += 1;
            match (got, want) {
                (None, None) => {}
                (Some(g), Some((t, _))) => {
                    hits += 1;
                    ensure!((g.t - t).abs() <= 1e-9 * t.abs().max(1e-300), "t {} vs {t}", g.t);
                }
                _ => return Err(format!("hit parity differs for ray {o:?} {d:?}")),
            }
        }
    }
    let mut collide = [0usize; 2];
    for _ in 0..100 {
        let (na, nb) = (r.random_range(1..=50), r.random_range(1..=50));
        let a = random_soup(&mut r, na, Point::origin(), 1.0, 0.6);
        let b = random_soup(&mut r, nb, Point::origin(), 1.0, 0.6);
        let tb = Transform::from_rotation_translation(
            UnitQuaternion::from_euler_angles(r.random(), r.random(), r.random()),
            Vec3::new(r.random_range(0.0..1.8), r.random_range(-0.3..0.3), 0.0),
        );
        let got = meshes_collide(&a, &Transform::identity(), &b, &tb).map_err(|e| e.to_string())?;
        let want = brute_meshes_collide(&a, &b.transformed(&tb));
        ensure!(got == want, "collision disagreement");
        collide[want as usize] += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1} s");
    Ok(format!(
        "{rays} rays ({hits} hits) agree; 100 pairs agree ({} colliding); {secs:.2} s",
        collide[1]
    ))
}

fn tight_bounds(w: u32, h: u32, map: &[u16], id: u16) -> Option<BBox> {
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
    for y in 0..h {
        for x in 0..w {
            if map[(y * w + x) as usize] == id {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    (x0 != u32::MAX).then(|| BBox {
        x: x0,
        y: y0,
        w: x1 - x0 + 1,
        h: y1 - y0 + 1,
    })
}

fn dynamic_cfg() -> Cfg {
    Cfg {
        seed: 4,
        experiments: 1,
        duration: 10.0,
        fps: 10.0,
        size: (96, 72),
        humans: [2, 3],
        objects: [2, 3],
        recipe_extra: "",
    }
}

fn ground_truth_exactness(root: &Path) -> Check {
    let p = Point::new;
    let square = quad_mesh("sq", [p(2.0, 0.5, -0.5), p(2.0, -0.5, -0.5), p(2.0, -0.5, 0.5), p(2.0, 0.5, 0.5)]);
    let key = |time| Keyframe {
        time,
        transform: Transform::identity(),
    };
    let bounds = Aabb::new(p(-10.0, -10.0, -10.0), p(10.0, 10.0, 10.0));
    let mut scene = Scene::static_scene(Arc::new(Environment::new("void", vec![], 0.0, Some(bounds)).unwrap()));
    scene.instances.push(AssetInstance {
        id: 1,
        class: SemanticClass::Human,
        base_mesh: Arc::new(square),
        track: Arc::new(AnimationTrack::rigid(vec![key(0.0), key(1.0)]).unwrap()),
        placement: Transform::identity(),
    });
    let cam = CameraModel::new(200, 200, 100.0, 100.0, 100.0, 100.0).unwrap();
    let pose = Pose {
        t: 0.0,
        position: Point::origin(),
        orientation: UnitQuaternion::identity(),
    };
    let gt = SceneRenderer::new(&scene, cam).unwrap().render(0, &pose, 0.0).map_err(|e| e.to_string())?;
    let b = gt.bbox(1).ok_or("square not rendered")?;
    ensure!(b.w.abs_diff(50) <= 1 && b.h.abs_diff(50) <= 1, "square box {b:?}");
    ensure!(tight_bounds(200, 200, &gt.instance_map, 1) == Some(b), "square box not tight");

    let pl = dynamic_cfg().pipeline(&root.join("c4"), &Overrides::default());
    pl.generate().map_err(|e| e.to_string())?;
    let dir = pl.experiment_dir(0);
    let boxes: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("boxes.json")).unwrap()).unwrap();
    let frames = boxes.as_array().ok_or("boxes.json is not a list")?;
    ensure!(frames.len() == 100, "{} frames", frames.len());
    let (mut checked_boxes, mut checked_px, mut violations) = (0, 0, 0);
    for (i, f) in frames.iter().enumerate() {
        let stem = dir.join(format!("frames/{i:05}"));
        let (w, h, ids) = read_png_u16(format!("{}_instance.png", stem.display())).map_err(|e| e.to_string())?;
        let (_, _, sem) = read_png_u16(format!("{}_semantic.png", stem.display())).map_err(|e| e.to_string())?;
        let (_, _, depth) = read_pfm(format!("{}_depth.pfm", stem.display())).map_err(|e| e.to_string())?;
        let mut present: Vec<u16> = ids.iter().copied().filter(|&i| i != 0).collect();
        present.sort();
        present.dedup();
        let listed = f["instances"].as_array().ok_or("instances")?;
        if listed.len() != present.len() {
            violations += 1;
        }
        for inst in listed {
            let id = inst["id"].as_u64().ok_or("id")? as u16;
            let bbox: BBox = serde_json::from_value(inst["bbox"].clone()).map_err(|e| e.to_string())?;
            checked_boxes += 1;
            if tight_bounds(w, h, &ids, id) != Some(bbox) {
                violations += 1;
            }
        }
        for (k, &id) in ids.iter().enumerate() {
            let want = if id == 0 { 0 } else { class_id(f, id) };
            checked_px += 1;
            if sem[k] != want || (id != 0 && !(depth[k] > 0.0)) {
                violations += 1;
            }
        }
    }
    ensure!(violations == 0, "{violations} violations");
    ensure!(checked_boxes > 100, "only {checked_boxes} boxes rendered");
    Ok(format!(
        "square {}x{} px; 100 frames, {checked_boxes} boxes, {checked_px} pixels, 0 violations",
        b.w, b.h
    ))
}

fn class_id(frame: &serde_json::Value, id: u16) -> u16 {
    let inst = frame["instances"].as_array().and_then(|l| l.iter().find(|i| i["id"].as_u64() == Some(id as u64)));
    match inst.and_then(|i| i["class"].as_str()) {
        Some("human") => SemanticClass::Human.id() as u16,
        Some("flying_object") => SemanticClass::FlyingObject.id() as u16,
        _ => u16::MAX,
    }
}

/// Holds the first/last state outside the trajectory.
struct Held<'a>(TrajectorySource<'a>);

impl FrameSource for Held<'_> {
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

fn sensor_identities(root: &Path) -> Check {
    let pl = dynamic_cfg().pipeline(&root.join("c4"), &Overrides::default());
    pl.generate().map_err(|e| e.to_string())?;
    let exp = pl.load_experiment(0).map_err(|e| e.to_string())?;
    let renderer = SceneRenderer::new(&exp.scene, exp.camera).map_err(|e| e.to_string())?;
    let source = Held(TrajectorySource {
        renderer: &renderer,
        trajectory: &exp.trajectory,
    });
    let (mut grown, mut moving) = (0u64, 0usize);
    for (i, pose) in exp.trajectory.poses().iter().enumerate() {
        let gt = renderer.render(i, pose, pose.t).map_err(|e| e.to_string())?;
        let id = expose(&source, pose.t, 0.0, 0.0, 9, 16).map_err(|e| e.to_string())?;
        ensure!(id.rgb == gt.rgb && id.mid_masks() == gt.masks.as_slice(), "frame {i}: zero exposure/readout is not identity");

        let e = sample_exposure(&ExposureModel::Uniform { range: [0.0, 0.1] }, 5, i as u64);
        let r = sample_readout(&RollingShutterModel::default(), 5, i as u64);
        let x = expose(&source, pose.t, e, r, 9, 16).map_err(|e| e.to_string())?;
        let (corrected, boxes) = correct_annotations(&x.subframe_masks).map_err(|e| e.to_string())?;
        for (id, mid) in x.mid_masks() {
            let (_, c) = corrected.iter().find(|(c, _)| c == id).ok_or(format!("frame {i}: instance {id} lost"))?;
            let inter = c.intersection_area(mid).map_err(|e| e.to_string())?;
            ensure!(inter == mid.area(), "frame {i}: corrected mask of {id} misses mid-exposure pixels");
            grown += c.area() - mid.area();
        }
        for ((_, m), (_, b)) in corrected.iter().zip(&boxes) {
            ensure!(m.bbox().ok() == Some(*b), "frame {i}: corrected box not tight");
        }
        moving += (x.subframe_masks.first() != x.subframe_masks.last()) as usize;
    }

    let edge = MovingEdge {
        width: 48,
        height: 40,
        x0: 5.0,
        v: 400.0,
        range: (0.0, 1.0),
    };
    let (t, readout) = (0.01, 0.05);
    let rgb = apply_rolling_shutter(&edge, t, readout, 40).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for row in 0..40u32 {
        let lit = (0..48).filter(|&x| rgb[3 * (row * 48 + x) as usize] == 255).count() as f64;
        let want = edge.edge(t + readout * row as f64 / 39.0);
        worst = worst.max((lit - want).abs());
    }
    ensure!(worst <= 0.5, "shear error {worst} px");
    Ok(format!(
        "identity on 100 frames; corrected ⊇ mid on 100 frames ({moving} with motion, +{grown} px); shear error {worst:.2} px"
    ))
}

fn metrics_oracle() -> Check {
    let start = Instant::now();
    for seed in 0..200 {
        let (gt, dets) = random_instance(10_000 + seed);
        let r = evaluate(&gt, &dets, &EvalConfig::default()).map_err(|e| e.to_string())?;
        let (ap, ap50) = brute_map(&gt, &dets);
        ensure!((r.ap - ap).abs() <= 1e-9 && (r.ap50 - ap50).abs() <= 1e-9, "seed {seed}: {} {} vs {ap} {ap50}", r.ap, r.ap50);
    }
    let mut gt = CocoDataset::default();
    gt.images.push(gt_image(1));
    gt.annotations.push(gt_annotation(1, 1, [2.0, 2.0, 4.0, 4.0]));
    let tp = |s| det(1, [2.0, 2.0, 4.0, 4.0], s);
    let fp = |s| det(1, [10.0, 10.0, 3.0, 3.0], s);
    let ap50 = |d: &[Detection]| evaluate(&gt, d, &EvalConfig::default()).unwrap().ap50;
    ensure!(ap50(&[tp(0.9), fp(0.8)]) == 1.0, "TP@0.9 + FP@0.8");
    ensure!(ap50(&[fp(0.9), tp(0.8)]) == 0.5, "swapped scores");
    let (big, _) = random_instance(7);
    for task in [IouType::Bbox, IouType::Mask] {
        let perfect = evaluate(&big, &detections_from_ground_truth(&big), &EvalConfig::with(task, 0.0)).unwrap();
        ensure!(perfect.ap == 1.0 && perfect.ap50 == 1.0, "{task} perfect detector {perfect:?}");
        let empty = evaluate(&big, &[], &EvalConfig::with(task, 0.0)).unwrap();
        ensure!(empty.ap == 0.0 && empty.ap50 == 0.0, "{task} empty detections");
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1} s");
    Ok(format!("200 random instances within 1e-9; hand-traced cases exact; {secs:.2} s"))
}

fn export_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["annotations", "images"] {
        let mut names: Vec<_> = std::fs::read_dir(dir.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        for p in names {
            out.push((format!("{sub}/{}", p.file_name().unwrap().to_string_lossy()), std::fs::read(&p).unwrap()));
        }
    }
    out
}

fn determinism(root: &Path) -> Check {
    let cfg = Cfg {
        seed: 7,
        experiments: 2,
        duration: 3.0,
        fps: 10.0,
        size: (80, 60),
        humans: [1, 3],
        objects: [0, 2],
        recipe_extra: "",
    };
    let run = |jobs: usize| -> Result<Vec<(String, Vec<u8>)>, String> {
        let o = Overrides {
            jobs: Some(jobs),
            ..Default::default()
        };
        let p = cfg.pipeline(&root.join(format!("c7_j{jobs}")), &o);
        p.generate().map_err(|e| e.to_string())?;
        let (_, dir) = p.assemble("a", None).map_err(|e| e.to_string())?;
        Ok(export_files(&dir))
    };
    let one = run(1)?;
    let eight = run(8)?;
    ensure!(one.len() == eight.len(), "{} vs {} files", one.len(), eight.len());
    for (a, b) in one.iter().zip(&eight) {
        ensure!(a == b, "{} differs", a.0);
    }
    let bytes: usize = one.iter().map(|f| f.1.len()).sum();
    Ok(format!("{} export files ({bytes} bytes) identical at 1 and 8 threads", one.len()))
}

fn format_fidelity(root: &Path) -> Check {
    let mut r = rng(80);
    for i in 0..1000 {
        let (w, h) = (r.random_range(1..64u32), r.random_range(1..48u32));
        let p: f64 = r.random();
        let (cx, cy, rad) = (r.random_range(0.0..w as f64), r.random_range(0.0..h as f64), r.random_range(0.0..30.0));
        let noise: Vec<bool> = (0..w * h).map(|_| r.random_bool(p)).collect();
        let b = Bitmap::from_fn(w, h, |x, y| {
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            if i % 2 == 0 { d < rad } else { noise[(y * w + x) as usize] }
        });
        let m = encode_rle(&b);
        ensure!(m.counts().iter().map(|&c| c as u64).sum::<u64>() == (w * h) as u64, "mask {i}: counts sum");
        ensure!(decode_rle(&m) == b, "mask {i}: roundtrip");
        let coco = CocoRle::from_mask(&m);
        ensure!(coco.to_mask().map_err(|e| e.to_string())? == m, "mask {i}: COCO RLE roundtrip");
    }

    for n in [1, 12, 300] {
        let soup = random_soup(&mut r, n, Point::new(1.0, -2.0, 0.5), 10.0, 1.0);
        let f32_exact: Vec<[Point; 3]> = soup.triangle_points().map(|t| t.map(|p| p.map(|c| c as f32 as f64))).collect();
        let bytes = write_binary_stl(&TriangleMesh::from_triangle_soup("soup", &f32_exact));
        let mesh = parse_stl(&bytes).map_err(|e| e.to_string())?;
        ensure!(write_binary_stl(&mesh) == bytes, "STL bytes differ after roundtrip ({n} triangles)");
        let again = parse_stl(&write_binary_stl(&mesh)).map_err(|e| e.to_string())?;
        ensure!(again.vertices() == mesh.vertices() && again.triangles() == mesh.triangles(), "STL mesh differs");
        ensure!(mesh.triangle_points().collect::<Vec<_>>() == f32_exact, "STL vertices not bit-exact");
    }

    let cfg = Cfg {
        seed: 8,
        experiments: 1,
        duration: 2.0,
        fps: 10.0,
        size: (64, 48),
        humans: [2, 3],
        objects: [1, 1],
        recipe_extra: "",
    };
    let p = cfg.pipeline(&root.join("c8"), &Overrides::default());
    p.generate().map_err(|e| e.to_string())?;
    let (a, out) = p.assemble("a", None).map_err(|e| e.to_string())?;
    let mut anns = 0;
    for (d, name) in [(&a.train, "train"), (&a.val, "val")] {
        let path = out.join(format!("annotations/instances_{name}.json"));
        let parsed = CocoDataset::read(&path).map_err(|e| e.to_string())?;
        ensure!(&parsed == d, "{name} re-parse differs");
        ensure!(parsed.to_json() == std::fs::read_to_string(&path).unwrap(), "{name} re-serialization differs");
        anns += d.annotations.len();
    }
    Ok(format!("1000 RLE masks; 3 binary STL files bit-exact; COCO re-parse equal ({anns} annotations)"))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    let criteria: Vec<Criterion> = vec![
        ("pipeline constants", Box::new(|| pipeline_constants(root))),
        ("split arithmetic", Box::new(split_arithmetic)),
        ("geometry oracles", Box::new(geometry_oracles)),
        ("ground-truth exactness", Box::new(|| ground_truth_exactness(root))),
        ("sensor identities", Box::new(|| sensor_identities(root))),
        ("metrics oracle", Box::new(metrics_oracle)),
        ("determinism", Box::new(|| determinism(root))),
        ("format fidelity", Box::new(|| format_fidelity(root))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {} {name} [{secs:.1} s]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {} {name} [{secs:.1} s]: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
