//! Render ground truth (RGB, depth, instance and semantic maps) for one pose.

use std::sync::Arc;

use nalgebra::UnitQuaternion;
use synthscene::explore::Pose;
use synthscene::geomesh::{Point, Vec3};
use synthscene::gtrender::raster::{write_pfm, write_png_rgb, write_png_u16};
use synthscene::gtrender::{CameraModel, SceneRenderer};
use synthscene::procedural::icosahedron;
use synthscene::scenegen::{sample_scene, AssetLibrary, Environment, HumanAsset, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("synthscene-render");
    std::fs::create_dir_all(&out)?;
    let env = Arc::new(Environment::box_room("room", Vec3::new(5.0, 4.0, 2.6)));
    let library = AssetLibrary {
        humans: vec![HumanAsset::walker("walker", 1.75, 24, 24.0)],
        objects: vec![Arc::new(icosahedron("ball", 0.2))],
    };
    let cfg = SceneConfig { humans: [3, 3], objects: [2, 2], ..Default::default() };
    let scene = sample_scene(env, &library, 11, &cfg)?;
    let camera = CameraModel::with_hfov(320, 240, 90.0)?;
    let pose = Pose {
        t: 1.0,
        position: Point::new(0.3, 0.3, 1.4),
        orientation: UnitQuaternion::from_euler_angles(0.0, 0.15, std::f64::consts::FRAC_PI_4),
    };
    let gt = SceneRenderer::new(&scene, camera)?.render(0, &pose, pose.t)?;
    for (id, b) in &gt.boxes {
        println!("instance {id} ({:?}): box {b:?}, {} px", scene.class_of(*id), gt.mask(*id).map_or(0, |m| m.area()));
    }
    write_png_rgb(out.join("rgb.png"), 320, 240, &gt.rgb)?;
    write_png_u16(out.join("instance.png"), 320, 240, &gt.instance_map)?;
    let semantic: Vec<u16> = gt.semantic_map.iter().map(|&s| s as u16).collect();
    write_png_u16(out.join("semantic.png"), 320, 240, &semantic)?;
    write_pfm(out.join("depth.pfm"), 320, 240, &gt.depth)?;
    println!("wrote {}", out.display());
    Ok(())
}
