//! Motion blur, rolling shutter and blur-aware annotation correction.

use std::sync::Arc;

use synthscene::explore::{SixDof, Trajectory};
use synthscene::geomesh::Vec3;
use synthscene::gtrender::{CameraModel, SceneRenderer, TrajectorySource};
use synthscene::procedural::icosahedron;
use synthscene::scenegen::{sample_scene, AssetLibrary, Environment, HumanAsset, SceneConfig};
use synthscene::sensor::{correct_annotations, expose};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = Arc::new(Environment::box_room("room", Vec3::new(5.0, 4.0, 2.6)));
    let library = AssetLibrary {
        humans: vec![HumanAsset::walker("walker", 1.75, 24, 24.0)],
        objects: vec![Arc::new(icosahedron("ball", 0.2))],
    };
    let cfg = SceneConfig { humans: [3, 3], objects: [2, 2], duration: 2.0, ..Default::default() };
    let scene = sample_scene(env, &library, 5, &cfg)?;
    // a fast yaw sweep makes the blur visible
    let poses: Vec<SixDof> = (0..60)
        .map(|i| SixDof { x: 0.4, y: 0.4, z: 1.3, roll: 0.0, pitch: 0.1, yaw: 0.3 + 0.04 * i as f64 })
        .collect();
    let trajectory = Trajectory::from_channels(30.0, &poses)?;
    let renderer = SceneRenderer::new(&scene, CameraModel::with_hfov(160, 120, 90.0)?)?;
    let source = TrajectorySource { renderer: &renderer, trajectory: &trajectory };

    let t = 1.0;
    for (exposure, readout) in [(0.0, 0.0), (0.02, 0.015), (0.1, 0.015)] {
        let x = expose(&source, t, exposure, readout, 9, 16)?;
        let (corrected, boxes) = correct_annotations(&x.subframe_masks)?;
        let mid: u64 = x.mid_masks().iter().map(|(_, m)| m.area()).sum();
        let all: u64 = corrected.iter().map(|(_, m)| m.area()).sum();
        println!("exposure {exposure:.3} s, readout {readout:.3} s: mid-exposure {mid} px, corrected {all} px, {} boxes", boxes.len());
    }
    Ok(())
}
