//! Assemble S-style and A-style datasets from in-memory experiments and export COCO.

use std::sync::Arc;

use synthscene::dataset::{assemble_recipe, dataset_stats, write_assembly, DatasetRecipe, Experiment};
use synthscene::explore::{SixDof, Trajectory};
use synthscene::geomesh::Vec3;
use synthscene::gtrender::CameraModel;
use synthscene::procedural::icosahedron;
use synthscene::scenegen::{sample_scene, AssetLibrary, Environment, HumanAsset, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("synthscene-coco");
    let env = Arc::new(Environment::box_room("room", Vec3::new(5.0, 4.0, 2.6)));
    let library = AssetLibrary {
        humans: vec![HumanAsset::walker("walker", 1.75, 24, 24.0)],
        objects: vec![Arc::new(icosahedron("ball", 0.2))],
    };
    let experiments = (0..2u64)
        .map(|index| {
            let objects = index as usize * 2;
            let cfg = SceneConfig { humans: [2, 3], objects: [objects, objects], duration: 2.0, ..Default::default() };
            let poses: Vec<SixDof> = (0..20)
                .map(|i| SixDof { x: 0.4 + 0.05 * i as f64, y: 0.4, z: 1.3, roll: 0.0, pitch: 0.1, yaw: 0.7 })
                .collect();
            Ok(Experiment {
                name: format!("exp_{index:04}"),
                index,
                scene: sample_scene(env.clone(), &library, 100 + index, &cfg)?,
                trajectory: Trajectory::from_channels(10.0, &poses)?,
                camera: CameraModel::with_hfov(128, 96, 90.0)?,
            })
        })
        .collect::<Result<Vec<_>, Box<dyn std::error::Error>>>()?;

    for recipe in [DatasetRecipe::s_style("s"), DatasetRecipe::a_style("a")] {
        let a = assemble_recipe(&experiments, &recipe, 1)?;
        write_assembly(&a, out.join(&recipe.name))?;
        println!("recipe {} uses {:?} -> {}", recipe.name, a.log.experiments_used, out.join(&recipe.name).display());
        print!("{}", dataset_stats(&a.train) + dataset_stats(&a.val));
    }
    Ok(())
}
