//! Sample a randomized scene: appearance, placed humans and flying objects.

use std::sync::Arc;

use synthscene::geomesh::{Point, Vec3};
use synthscene::procedural::{box_mesh, icosahedron};
use synthscene::scenegen::{sample_scene, AssetLibrary, Environment, HumanAsset, SceneConfig, StaticMesh};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(7), |s| s.parse())?;
    let table = box_mesh("table", Point::new(2.0, 1.5, 0.0), Point::new(3.0, 2.3, 0.75));
    let env = Arc::new(Environment::box_room_with("living-room", Vec3::new(6.0, 4.0, 2.6), vec![StaticMesh::new(table, "table")]));
    let library = AssetLibrary {
        humans: vec![HumanAsset::walker("walker", 1.75, 24, 24.0)],
        objects: vec![Arc::new(icosahedron("ball", 0.15))],
    };
    let scene = sample_scene(env, &library, seed, &SceneConfig::default())?;
    println!("seed {seed}: light {:?} x {:.2}", scene.appearance.light_color, scene.appearance.light_intensity);
    for inst in &scene.instances {
        let at = inst.placement.translation();
        println!("  #{} {:?} at ({:.2}, {:.2}, {:.2}), track lasts {} s", inst.id, inst.class, at.x, at.y, at.z, inst.track.duration());
    }
    println!("{} bytes of scene record", scene.to_record().to_json().len());
    Ok(())
}
