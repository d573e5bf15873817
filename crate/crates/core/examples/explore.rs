//! Voxelize a room, plan a frontier-exploration flight and derive IMU data.

use std::sync::Arc;

use synthscene::explore::{derive_imu, plan_exploration, random_free_start, voxelize, ExploreConfig};
use synthscene::geomesh::{Point, Vec3};
use synthscene::procedural::box_mesh;
use synthscene::scenegen::{Environment, Scene, StaticMesh};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let wall = box_mesh("divider", Point::new(3.0, 0.0, 0.0), Point::new(3.2, 2.8, 2.6));
    let env = Arc::new(Environment::box_room_with("two-rooms", Vec3::new(6.0, 4.0, 2.6), vec![StaticMesh::new(wall, "wall")]));
    let cfg = ExploreConfig::default();
    let grid = voxelize(&env, cfg.cell_size, cfg.max_cells)?;
    println!("grid {:?}", grid.dims());
    let scene = Scene::static_scene(env.clone());
    let start = random_free_start(&grid, &scene, 3, &cfg)?;
    let run = plan_exploration(grid, &start, env.floor_height(), 30.0, 30.0, &cfg)?;
    println!("{} poses, free-space coverage {:.1} %", run.trajectory.len(), 100.0 * run.free_coverage());
    let imu = derive_imu(&run.trajectory)?;
    let peak = imu.iter().map(|s| s.gyro.norm()).fold(0.0, f64::max);
    println!("peak angular rate {peak:.3} rad/s");
    print!("{}", run.trajectory.to_text().lines().take(4).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
