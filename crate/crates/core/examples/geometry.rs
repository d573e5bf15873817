//! Load a mesh from STL bytes, cast rays through its BVH and test collisions.

use nalgebra::UnitQuaternion;
use synthscene::geomesh::stl::{parse_stl, write_binary_stl};
use synthscene::geomesh::{meshes_collide, Bvh, Point, Transform, Vec3};
use synthscene::procedural::{box_mesh, icosahedron};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ball = parse_stl(&write_binary_stl(&icosahedron("ball", 0.5)))?;
    println!("{}: {} vertices, {} triangles", ball.name(), ball.vertices().len(), ball.triangle_count());

    let bvh = Bvh::build(&ball)?;
    let origin = Point::new(-3.0, 0.0, 0.0);
    for dir in [Vec3::x(), Vec3::new(1.0, 0.5, 0.0).normalize(), -Vec3::x()] {
        match bvh.ray_cast(&origin, &dir, 10.0) {
            Some(hit) => println!("ray {dir:?}: hit triangle {} at t = {:.4}", hit.triangle, hit.t),
            None => println!("ray {dir:?}: miss"),
        }
    }

    let crate_mesh = box_mesh("crate", Point::new(-0.2, -0.2, -0.2), Point::new(0.2, 0.2, 0.2));
    for x in [0.5, 0.7, 1.0] {
        let t = Transform::from_rotation_translation(UnitQuaternion::from_euler_angles(0.0, 0.0, 0.3), Vec3::new(x, 0.0, 0.0));
        println!("crate at x = {x}: collides = {}", meshes_collide(&ball, &Transform::identity(), &crate_mesh, &t)?);
    }
    Ok(())
}
