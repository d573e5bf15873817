//! Simple procedural meshes: boxes, quads, icosahedra and an animated
//! box-figure "walker" used as a stand-in human asset.

use std::f64::consts::TAU;

use crate::geomesh::{Point, TriangleMesh, Vec3};

/// Closed axis-aligned box, outward winding, 12 triangles.
pub fn box_mesh(name: &str, min: Point, max: Point) -> TriangleMesh {
    let v = |x: bool, y: bool, z: bool| {
        Point::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    let vertices = vec![
        v(false, false, false),
        v(true, false, false),
        v(true, true, false),
        v(false, true, false),
        v(false, false, true),
        v(true, false, true),
        v(true, true, true),
        v(false, true, true),
    ];
    let triangles = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriangleMesh::new(name, vertices, triangles).expect("box topology is valid")
}

/// Planar quad from four corners in order.
pub fn quad_mesh(name: &str, corners: [Point; 4]) -> TriangleMesh {
    TriangleMesh::new(name, corners.to_vec(), vec![[0, 1, 2], [0, 2, 3]]).expect("quad topology is valid")
}

pub fn icosahedron(name: &str, radius: f64) -> TriangleMesh {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, p, 0.0),
        (1.0, p, 0.0),
        (-1.0, -p, 0.0),
        (1.0, -p, 0.0),
        (0.0, -1.0, p),
        (0.0, 1.0, p),
        (0.0, -1.0, -p),
        (0.0, 1.0, -p),
        (p, 0.0, -1.0),
        (p, 0.0, 1.0),
        (-p, 0.0, -1.0),
        (-p, 0.0, 1.0),
    ];
    let vertices = raw
        .iter()
        .map(|&(x, y, z)| Point::from(Vec3::new(x, y, z).normalize() * radius))
        .collect();
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriangleMesh::new(name, vertices, triangles).expect("icosahedron topology is valid")
}

/// A box figure walking in place: torso, head and two legs that swing with
/// opposite phase. Feet rest at `z = 0`, the figure is centered on the z axis.
/// Returns the frame-0 mesh and the vertex arrays of all `frames` frames
/// (one full gait cycle).
pub fn walker(name: &str, height: f64, frames: usize) -> (TriangleMesh, Vec<Vec<Point>>) {
    let frames = frames.max(1);
    let leg_h = 0.45 * height;
    let torso_h = 0.4 * height;
    let head = 0.15 * height;
    let half_w = 0.12 * height;
    let depth = 0.08 * height;
    let leg_w = 0.05 * height;

    let build = |phase: f64| -> TriangleMesh {
        let swing = 0.12 * height * phase.sin();
        let parts = [
            box_mesh(
                "torso",
                Point::new(-depth, -half_w, leg_h),
                Point::new(depth, half_w, leg_h + torso_h),
            ),
            box_mesh(
                "head",
                Point::new(-head / 2.0, -head / 2.0, leg_h + torso_h),
                Point::new(head / 2.0, head / 2.0, leg_h + torso_h + head),
            ),
            box_mesh(
                "leg_l",
                Point::new(swing - leg_w, half_w - 2.0 * leg_w, 0.0),
                Point::new(swing + leg_w, half_w, leg_h),
            ),
            box_mesh(
                "leg_r",
                Point::new(-swing - leg_w, -half_w, 0.0),
                Point::new(-swing + leg_w, -half_w + 2.0 * leg_w, leg_h),
            ),
        ];
        TriangleMesh::merged(name, parts.iter())
    };
    let base = build(0.0);
    let seq = (0..frames)
        .map(|f| build(TAU * f as f64 / frames as f64).vertices().to_vec())
        .collect();
    (base, seq)
}
