//! Triangle meshes, rigid transforms, bounding boxes, STL I/O, a BVH and the
//! ray and mesh–mesh queries built on top of it.

mod bvh;
mod collide;
pub mod stl;

use nalgebra::{Point3, Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

pub use bvh::{intersect_triangle, Bvh, BvhNode, NodeKind, RayHit};
pub use collide::{bvh_collide, meshes_collide, triangles_intersect};

/// Tolerance shared by every geometric predicate in the crate: the ray/triangle
/// determinant cutoff and the contact slack of the separating-axis tests.
pub const GEOM_EPS: f64 = 1e-9;

pub type Point = Point3<f64>;
pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("triangle {triangle} references vertex {index} but mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: u32,
        vertex_count: usize,
    },
    #[error("triangle {0} repeats a vertex index")]
    RepeatedIndex(usize),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
}

/// Similarity transform `p -> R (s p) + t` with uniform scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    rotation: UnitQuaternion<f64>,
    translation: Vec3,
    scale: f64,
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn identity() -> Self {
        Transform {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
            scale: 1.0,
        }
    }

    /// Builds a transform from a raw quaternion, rejecting non-unit rotations and
    /// non-positive scales.
    pub fn new(rotation: Quaternion<f64>, translation: Vec3, scale: f64) -> Result<Self, GeomError> {
        if (rotation.norm() - 1.0).abs() > 1e-9 {
            return Err(GeomError::InvalidTransform(format!(
                "quaternion norm {} is not 1",
                rotation.norm()
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(GeomError::InvalidTransform(format!("scale {scale} must be positive")));
        }
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(GeomError::InvalidTransform("non-finite translation".into()));
        }
        Ok(Transform {
            rotation: UnitQuaternion::new_unchecked(rotation),
            translation,
            scale,
        })
    }

    pub fn from_rotation_translation(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        Transform {
            rotation,
            translation,
            scale: 1.0,
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::from_rotation_translation(UnitQuaternion::identity(), translation)
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point::from(self.rotation * (p.coords * self.scale) + self.translation)
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * (v * self.scale)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * (other.translation * self.scale) + self.translation,
            scale: self.scale * other.scale,
        }
    }

    pub fn inverse(&self) -> Transform {
        let inv_rot = self.rotation.inverse();
        Transform {
            rotation: inv_rot,
            translation: -(inv_rot * self.translation) / self.scale,
            scale: 1.0 / self.scale,
        }
    }

    /// Linear in translation and scale, spherical-linear in rotation.
    pub fn interpolate(&self, other: &Transform, alpha: f64) -> Transform {
        let rotation = if alpha <= 0.0 {
            self.rotation
        } else if alpha >= 1.0 {
            other.rotation
        } else {
            // slerp fails only for exactly opposite rotations; fall back to nlerp there
            self.rotation
                .try_slerp(&other.rotation, alpha, 1e-12)
                .unwrap_or_else(|| self.rotation.nlerp(&other.rotation, alpha))
        };
        Transform {
            rotation,
            translation: self.translation.lerp(&other.translation, alpha.clamp(0.0, 1.0)),
            scale: self.scale + (other.scale - self.scale) * alpha.clamp(0.0, 1.0),
        }
    }
}

/// Axis-aligned box. An "empty" box has `min > max` and is the identity of `union`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn new(min: Point, max: Point) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        Aabb { min, max }
    }

    pub fn empty() -> Self {
        Aabb {
            min: Point::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Point) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        other.is_empty() || (self.contains_point(&other.min) && self.contains_point(&other.max))
    }

    /// Closed overlap test: touching boxes overlap.
    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }

    pub fn expanded(&self, margin: f64) -> Aabb {
        let m = Vec3::repeat(margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn longest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Slab test; returns the entry distance when the ray enters the box before `t_max`.
    pub fn ray_entry(&self, origin: &Point, inv_dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for i in 0..3 {
            let a = (self.min[i] - origin[i]) * inv_dir[i];
            let b = (self.max[i] - origin[i]) * inv_dir[i];
            // NaN arises from 0 * inf when the origin lies on a slab plane of a
            // parallel ray; treat it as inside that slab.
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if !lo.is_nan() {
                t0 = t0.max(lo);
            }
            if !hi.is_nan() {
                t1 = t1.min(hi);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

/// Indexed triangle mesh. Vertices are in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[u32; 3]>,
    name: String,
}

impl TriangleMesh {
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Point>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<Self, GeomError> {
        for (ti, tri) in triangles.iter().enumerate() {
            for &index in tri {
                if index as usize >= vertices.len() {
                    return Err(GeomError::IndexOutOfRange {
                        triangle: ti,
                        index,
                        vertex_count: vertices.len(),
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(GeomError::RepeatedIndex(ti));
            }
        }
        Ok(TriangleMesh {
            vertices,
            triangles,
            name: name.into(),
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        TriangleMesh {
            vertices: Vec::new(),
            triangles: Vec::new(),
            name: name.into(),
        }
    }

    /// Builds an unshared-vertex mesh (three vertices per triangle).
    pub fn from_triangle_soup(name: impl Into<String>, tris: &[[Point; 3]]) -> Self {
        let vertices = tris.iter().flat_map(|t| t.iter().copied()).collect();
        let triangles = (0..tris.len() as u32).map(|i| [3 * i, 3 * i + 1, 3 * i + 2]).collect();
        TriangleMesh {
            vertices,
            triangles,
            name: name.into(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[i];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_points(&self) -> impl Iterator<Item = [Point; 3]> + '_ {
        (0..self.triangles.len()).map(move |i| self.triangle(i))
    }

    /// Unit normal following the vertex winding; zero for degenerate triangles.
    pub fn normal(&self, i: usize) -> Vec3 {
        let [a, b, c] = self.triangle(i);
        (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_else(Vec3::zeros)
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    pub fn transformed(&self, t: &Transform) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|p| t.apply(p)).collect(),
            triangles: self.triangles.clone(),
            name: self.name.clone(),
        }
    }

    /// Same topology, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<TriangleMesh, GeomError> {
        TriangleMesh::new(self.name.clone(), vertices, self.triangles.clone())
    }

    pub fn append(&mut self, other: &TriangleMesh) {
        let offset = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
    }

    pub fn merged<'a>(name: impl Into<String>, meshes: impl IntoIterator<Item = &'a TriangleMesh>) -> TriangleMesh {
        let mut out = TriangleMesh::empty(name);
        for m in meshes {
            out.append(m);
        }
        out
    }
}
