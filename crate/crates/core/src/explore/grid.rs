use crate::geomesh::{Aabb, Point, TriangleMesh, Vec3};
use crate::scenegen::Environment;

use super::ExploreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

pub type CellIndex = [usize; 3];

/// Dense voxel grid covering an axis-aligned region.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    origin: Point,
    cell: f64,
    dims: [usize; 3],
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn new(origin: Point, cell: f64, dims: [usize; 3], fill: CellState) -> Self {
        assert!(cell > 0.0 && dims.iter().all(|&d| d > 0));
        OccupancyGrid {
            origin,
            cell,
            dims,
            cells: vec![fill; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn origin(&self) -> &Point {
        &self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn linear(&self, c: CellIndex) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    pub fn unlinear(&self, i: usize) -> CellIndex {
        let x = i % self.dims[0];
        let y = (i / self.dims[0]) % self.dims[1];
        let z = i / (self.dims[0] * self.dims[1]);
        [x, y, z]
    }

    pub fn get(&self, c: CellIndex) -> CellState {
        self.cells[self.linear(c)]
    }

    pub fn set(&mut self, c: CellIndex, s: CellState) {
        let i = self.linear(c);
        self.cells[i] = s;
    }

    pub fn states(&self) -> &[CellState] {
        &self.cells
    }

    pub fn count(&self, s: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == s).count()
    }

    pub fn cell_bounds(&self, c: CellIndex) -> Aabb {
        let min = self.origin + Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64) * self.cell;
        Aabb::new(min, min + Vec3::repeat(self.cell))
    }

    pub fn center(&self, c: CellIndex) -> Point {
        self.origin + Vec3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * self.cell
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: &Point) -> Option<CellIndex> {
        let mut out = [0usize; 3];
        for i in 0..3 {
            let f = ((p[i] - self.origin[i]) / self.cell).floor();
            if f < 0.0 || f >= self.dims[i] as f64 {
                return None;
            }
            out[i] = f as usize;
        }
        Some(out)
    }

    /// Neighbours within Chebyshev distance `r` (excluding `c`), inside the grid.
    pub fn neighbors(&self, c: CellIndex, r: usize) -> impl Iterator<Item = CellIndex> + '_ {
        let r = r as isize;
        let dims = self.dims;
        (-r..=r)
            .flat_map(move |dz| (-r..=r).flat_map(move |dy| (-r..=r).map(move |dx| [dx, dy, dz])))
            .filter(|d| *d != [0, 0, 0])
            .filter_map(move |d| {
                let mut out = [0usize; 3];
                for i in 0..3 {
                    let v = c[i] as isize + d[i];
                    if v < 0 || v >= dims[i] as isize {
                        return None;
                    }
                    out[i] = v as usize;
                }
                Some(out)
            })
    }

    /// Six face neighbours.
    pub fn face_neighbors(&self, c: CellIndex) -> impl Iterator<Item = CellIndex> + '_ {
        const D: [[isize; 3]; 6] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];
        let dims = self.dims;
        D.iter().filter_map(move |d| {
            let mut out = [0usize; 3];
            for i in 0..3 {
                let v = c[i] as isize + d[i];
                if v < 0 || v >= dims[i] as isize {
                    return None;
                }
                out[i] = v as usize;
            }
            Some(out)
        })
    }

    /// Marks every cell touched by a triangle of `mesh` occupied.
    pub fn mark_mesh(&mut self, mesh: &TriangleMesh) {
        for tri in mesh.triangle_points() {
            let tb = Aabb::from_points(tri.iter());
            let lo = index_range(self, &tb.min, -1);
            let hi = index_range(self, &tb.max, 1);
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        let c = [x, y, z];
                        if self.get(c) != CellState::Occupied && triangle_box_overlap(&tri, &self.cell_bounds(c)) {
                            self.set(c, CellState::Occupied);
                        }
                    }
                }
            }
        }
    }

    /// Walks the cells pierced by the segment `a -> b` in order (3D DDA). The
    /// visitor returns `false` to stop early. Parts outside the grid are skipped.
    pub fn walk_segment(&self, a: &Point, b: &Point, mut visit: impl FnMut(CellIndex) -> bool) {
        let d = b - a;
        let len = d.norm();
        let Some(mut c) = self.cell_of(a) else { return };
        if !visit(c) || len == 0.0 {
            return;
        }
        let mut step = [0isize; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for i in 0..3 {
            if d[i] > 0.0 {
                step[i] = 1;
                let boundary = self.origin[i] + (c[i] + 1) as f64 * self.cell;
                t_max[i] = (boundary - a[i]) / d[i];
                t_delta[i] = self.cell / d[i];
            } else if d[i] < 0.0 {
                step[i] = -1;
                let boundary = self.origin[i] + c[i] as f64 * self.cell;
                t_max[i] = (boundary - a[i]) / d[i];
                t_delta[i] = -self.cell / d[i];
            }
        }
        loop {
            let axis = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            if t_max[axis] > 1.0 {
                return;
            }
            let next = c[axis] as isize + step[axis];
            if next < 0 || next >= self.dims[axis] as isize {
                return;
            }
            c[axis] = next as usize;
            t_max[axis] += t_delta[axis];
            if !visit(c) {
                return;
            }
        }
    }
}

/// Closed triangle/box overlap (separating axes: 3 box normals, the triangle
/// normal and the 9 edge cross products).
pub fn triangle_box_overlap(tri: &[Point; 3], bx: &Aabb) -> bool {
    let c = bx.center();
    let h = bx.extent() / 2.0;
    let v = [tri[0] - c, tri[1] - c, tri[2] - c];
    for i in 0..3 {
        let lo = v[0][i].min(v[1][i]).min(v[2][i]);
        let hi = v[0][i].max(v[1][i]).max(v[2][i]);
        if lo > h[i] || hi < -h[i] {
            return false;
        }
    }
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    let separated = |axis: Vec3| {
        let p = [v[0].dot(&axis), v[1].dot(&axis), v[2].dot(&axis)];
        let r = h.x * axis.x.abs() + h.y * axis.y.abs() + h.z * axis.z.abs();
        p[0].min(p[1]).min(p[2]) > r || p[0].max(p[1]).max(p[2]) < -r
    };
    if separated(e[0].cross(&e[1])) {
        return false;
    }
    for edge in &e {
        for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
            if separated(axis.cross(edge)) {
                return false;
            }
        }
    }
    true
}

/// Marks every cell touched by an environment triangle occupied; all other
/// cells start unknown. The grid covers the environment bounds, anchored at
/// their minimum corner.
pub fn voxelize(env: &Environment, cell: f64, max_cells: usize) -> Result<OccupancyGrid, ExploreError> {
    if !(cell > 0.0 && cell.is_finite()) {
        return Err(ExploreError::InvalidConfig(format!("cell size {cell} must be positive")));
    }
    let b = env.bounds();
    let ext = b.extent();
    let dims_f = ext.map(|e| (e / cell).ceil().max(1.0));
    let total = dims_f.x * dims_f.y * dims_f.z;
    if total > max_cells as f64 {
        return Err(ExploreError::GridTooLarge {
            cells: total,
            budget: max_cells,
        });
    }
    let dims = [dims_f.x as usize, dims_f.y as usize, dims_f.z as usize];
    let mut grid = OccupancyGrid::new(b.min, cell, dims, CellState::Unknown);
    for sm in env.meshes() {
        grid.mark_mesh(&sm.mesh);
    }
    Ok(grid)
}

fn index_range(grid: &OccupancyGrid, p: &Point, pad: isize) -> CellIndex {
    let mut out = [0usize; 3];
    for i in 0..3 {
        let f = ((p[i] - grid.origin[i]) / grid.cell).floor() as isize + pad;
        out[i] = f.clamp(0, grid.dims[i] as isize - 1) as usize;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tri_box_basic() {
        let bx = Aabb::new(Point::origin(), Point::new(1.0, 1.0, 1.0));
        let inside = [Point::new(0.2, 0.2, 0.5), Point::new(0.8, 0.2, 0.5), Point::new(0.2, 0.8, 0.5)];
        let far = [Point::new(3.0, 3.0, 3.0), Point::new(4.0, 3.0, 3.0), Point::new(3.0, 4.0, 3.0)];
        // large triangle slicing through the box with no vertex inside
        let slicing = [Point::new(-5.0, -5.0, 0.5), Point::new(10.0, -5.0, 0.5), Point::new(-5.0, 10.0, 0.5)];
        // diagonal triangle passing near the corner but not touching
        let near_corner = [Point::new(1.2, 0.0, 0.0), Point::new(0.0, 1.2, 0.0), Point::new(0.0, 0.0, 1.2)]
            .map(|p| p + Vec3::repeat(1.0));
        assert!(triangle_box_overlap(&inside, &bx));
        assert!(!triangle_box_overlap(&far, &bx));
        assert!(triangle_box_overlap(&slicing, &bx));
        assert!(!triangle_box_overlap(&near_corner, &bx));
    }

    #[test]
    fn dda_visits_contiguous_cells() {
        let g = OccupancyGrid::new(Point::origin(), 1.0, [10, 10, 10], CellState::Unknown);
        let mut seen = Vec::new();
        g.walk_segment(&Point::new(0.5, 0.5, 0.5), &Point::new(3.5, 1.5, 0.5), |c| {
            seen.push(c);
            true
        });
        assert_eq!(seen.first(), Some(&[0, 0, 0]));
        assert_eq!(seen.last(), Some(&[3, 1, 0]));
        for w in seen.windows(2) {
            let d: usize = (0..3).map(|i| w[0][i].abs_diff(w[1][i])).sum();
            assert_eq!(d, 1);
        }
    }

    #[test]
    fn linear_roundtrip() {
        let g = OccupancyGrid::new(Point::origin(), 0.5, [3, 4, 5], CellState::Unknown);
        for i in 0..g.len() {
            assert_eq!(g.linear(g.unlinear(i)), i);
        }
    }
}
