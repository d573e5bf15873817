use super::{Bvh, GeomError, NodeKind, Point, Transform, TriangleMesh, Vec3, GEOM_EPS};

/// Closed triangle–triangle overlap by the separating-axis test.
///
/// Candidate axes are both face normals, the nine edge–edge cross products and
/// the six in-plane edge normals (needed for coplanar pairs). A gap no larger
/// than `GEOM_EPS` (scaled by coordinate magnitude) counts as contact.
pub fn triangles_intersect(a: &[Point; 3], b: &[Point; 3]) -> bool {
    let scale = 1.0
        + a.iter()
            .chain(b.iter())
            .map(|p| p.coords.amax())
            .fold(0.0f64, f64::max);
    let ea = [a[1] - a[0], a[2] - a[1], a[0] - a[2]];
    let eb = [b[1] - b[0], b[2] - b[1], b[0] - b[2]];
    let na = ea[0].cross(&ea[1]);
    let nb = eb[0].cross(&eb[1]);

    let separated = |axis: Vec3| -> bool {
        let (amin, amax) = project(a, &axis);
        let (bmin, bmax) = project(b, &axis);
        let tol = GEOM_EPS * axis.norm() * scale;
        bmin - amax > tol || amin - bmax > tol
    };

    if separated(na) || separated(nb) {
        return false;
    }
    for ei in &ea {
        for ej in &eb {
            if separated(ei.cross(ej)) {
                return false;
            }
        }
    }
    for e in &ea {
        if separated(na.cross(e)) {
            return false;
        }
    }
    for e in &eb {
        if separated(nb.cross(e)) {
            return false;
        }
    }
    true
}

fn project(t: &[Point; 3], axis: &Vec3) -> (f64, f64) {
    let d = [t[0].coords.dot(axis), t[1].coords.dot(axis), t[2].coords.dot(axis)];
    (d[0].min(d[1]).min(d[2]), d[0].max(d[1]).max(d[2]))
}

/// True when any triangle of `a` touches or crosses any triangle of `b`.
/// Both BVHs must be in the same frame.
pub fn bvh_collide(a: &Bvh, b: &Bvh) -> bool {
    let magnitude = |bvh: &Bvh| {
        let bb = bvh.bounds();
        bb.min.coords.amax().max(bb.max.coords.amax())
    };
    let slack = GEOM_EPS * (1.0 + magnitude(a).max(magnitude(b))) * 4.0;
    let mut stack = vec![(0usize, 0usize)];
    while let Some((ia, ib)) = stack.pop() {
        let na = &a.nodes()[ia];
        let nb = &b.nodes()[ib];
        if !na.bounds.expanded(slack).overlaps(&nb.bounds) {
            continue;
        }
        match (na.kind, nb.kind) {
            (NodeKind::Leaf { start: sa, count: ca }, NodeKind::Leaf { start: sb, count: cb }) => {
                for pa in sa..sa + ca {
                    for pb in sb..sb + cb {
                        if triangles_intersect(a.permuted_triangle(pa), b.permuted_triangle(pb)) {
                            return true;
                        }
                    }
                }
            }
            (NodeKind::Internal { left, right }, NodeKind::Leaf { .. }) => {
                stack.push((left, ib));
                stack.push((right, ib));
            }
            (NodeKind::Leaf { .. }, NodeKind::Internal { left, right }) => {
                stack.push((ia, left));
                stack.push((ia, right));
            }
            (NodeKind::Internal { left: al, right: ar }, NodeKind::Internal { left: bl, right: br }) => {
                // split the larger box
                let va = na.bounds.extent().product();
                let vb = nb.bounds.extent().product();
                if va >= vb {
                    stack.push((al, ib));
                    stack.push((ar, ib));
                } else {
                    stack.push((ia, bl));
                    stack.push((ia, br));
                }
            }
        }
    }
    false
}

/// Closed mesh–mesh collision of two posed meshes.
pub fn meshes_collide(
    a: &TriangleMesh,
    ta: &Transform,
    b: &TriangleMesh,
    tb: &Transform,
) -> Result<bool, GeomError> {
    if a.is_empty() || b.is_empty() {
        return Err(GeomError::EmptyMesh);
    }
    let wa = Bvh::build(&a.transformed(ta))?;
    let wb = Bvh::build(&b.transformed(tb))?;
    Ok(bvh_collide(&wa, &wb))
}
