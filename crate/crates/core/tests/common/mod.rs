#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthscene::dataset::{CocoAnnotation, CocoDataset, CocoImage, CocoRle};
use synthscene::detmetrics::Detection;
use synthscene::mask::InstanceMask;

/// Box IoU from corner coordinates.
fn corner_iou(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let (ax1, ay1, ax2, ay2) = (a[0], a[1], a[0] + a[2], a[1] + a[3]);
    let (bx1, by1, bx2, by2) = (b[0], b[1], b[0] + b[2], b[1] + b[3]);
    let ix = if ax2.min(bx2) > ax1.max(bx1) { ax2.min(bx2) - ax1.max(bx1) } else { 0.0 };
    let iy = if ay2.min(by2) > ay1.max(by1) { ay2.min(by2) - ay1.max(by1) } else { 0.0 };
    let inter = ix * iy;
    let union = a[2] * a[3] + b[2] * b[3] - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Box AP at one IoU threshold by explicit enumeration: interpolated
/// precision at recall r is the best precision over all ranks reaching r.
pub fn brute_ap(gt: &CocoDataset, dets: &[Detection], iou: f64, score_thr: f64, max_dets: usize) -> f64 {
    let n_gt = gt.annotations.len();
    let mut outcomes: Vec<(f64, usize, bool)> = Vec::new();
    for im in &gt.images {
        let mut mine: Vec<usize> = (0..dets.len())
            .filter(|&i| dets[i].image_id == im.id && dets[i].score >= score_thr)
            .collect();
        // insertion sort, descending score, earlier index first
        for i in 1..mine.len() {
            let mut j = i;
            while j > 0 && dets[mine[j]].score > dets[mine[j - 1]].score {
                mine.swap(j, j - 1);
                j -= 1;
            }
        }
        mine.truncate(max_dets);
        let gts: Vec<&CocoAnnotation> = gt.annotations.iter().filter(|a| a.image_id == im.id).collect();
        let mut used = vec![false; gts.len()];
        for d in mine {
            let mut pick = None;
            let mut best = -1.0;
            for (g, a) in gts.iter().enumerate() {
                let v = corner_iou(&dets[d].bbox, &a.bbox);
                if !used[g] && v >= iou && v > best {
                    best = v;
                    pick = Some(g);
                }
            }
            if let Some(g) = pick {
                used[g] = true;
            }
            outcomes.push((dets[d].score, d, pick.is_some()));
        }
    }
    outcomes.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut points = Vec::new();
    let mut tp = 0;
    for (k, o) in outcomes.iter().enumerate() {
        tp += o.2 as usize;
        points.push((tp as f64 / n_gt.max(1) as f64, tp as f64 / (k + 1) as f64));
    }
    if n_gt == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for j in 0..=100 {
        let r = j as f64 / 100.0;
        let p = points.iter().filter(|(rec, _)| *rec >= r).map(|(_, p)| *p).fold(0.0, f64::max);
        total += p;
    }
    total / 101.0
}

pub fn brute_map(gt: &CocoDataset, dets: &[Detection]) -> (f64, f64) {
    let aps: Vec<f64> = (0..10)
        .map(|i| brute_ap(gt, dets, 0.5 + 0.05 * i as f64, 0.0, 100))
        .collect();
    (aps.iter().sum::<f64>() / 10.0, aps[0])
}

fn boxed(rng: &mut ChaCha8Rng) -> [f64; 4] {
    [
        rng.random_range(0..8) as f64,
        rng.random_range(0..8) as f64,
        rng.random_range(1..6) as f64,
        rng.random_range(1..6) as f64,
    ]
}

fn box_mask(b: &[f64; 4]) -> InstanceMask {
    InstanceMask::from_fn(16, 16, |x, y| {
        let (x, y) = (x as f64, y as f64);
        x >= b[0] && x < b[0] + b[2] && y >= b[1] && y < b[1] + b[3]
    })
}

pub fn gt_image(id: u64) -> CocoImage {
    CocoImage {
        id,
        file_name: format!("{id}.png"),
        width: 16,
        height: 16,
        exposure: 0.0,
        readout: 0.0,
    }
}

pub fn gt_annotation(id: u64, image_id: u64, b: [f64; 4]) -> CocoAnnotation {
    let m = box_mask(&b);
    CocoAnnotation {
        id,
        image_id,
        category_id: 1,
        bbox: b,
        segmentation: CocoRle::from_mask(&m),
        area: m.area(),
        iscrowd: 0,
    }
}

pub fn det(image_id: u64, b: [f64; 4], score: f64) -> Detection {
    Detection {
        image_id,
        category_id: 1,
        bbox: b,
        score,
        segmentation: Some(CocoRle::from_mask(&box_mask(&b))),
    }
}

/// Up to 10 images with up to 5 ground-truth and 5 predicted boxes each on a
/// coarse grid, so IoU and score ties are common.
pub fn random_instance(seed: u64) -> (CocoDataset, Vec<Detection>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gt = CocoDataset::default();
    let mut dets = Vec::new();
    let mut ann = 0;
    for image in 1..=rng.random_range(1..=10u64) {
        gt.images.push(gt_image(image));
        let boxes: Vec<[f64; 4]> = (0..rng.random_range(0..=5)).map(|_| boxed(&mut rng)).collect();
        for b in &boxes {
            ann += 1;
            gt.annotations.push(gt_annotation(ann, image, *b));
        }
        for _ in 0..rng.random_range(0..=5) {
            let b = if !boxes.is_empty() && rng.random_bool(0.6) {
                let mut b = boxes[rng.random_range(0..boxes.len())];
                b[0] += rng.random_range(-1..=1) as f64;
                b[2] += rng.random_range(0..=1) as f64;
                b
            } else {
                boxed(&mut rng)
            };
            dets.push(det(image, b, rng.random_range(0..20) as f64 / 19.0));
        }
    }
    (gt, dets)
}

use std::ops::Range;

use synthscene::geomesh::{Point, TriangleMesh, Vec3};
use synthscene::gtrender::{FrameSource, RawRows, RenderError};

/// Plain Möller–Trumbore, nearest `t` in `[0, t_max]` over every triangle.
pub fn brute_ray(o: &Point, d: &Vec3, tris: &[[Point; 3]], t_max: f64) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, tri) in tris.iter().enumerate() {
        let e1 = tri[1] - tri[0];
        let e2 = tri[2] - tri[0];
        let p = d.cross(&e2);
        let det = e1.dot(&p);
        if det.abs() < 1e-9 {
            continue;
        }
        let s = o - tri[0];
        let u = s.dot(&p) / det;
        let q = s.cross(&e1);
        let v = d.dot(&q) / det;
        let t = e2.dot(&q) / det;
        if u < 0.0 || v < 0.0 || u + v > 1.0 || !(0.0..=t_max).contains(&t) {
            continue;
        }
        if best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, i));
        }
    }
    best
}

fn segment_crosses(p: &Point, q: &Point, tri: &[Point; 3]) -> bool {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let dp = n.dot(&(p - tri[0]));
    let dq = n.dot(&(q - tri[0]));
    if dp * dq > 0.0 || dp == dq {
        return false;
    }
    let x = p + (q - p) * (dp / (dp - dq));
    let side = |a: &Point, b: &Point| n.dot(&(b - a).cross(&(x - a)));
    let s = [side(&tri[0], &tri[1]), side(&tri[1], &tri[2]), side(&tri[2], &tri[0])];
    s.iter().all(|&v| v >= 0.0) || s.iter().all(|&v| v <= 0.0)
}

/// Triangle pair test for triangles in general position: they meet iff an
/// edge of one pierces the other.
pub fn brute_tri_pair(a: &[Point; 3], b: &[Point; 3]) -> bool {
    let edges = |t: &[Point; 3]| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])];
    edges(a).iter().any(|(p, q)| segment_crosses(p, q, b)) || edges(b).iter().any(|(p, q)| segment_crosses(p, q, a))
}

pub fn brute_meshes_collide(a: &TriangleMesh, b: &TriangleMesh) -> bool {
    let tb: Vec<[Point; 3]> = b.triangle_points().collect();
    a.triangle_points().any(|ta| tb.iter().any(|t| brute_tri_pair(&ta, t)))
}

/// Soup of `n` triangles with edge scale `size` scattered in a cube of side
/// `spread` around `center`.
pub fn random_soup(rng: &mut impl Rng, n: usize, center: Point, spread: f64, size: f64) -> TriangleMesh {
    let mut unit = || Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    let tris: Vec<[Point; 3]> = (0..n)
        .map(|_| {
            let c = center + unit() * spread;
            [c + unit() * size, c + unit() * size, c + unit() * size]
        })
        .collect();
    TriangleMesh::from_triangle_soup("soup", &tris)
}

pub fn unit_dir(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A bright half-plane `x < x0 + v t` (instance 1) on a dark background.
pub struct MovingEdge {
    pub width: u32,
    pub height: u32,
    pub x0: f64,
    pub v: f64,
    pub range: (f64, f64),
}

impl MovingEdge {
    pub fn edge(&self, t: f64) -> f64 {
        self.x0 + self.v * t
    }
}

impl FrameSource for MovingEdge {
    fn width(&self) -> u32 {
        self.width
    }
    fn height(&self) -> u32 {
        self.height
    }
    fn time_range(&self) -> (f64, f64) {
        self.range
    }
    fn render_rows(&self, t: f64, rows: Range<u32>) -> Result<RawRows, RenderError> {
        let n = self.width as usize * rows.len();
        let mut raw = RawRows {
            width: self.width,
            rows: rows.clone(),
            instance: Vec::with_capacity(n),
            semantic: Vec::with_capacity(n),
            depth: Vec::with_capacity(n),
            rgb: Vec::with_capacity(3 * n),
        };
        for _ in rows {
            for x in 0..self.width {
                let on = (x as f64 + 0.5) < self.edge(t);
                raw.instance.push(on as u16);
                raw.semantic.push(on as u8);
                raw.depth.push(1.0);
                raw.rgb.extend_from_slice(&[if on { 255 } else { 0 }; 3]);
            }
        }
        Ok(raw)
    }
}
