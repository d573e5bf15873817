use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::geomesh::{Point, Vec3};
use crate::scenegen::Scene;
use crate::seeding;

use super::grid::{CellIndex, CellState, OccupancyGrid};
use super::trajectory::{SixDof, Trajectory};
use super::{ExploreConfig, ExploreError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartPose {
    pub position: Point,
    pub yaw: f64,
}

/// Output of one exploration run.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub trajectory: Trajectory,
    pub channels: Vec<SixDof>,
    /// Cells observed by the sensor so far, after each frame.
    pub observed: Vec<usize>,
    /// Grid state at the end of the run.
    pub grid: OccupancyGrid,
}

impl Exploration {
    /// Fraction of non-occupied cells that were observed free.
    pub fn free_coverage(&self) -> f64 {
        let open = self.grid.len() - self.grid.count(CellState::Occupied);
        if open == 0 {
            return 1.0;
        }
        self.grid.count(CellState::Free) as f64 / open as f64
    }
}

/// Cells that satisfy the static flight constraints: at least `clearance`
/// cells away from any occupied cell and inside the altitude band.
fn static_mask(grid: &OccupancyGrid, floor: f64, config: &ExploreConfig) -> Vec<bool> {
    let mut ok: Vec<bool> = (0..grid.len())
        .map(|i| {
            let c = grid.unlinear(i);
            let h = grid.center(c).z - floor;
            grid.states()[i] != CellState::Occupied && h >= config.altitude[0] && h <= config.altitude[1]
        })
        .collect();
    if config.clearance > 0 {
        for i in 0..grid.len() {
            if grid.states()[i] == CellState::Occupied {
                for n in grid.neighbors(grid.unlinear(i), config.clearance) {
                    ok[grid.linear(n)] = false;
                }
            }
        }
    }
    ok
}

/// Uniformly samples a start cell that satisfies the flight constraints and
/// lies outside every instance's bounds at `t = 0`. When no such cell exists,
/// any non-occupied cell outside the instances is accepted.
pub fn random_free_start(
    grid: &OccupancyGrid,
    scene: &Scene,
    seed: u64,
    config: &ExploreConfig,
) -> Result<StartPose, ExploreError> {
    let margin = grid.cell_size() / 2.0;
    let boxes: Vec<_> = scene
        .instances
        .iter()
        .filter_map(|i| i.mesh_at(0.0).ok())
        .map(|m| m.bounds().expanded(margin))
        .collect();
    let clear_of_instances = |i: usize| {
        let p = grid.center(grid.unlinear(i));
        !boxes.iter().any(|b| b.contains_point(&p))
    };
    let ok = static_mask(grid, scene.environment.floor_height(), config);
    let mut candidates: Vec<usize> = (0..grid.len()).filter(|&i| ok[i] && clear_of_instances(i)).collect();
    if candidates.is_empty() {
        candidates = (0..grid.len())
            .filter(|&i| grid.states()[i] != CellState::Occupied && clear_of_instances(i))
            .collect();
    }
    if candidates.is_empty() {
        return Err(ExploreError::NoFreeSpace);
    }
    let mut rng = seeding::stream(seed, "start", 0);
    let pick = candidates[rng.random_range(0..candidates.len())];
    Ok(StartPose {
        position: grid.center(grid.unlinear(pick)),
        yaw: rng.random_range(-PI..PI),
    })
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    // reversed: BinaryHeap pops the smallest cost, then the smallest index
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

struct Planner<'a> {
    grid: OccupancyGrid,
    ok: Vec<bool>,
    seen: Vec<bool>,
    observed: usize,
    abandoned: Vec<bool>,
    config: &'a ExploreConfig,
    moves: Vec<([isize; 3], Vec<[isize; 3]>)>,
}

impl Planner<'_> {
    fn passable(&self, c: CellIndex) -> bool {
        let i = self.grid.linear(c);
        self.ok[i] && self.grid.states()[i] == CellState::Free
    }

    fn offset(&self, c: CellIndex, d: [isize; 3]) -> Option<CellIndex> {
        let dims = self.grid.dims();
        let mut out = [0usize; 3];
        for i in 0..3 {
            let v = c[i] as isize + d[i];
            if v < 0 || v >= dims[i] as isize {
                return None;
            }
            out[i] = v as usize;
        }
        Some(out)
    }

    /// 26-connected moves that do not cut corners.
    fn successors(&self, c: CellIndex) -> Vec<(CellIndex, f64)> {
        let mut out = Vec::with_capacity(26);
        for (d, subs) in &self.moves {
            let Some(n) = self.offset(c, *d) else { continue };
            if !self.passable(n) {
                continue;
            }
            if subs.iter().all(|s| self.offset(c, *s).is_some_and(|m| self.passable(m))) {
                let len = ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) as f64).sqrt();
                out.push((n, len));
            }
        }
        out
    }

    fn mark_seen(&mut self, c: CellIndex) {
        let i = self.grid.linear(c);
        if !self.seen[i] {
            self.seen[i] = true;
            self.observed += 1;
        }
    }

    fn sense(&mut self, pos: &Point, yaw: f64, pitch: f64) {
        let cfg = self.config;
        let [nh, nv] = cfg.sensor_rays;
        let [fh, fv] = [cfg.fov_deg[0].to_radians(), cfg.fov_deg[1].to_radians()];
        let spread = |k: usize, n: usize, f: f64| if n <= 1 { 0.0 } else { -f / 2.0 + f * k as f64 / (n - 1) as f64 };
        for a in 0..nh {
            let az = yaw + spread(a, nh, fh);
            for b in 0..nv {
                let el = spread(b, nv, fv) - pitch;
                let dir = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
                let end = pos + dir * cfg.sensor_range;
                let mut hits = Vec::new();
                self.grid.walk_segment(pos, &end, |c| {
                    hits.push(c);
                    self.grid.get(c) != CellState::Occupied
                });
                for c in hits {
                    self.mark_seen(c);
                    if self.grid.get(c) == CellState::Unknown {
                        self.grid.set(c, CellState::Free);
                    }
                }
            }
        }
    }

    fn is_frontier(&self, c: CellIndex) -> bool {
        self.grid.get(c) == CellState::Free
            && self.grid.face_neighbors(c).any(|n| self.grid.get(n) == CellState::Unknown)
    }

    fn candidate(&self, c: CellIndex) -> bool {
        self.passable(c) && !self.abandoned[self.grid.linear(c)] && self.is_frontier(c)
    }

    /// Nearest frontier by grid distance, then the member of its cluster
    /// closest to the cluster centroid.
    fn choose_target(&self, from: CellIndex) -> Option<(CellIndex, Vec<CellIndex>)> {
        let mut parent: HashMap<usize, usize> = HashMap::new();
        let start = self.grid.linear(from);
        parent.insert(start, start);
        let mut queue = VecDeque::from([from]);
        let mut found = None;
        while let Some(c) = queue.pop_front() {
            if c != from && self.candidate(c) {
                found = Some(c);
                break;
            }
            for (n, _) in self.successors(c) {
                let ni = self.grid.linear(n);
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(ni) {
                    e.insert(self.grid.linear(c));
                    queue.push_back(n);
                }
            }
        }
        let nearest = found?;
        let bfs_path = {
            let mut path = vec![nearest];
            let mut i = self.grid.linear(nearest);
            while parent[&i] != i {
                i = parent[&i];
                path.push(self.grid.unlinear(i));
            }
            path.reverse();
            path
        };

        let mut cluster = vec![nearest];
        let mut in_cluster = HashMap::from([(self.grid.linear(nearest), ())]);
        let mut k = 0;
        while k < cluster.len() {
            let c = cluster[k];
            k += 1;
            for n in self.grid.neighbors(c, 1) {
                let ni = self.grid.linear(n);
                if !in_cluster.contains_key(&ni) && self.candidate(n) {
                    in_cluster.insert(ni, ());
                    cluster.push(n);
                }
            }
        }
        let centroid = cluster.iter().fold(Vec3::zeros(), |acc, c| acc + self.grid.center(*c).coords)
            / cluster.len() as f64;
        let rep = *cluster
            .iter()
            .min_by(|a, b| {
                let da = (self.grid.center(**a).coords - centroid).norm_squared();
                let db = (self.grid.center(**b).coords - centroid).norm_squared();
                da.total_cmp(&db).then(self.grid.linear(**a).cmp(&self.grid.linear(**b)))
            })
            .expect("cluster is non-empty");
        match self.astar(from, rep) {
            Some(path) => Some((rep, path)),
            None => Some((nearest, bfs_path)),
        }
    }

    fn astar(&self, from: CellIndex, to: CellIndex) -> Option<Vec<CellIndex>> {
        let goal = self.grid.center(to);
        let h = |c: CellIndex| (self.grid.center(c) - goal).norm() / self.grid.cell_size();
        let start = self.grid.linear(from);
        let mut g: HashMap<usize, f64> = HashMap::from([(start, 0.0)]);
        let mut parent: HashMap<usize, usize> = HashMap::new();
        let mut open = BinaryHeap::from([Key(h(from), start)]);
        let target = self.grid.linear(to);
        while let Some(Key(_, i)) = open.pop() {
            if i == target {
                let mut path = vec![to];
                let mut j = i;
                while let Some(&p) = parent.get(&j) {
                    path.push(self.grid.unlinear(p));
                    j = p;
                }
                path.reverse();
                return Some(path);
            }
            let c = self.grid.unlinear(i);
            let gi = g[&i];
            for (n, len) in self.successors(c) {
                let ni = self.grid.linear(n);
                let cand = gi + len;
                if g.get(&ni).is_none_or(|&old| cand < old) {
                    g.insert(ni, cand);
                    parent.insert(ni, i);
                    open.push(Key(cand + h(n), ni));
                }
            }
        }
        None
    }

    fn line_of_sight(&self, a: &Point, b: &Point, from: CellIndex) -> bool {
        let mut clear = true;
        self.grid.walk_segment(a, b, |c| {
            clear = c == from || self.passable(c);
            clear
        });
        clear && self.grid.cell_of(b).is_some()
    }

    /// Greedy shortcutting of a cell path into straight segments.
    fn smooth(&self, pos: &Point, cells: &[CellIndex]) -> Vec<Point> {
        let from = cells[0];
        let mut pts = vec![*pos];
        pts.extend(cells[1..].iter().map(|c| self.grid.center(*c)));
        let mut out = Vec::new();
        let mut i = 0;
        while i + 1 < pts.len() {
            let mut j = pts.len() - 1;
            while j > i + 1 && !self.line_of_sight(&pts[i], &pts[j], from) {
                j -= 1;
            }
            out.push(pts[j]);
            i = j;
        }
        out
    }
}

fn corner_moves() -> Vec<([isize; 3], Vec<[isize; 3]>)> {
    let mut out = Vec::new();
    for dz in -1..=1isize {
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let d = [dx, dy, dz];
                if d == [0, 0, 0] {
                    continue;
                }
                let nz: Vec<usize> = (0..3).filter(|&i| d[i] != 0).collect();
                let mut subs = Vec::new();
                for mask in 1..(1u32 << nz.len()) - 1 {
                    let mut s = [0isize; 3];
                    for (bit, &axis) in nz.iter().enumerate() {
                        if mask & (1 << bit) != 0 {
                            s[axis] = d[axis];
                        }
                    }
                    subs.push(s);
                }
                out.push((d, subs));
            }
        }
    }
    out
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Greedy frontier exploration. Each frame the camera senses (ray casts
/// within range and field of view), then advances up to `v_max / fps` along a
/// shortcut A* path towards the current frontier target, re-planning once the
/// target stops being a frontier. A target reached while still a frontier gets
/// one full turn in place before it is given up. When no reachable frontier
/// remains the camera hovers and yaws slowly. Exactly `round(duration * fps)` poses are produced.
pub fn plan_exploration(
    mut grid: OccupancyGrid,
    start: &StartPose,
    floor_height: f64,
    duration: f64,
    fps: f64,
    config: &ExploreConfig,
) -> Result<Exploration, ExploreError> {
    config.validate()?;
    if !(duration > 0.0 && duration.is_finite() && fps > 0.0 && fps.is_finite()) {
        return Err(ExploreError::InvalidConfig(format!("duration {duration} and fps {fps} must be positive")));
    }
    let start_cell = grid.cell_of(&start.position).ok_or(ExploreError::NoFreeSpace)?;
    if grid.get(start_cell) == CellState::Occupied {
        return Err(ExploreError::NoFreeSpace);
    }
    for c in std::iter::once(start_cell).chain(grid.neighbors(start_cell, config.clearance).collect::<Vec<_>>()) {
        if grid.get(c) == CellState::Unknown {
            grid.set(c, CellState::Free);
        }
    }
    let n = (duration * fps).round() as usize;
    let mut ok = static_mask(&grid, floor_height, config);
    ok[grid.linear(start_cell)] = true;
    let len = grid.len();
    let mut planner = Planner {
        grid,
        ok,
        seen: vec![false; len],
        observed: 0,
        abandoned: vec![false; len],
        config,
        moves: corner_moves(),
    };

    let step = config.v_max / fps;
    let pitch = config.pitch_deg.to_radians();
    let roll = config.roll_deg.to_radians();
    let max_turn = config.max_yaw_rate_deg.to_radians() / fps;
    let hover_turn = config.hover_yaw_rate_deg.to_radians() / fps;

    let mut pos = start.position;
    let mut yaw = wrap_angle(start.yaw);
    let mut target: Option<CellIndex> = None;
    let mut path: VecDeque<Point> = VecDeque::new();
    let mut spin: Option<usize> = None;
    let mut exhausted_at: Option<usize> = None;
    let mut channels = Vec::with_capacity(n);
    let mut observed = Vec::with_capacity(n);

    for frame in 0..n {
        channels.push(SixDof {
            x: pos.x,
            y: pos.y,
            z: pos.z,
            roll,
            pitch,
            yaw,
        });
        let here = planner.grid.cell_of(&pos).expect("camera stays inside the grid");
        planner.mark_seen(here);
        if planner.grid.get(here) == CellState::Unknown {
            planner.grid.set(here, CellState::Free);
        }
        planner.sense(&pos, yaw, pitch);
        observed.push(planner.observed);
        if frame + 1 == n {
            break;
        }

        if target.is_some_and(|t| !planner.is_frontier(t)) {
            target = None;
            path.clear();
            spin = None;
        }
        if path.is_empty() && target.is_some() && spin.is_none() && max_turn > 0.0 {
            // arrived with the target still unresolved: look around once
            spin = Some((TAU / max_turn).ceil() as usize);
        }
        if let Some(left) = spin.as_mut() {
            if *left > 0 {
                *left -= 1;
                yaw = wrap_angle(yaw + max_turn);
                continue;
            }
        }
        if path.is_empty() {
            if let Some(t) = target.take() {
                let i = planner.grid.linear(t);
                planner.abandoned[i] = true;
            }
            spin = None;
            // an empty search is only repeated once the map has changed
            if step > 0.0 && exhausted_at != Some(planner.observed) {
                match planner.choose_target(here) {
                    Some((t, cells)) => {
                        target = Some(t);
                        path = planner.smooth(&pos, &cells).into();
                    }
                    None => exhausted_at = Some(planner.observed),
                }
            }
        }

        let before = pos;
        let mut budget = step;
        while budget > 0.0 {
            let Some(next) = path.front().copied() else { break };
            let d = (next - pos).norm();
            if d <= budget {
                pos = next;
                budget -= d;
                path.pop_front();
            } else {
                pos += (next - pos) * (budget / d);
                budget = 0.0;
            }
        }
        let moved = pos - before;
        if target.is_none() && path.is_empty() {
            yaw = wrap_angle(yaw + hover_turn);
        } else if moved.xy().norm() > 1e-12 {
            let want = moved.y.atan2(moved.x);
            let diff = wrap_angle(want - yaw);
            yaw = wrap_angle(yaw + diff.clamp(-max_turn, max_turn));
        }
    }

    Ok(Exploration {
        trajectory: Trajectory::from_channels(fps, &channels)?,
        channels,
        observed,
        grid: planner.grid,
    })
}
