use std::sync::Arc;

use nalgebra::UnitQuaternion;
use proptest::prelude::*;
use synthscene::explore::*;
use synthscene::geomesh::{Point, Vec3};
use synthscene::procedural::box_mesh;
use synthscene::scenegen::{Environment, Scene, StaticMesh};

fn empty_scene(env: Environment) -> Scene {
    Scene::static_scene(Arc::new(env))
}

fn run_room(size: Vec3, seed: u64, duration: f64, config: &ExploreConfig) -> Exploration {
    let scene = empty_scene(Environment::box_room("room", size));
    let grid = voxelize(&scene.environment, config.cell_size, config.max_cells).unwrap();
    let start = random_free_start(&grid, &scene, seed, config).unwrap();
    plan_exploration(grid, &start, 0.0, duration, 30.0, config).unwrap()
}

/// Every cell whose closed box touches the surface of the unit cube
/// `[lo, lo + 1]^3`, enumerated analytically: a cell overlaps the surface iff
/// it overlaps the solid cube but is not strictly inside it.
fn shell_cells(origin: f64, lo: f64, cell: f64, dims: usize) -> Vec<[usize; 3]> {
    let hi = lo + 1.0;
    let mut out = Vec::new();
    for z in 0..dims {
        for y in 0..dims {
            for x in 0..dims {
                let c = [x, y, z];
                let min: Vec<f64> = c.iter().map(|&i| origin + i as f64 * cell).collect();
                let max: Vec<f64> = min.iter().map(|m| m + cell).collect();
                let touches_solid = (0..3).all(|i| min[i] <= hi && max[i] >= lo);
                let strictly_inside = (0..3).all(|i| min[i] > lo && max[i] < hi);
                if touches_solid && !strictly_inside {
                    out.push(c);
                }
            }
        }
    }
    out
}

#[test]
fn empty_environment_is_all_unknown() {
    let bounds = synthscene::geomesh::Aabb::new(Point::origin(), Point::new(2.0, 2.0, 2.0));
    let env = Environment::new("void", vec![], 0.0, Some(bounds)).unwrap();
    let g = voxelize(&env, 0.5, 1000).unwrap();
    assert_eq!(g.count(CellState::Unknown), g.len());
    assert_eq!(g.dims(), [4, 4, 4]);
}

#[test]
fn cube_voxelizes_to_its_shell() {
    // cube [0.25, 1.25]^3 inside a [0, 2]^3 region; cell 0.5 puts every face
    // in the interior of a cell layer
    let bounds = synthscene::geomesh::Aabb::new(Point::origin(), Point::new(2.0, 2.0, 2.0));
    let cube = box_mesh("cube", Point::new(0.25, 0.25, 0.25), Point::new(1.25, 1.25, 1.25));
    let env = Environment::new("cube", vec![StaticMesh::new(cube, "box")], 0.0, Some(bounds)).unwrap();
    let g = voxelize(&env, 0.5, 1000).unwrap();
    let mut got: Vec<[usize; 3]> = (0..g.len())
        .filter(|&i| g.states()[i] == CellState::Occupied)
        .map(|i| g.unlinear(i))
        .collect();
    got.sort();
    let mut want = shell_cells(0.0, 0.25, 0.5, 4);
    want.sort();
    assert_eq!(got, want);
    assert_eq!(want.len(), 26);
}

#[test]
fn tiny_cells_exceed_budget() {
    let env = Environment::box_room("r", Vec3::new(10.0, 10.0, 10.0));
    assert!(matches!(voxelize(&env, 1e-6, 8_000_000), Err(ExploreError::GridTooLarge { .. })));
}

#[test]
fn fully_occupied_has_no_start() {
    let g = OccupancyGrid::new(Point::origin(), 1.0, [3, 3, 3], CellState::Occupied);
    let scene = empty_scene(Environment::box_room("r", Vec3::new(3.0, 3.0, 3.0)));
    assert!(matches!(
        random_free_start(&g, &scene, 1, &ExploreConfig::default()),
        Err(ExploreError::NoFreeSpace)
    ));
}

#[test]
fn single_free_cell_is_the_start() {
    let mut g = OccupancyGrid::new(Point::origin(), 1.0, [3, 3, 3], CellState::Occupied);
    g.set([2, 1, 0], CellState::Unknown);
    let scene = empty_scene(Environment::box_room("r", Vec3::new(3.0, 3.0, 3.0)));
    for seed in 0..5 {
        let s = random_free_start(&g, &scene, seed, &ExploreConfig::default()).unwrap();
        assert_eq!(s.position, Point::new(2.5, 1.5, 0.5));
    }
}

#[test]
fn start_is_deterministic() {
    let scene = empty_scene(Environment::box_room("r", Vec3::new(5.0, 4.0, 2.5)));
    let cfg = ExploreConfig::default();
    let g = voxelize(&scene.environment, cfg.cell_size, cfg.max_cells).unwrap();
    let a = random_free_start(&g, &scene, 42, &cfg).unwrap();
    let b = random_free_start(&g, &scene, 42, &cfg).unwrap();
    let c = random_free_start(&g, &scene, 43, &cfg).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn sixty_seconds_at_thirty_fps() {
    let ex = run_room(Vec3::new(5.0, 5.0, 2.5), 3, 60.0, &ExploreConfig::default());
    assert_eq!(ex.trajectory.len(), 1800);
    for (i, p) in ex.trajectory.poses().iter().enumerate() {
        assert_eq!(p.t, i as f64 / 30.0);
    }
}

#[test]
fn empty_room_is_covered() {
    for seed in [1, 2, 3] {
        let ex = run_room(Vec3::new(5.0, 5.0, 2.5), seed, 60.0, &ExploreConfig::default());
        let cov = ex.free_coverage();
        assert!(cov >= 0.95, "seed {seed}: coverage {cov}");
    }
}

#[test]
fn zero_speed_hovers_in_place() {
    let cfg = ExploreConfig {
        v_max: 0.0,
        ..Default::default()
    };
    let ex = run_room(Vec3::new(5.0, 5.0, 2.5), 9, 2.0, &cfg);
    let p0 = ex.trajectory.poses()[0].position;
    assert!(ex.trajectory.poses().iter().all(|p| p.position == p0));
}

fn check_invariants(ex: &Exploration, v_max: f64, fps: f64) {
    let poses = ex.trajectory.poses();
    for w in poses.windows(2) {
        assert!((w[1].position - w[0].position).norm() <= v_max / fps + 1e-9);
    }
    for p in poses {
        let c = ex.grid.cell_of(&p.position).expect("inside grid");
        assert_eq!(ex.grid.get(c), CellState::Free, "pose at {:?}", p.position);
    }
    for w in ex.observed.windows(2) {
        assert!(w[1] >= w[0]);
    }
}

#[test]
fn obstacle_room_invariants() {
    let cfg = ExploreConfig::default();
    let table = box_mesh("table", Point::new(1.5, 1.0, 0.0), Point::new(3.0, 2.5, 0.9));
    let pillar = box_mesh("pillar", Point::new(4.0, 3.0, 0.0), Point::new(4.6, 3.6, 2.5));
    let env = Environment::box_room_with(
        "furnished",
        Vec3::new(6.0, 5.0, 2.5),
        vec![StaticMesh::new(table, "table"), StaticMesh::new(pillar, "pillar")],
    );
    let scene = empty_scene(env);
    let grid = voxelize(&scene.environment, cfg.cell_size, cfg.max_cells).unwrap();
    let start = random_free_start(&grid, &scene, 5, &cfg).unwrap();
    let a = plan_exploration(grid.clone(), &start, 0.0, 30.0, 30.0, &cfg).unwrap();
    let b = plan_exploration(grid, &start, 0.0, 30.0, 30.0, &cfg).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
    check_invariants(&a, cfg.v_max, 30.0);
}

#[test]
fn files_roundtrip() {
    let ex = run_room(Vec3::new(4.0, 4.0, 2.5), 2, 3.0, &ExploreConfig::default());
    let back = Trajectory::from_text(&ex.trajectory.to_text()).unwrap();
    assert_eq!(back, ex.trajectory);
    let imu = derive_imu(&ex.trajectory).unwrap();
    assert_eq!(imu.len(), ex.trajectory.len());
    assert!(imu.iter().all(|m| m.gyro.iter().chain(m.accel.iter()).all(|v| v.is_finite())));
    assert_eq!(imu_from_text(&imu_to_text(&imu)).unwrap(), imu);
}

/// Circle of radius `r` at speed `v`, facing along the tangent.
fn circle(r: f64, v: f64, fps: f64, n: usize) -> Trajectory {
    let w = v / r;
    Trajectory::new(
        fps,
        (0..n).map(|i| {
            let t = i as f64 / fps;
            let th = w * t;
            (
                Point::new(r * th.cos(), r * th.sin(), 1.5),
                UnitQuaternion::from_euler_angles(0.0, 0.0, th + std::f64::consts::FRAC_PI_2),
            )
        }),
    )
    .unwrap()
}

#[test]
fn circular_motion_centripetal_force() {
    let (r, v) = (2.0, 1.5);
    let expected = v * v / r;
    let imu = derive_imu(&circle(r, v, 30.0, 200)).unwrap();
    for m in &imu[1..imu.len() - 1] {
        let planar = m.accel.xy().norm();
        assert!((planar - expected).abs() / expected <= 0.01, "{planar} vs {expected}");
        assert!((m.accel.z - GRAVITY).abs() < 1e-9);
        assert!((m.gyro.z - v / r).abs() < 1e-6);
    }
}

#[test]
fn derivative_error_shrinks_with_rate() {
    // closed-form pose: p(t) = (sin 2t, cos 3t, 0.5 t^3), yaw(t) = sin t
    let exact_acc = |t: f64| Vec3::new(-4.0 * (2.0 * t).sin(), -9.0 * (3.0 * t).cos(), 3.0 * t);
    let worst = |fps: f64| {
        let n = (2.0 * fps) as usize + 1;
        let traj = Trajectory::new(
            fps,
            (0..n).map(|i| {
                let t = i as f64 / fps;
                (
                    Point::new((2.0 * t).sin(), (3.0 * t).cos(), 0.5 * t.powi(3)),
                    UnitQuaternion::from_euler_angles(0.0, 0.0, t.sin()),
                )
            }),
        )
        .unwrap();
        let imu = derive_imu(&traj).unwrap();
        let mut err: f64 = 0.0;
        for (i, m) in imu.iter().enumerate().take(n - 1).skip(1) {
            let t = i as f64 / fps;
            let q = UnitQuaternion::from_euler_angles(0.0, 0.0, t.sin());
            let want = q.inverse_transform_vector(&(exact_acc(t) - Vec3::new(0.0, 0.0, -GRAVITY)));
            err = err.max((m.accel - want).norm());
            err = err.max((m.gyro.z - t.cos()).abs());
        }
        err
    };
    let (e15, e30) = (worst(15.0), worst(30.0));
    assert!(e15 / e30 >= 3.0, "{e15} vs {e30}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn planner_invariants(seed in 0u64..1000, sx in 3.0f64..7.0, sy in 3.0f64..7.0, v in 0.0f64..2.0) {
        let cfg = ExploreConfig { v_max: v, ..Default::default() };
        let ex = run_room(Vec3::new(sx, sy, 2.6), seed, 5.0, &cfg);
        prop_assert_eq!(ex.trajectory.len(), 150);
        check_invariants(&ex, v, 30.0);
    }
}
