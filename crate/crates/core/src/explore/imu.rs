use std::fmt::Write as _;

use crate::geomesh::Vec3;

use super::trajectory::{parse_err, parse_f64};
use super::{ExploreError, Trajectory};

pub const GRAVITY: f64 = 9.81;

/// Synthetic inertial reading in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    /// Angular velocity, rad/s.
    pub gyro: Vec3,
    /// Specific force `R^T (a - g)`, m/s².
    pub accel: Vec3,
}

/// Central differences over the pose stream. The first and last samples reuse
/// their neighbour's derivatives.
pub fn derive_imu(traj: &Trajectory) -> Result<Vec<ImuSample>, ExploreError> {
    let poses = traj.poses();
    let n = poses.len();
    if n < 3 {
        return Err(ExploreError::TooShort { poses: n });
    }
    let fps = traj.fps();
    let g = Vec3::new(0.0, 0.0, -GRAVITY);
    let interior = |i: usize| {
        let (a, b, c) = (&poses[i - 1], &poses[i], &poses[i + 1]);
        let acc = (c.position.coords - b.position.coords * 2.0 + a.position.coords) * (fps * fps);
        let rel = a.orientation.inverse() * c.orientation;
        let gyro = rel.scaled_axis() * (fps / 2.0);
        let accel = b.orientation.inverse_transform_vector(&(acc - g));
        (gyro, accel)
    };
    Ok((0..n)
        .map(|i| {
            let (gyro, accel) = interior(i.clamp(1, n - 2));
            ImuSample {
                t: poses[i].t,
                gyro,
                accel,
            }
        })
        .collect())
}

/// Plain-text form: `t gx gy gz ax ay az` per line after a header.
pub fn imu_to_text(samples: &[ImuSample]) -> String {
    let mut s = String::from("# t gx gy gz ax ay az\n");
    for m in samples {
        let _ = writeln!(
            s,
            "{} {} {} {} {} {} {}",
            m.t, m.gyro.x, m.gyro.y, m.gyro.z, m.accel.x, m.accel.y, m.accel.z
        );
    }
    s
}

pub fn imu_from_text(text: &str) -> Result<Vec<ImuSample>, ExploreError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = line
            .split_whitespace()
            .map(|f| parse_f64(f, n + 1))
            .collect::<Result<Vec<_>, _>>()?;
        if v.len() != 7 {
            return Err(parse_err(n + 1, format!("expected 7 fields, found {}", v.len())));
        }
        out.push(ImuSample {
            t: v[0],
            gyro: Vec3::new(v[1], v[2], v[3]),
            accel: Vec3::new(v[4], v[5], v[6]),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomesh::Point;
    use nalgebra::UnitQuaternion;

    #[test]
    fn static_reads_gravity() {
        let q = UnitQuaternion::from_euler_angles(0.0, 0.0, 0.7);
        let traj = Trajectory::new(30.0, (0..5).map(|_| (Point::new(1.0, 2.0, 1.0), q))).unwrap();
        for m in derive_imu(&traj).unwrap() {
            assert!(m.gyro.norm() < 1e-12);
            assert!((m.accel - Vec3::new(0.0, 0.0, GRAVITY)).norm() < 1e-9);
        }
    }

    #[test]
    fn constant_yaw_rate() {
        let traj = Trajectory::new(
            30.0,
            (0..10).map(|i| {
                (Point::origin(), UnitQuaternion::from_euler_angles(0.0, 0.0, 0.5 * i as f64 / 30.0))
            }),
        )
        .unwrap();
        for m in derive_imu(&traj).unwrap() {
            assert!((m.gyro - Vec3::new(0.0, 0.0, 0.5)).norm() < 1e-9);
        }
    }

    #[test]
    fn too_short() {
        let traj = Trajectory::new(30.0, (0..2).map(|_| (Point::origin(), UnitQuaternion::identity()))).unwrap();
        assert!(matches!(derive_imu(&traj), Err(ExploreError::TooShort { poses: 2 })));
    }

    #[test]
    fn text_roundtrip() {
        let traj = Trajectory::new(
            30.0,
            (0..4).map(|i| (Point::new(0.1 * (i * i) as f64, 0.0, 1.0), UnitQuaternion::identity())),
        )
        .unwrap();
        let imu = derive_imu(&traj).unwrap();
        assert_eq!(imu_from_text(&imu_to_text(&imu)).unwrap(), imu);
    }
}
