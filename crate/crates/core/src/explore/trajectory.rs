use std::fmt::Write as _;

use nalgebra::UnitQuaternion;

use crate::geomesh::Point;

use super::ExploreError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub t: f64,
    pub position: Point,
    /// Body-to-world rotation. Body axes: x forward, y left, z up.
    pub orientation: UnitQuaternion<f64>,
}

/// The six independently driven joints of the camera carrier. Orientation is
/// `Rz(yaw) * Ry(pitch) * Rx(roll)`; positive pitch tilts the view downward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixDof {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl SixDof {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y, self.z)
    }

    pub fn orientation(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_euler_angles(self.roll, self.pitch, self.yaw)
    }
}

/// Camera poses sampled at a fixed rate; pose `i` sits at `t = i / fps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    fps: f64,
    poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(
        fps: f64,
        samples: impl IntoIterator<Item = (Point, UnitQuaternion<f64>)>,
    ) -> Result<Self, ExploreError> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(ExploreError::InvalidConfig(format!("fps {fps} must be positive")));
        }
        let poses = samples
            .into_iter()
            .enumerate()
            .map(|(i, (position, orientation))| Pose {
                t: i as f64 / fps,
                position,
                orientation,
            })
            .collect();
        Ok(Trajectory { fps, poses })
    }

    pub fn from_channels(fps: f64, channels: &[SixDof]) -> Result<Self, ExploreError> {
        Self::new(fps, channels.iter().map(|c| (c.position(), c.orientation())))
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Time of the last pose.
    pub fn duration(&self) -> f64 {
        self.poses.last().map_or(0.0, |p| p.t)
    }

    pub fn channels(&self) -> Vec<SixDof> {
        self.poses
            .iter()
            .map(|p| {
                let (roll, pitch, yaw) = p.orientation.euler_angles();
                SixDof {
                    x: p.position.x,
                    y: p.position.y,
                    z: p.position.z,
                    roll,
                    pitch,
                    yaw,
                }
            })
            .collect()
    }

    /// Pose at an arbitrary time: linear in position, spherical in rotation.
    pub fn pose_at(&self, t: f64) -> Result<Pose, ExploreError> {
        let duration = self.duration();
        if self.poses.is_empty() || !(t >= 0.0 && t <= duration + 1e-9) {
            return Err(ExploreError::OutOfRange { t, duration });
        }
        let s = (t * self.fps).min((self.poses.len() - 1) as f64);
        let i = s.floor() as usize;
        let a = &self.poses[i];
        if i + 1 >= self.poses.len() || s == i as f64 {
            return Ok(Pose { t, ..*a });
        }
        let b = &self.poses[i + 1];
        let alpha = s - i as f64;
        let orientation = a
            .orientation
            .try_slerp(&b.orientation, alpha, 1e-12)
            .unwrap_or(if alpha < 0.5 { a.orientation } else { b.orientation });
        Ok(Pose {
            t,
            position: a.position + (b.position - a.position) * alpha,
            orientation,
        })
    }

    /// Plain-text form: `frame t x y z qw qx qy qz` per line after a header.
    pub fn to_text(&self) -> String {
        let mut s = format!("# fps {}\n# frame t x y z qw qx qy qz\n", self.fps);
        for (i, p) in self.poses.iter().enumerate() {
            let q = p.orientation.quaternion();
            let _ = writeln!(
                s,
                "{i} {} {} {} {} {} {} {} {}",
                p.t, p.position.x, p.position.y, p.position.z, q.w, q.i, q.j, q.k
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ExploreError> {
        let mut fps = None;
        let mut samples = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("fps") {
                    let v = it.next().ok_or_else(|| parse_err(line_no, "missing fps value"))?;
                    fps = Some(parse_f64(v, line_no)?);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 9 {
                return Err(parse_err(line_no, format!("expected 9 fields, found {}", fields.len())));
            }
            let frame: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad frame index '{}'", fields[0])))?;
            if frame != samples.len() {
                return Err(parse_err(line_no, format!("expected frame {}, found {frame}", samples.len())));
            }
            let v = fields[1..]
                .iter()
                .map(|f| parse_f64(f, line_no))
                .collect::<Result<Vec<_>, _>>()?;
            let q = nalgebra::Quaternion::new(v[4], v[5], v[6], v[7]);
            if (q.norm() - 1.0).abs() > 1e-6 {
                return Err(parse_err(line_no, "quaternion is not unit length"));
            }
            // keep already-normalized values bit-exact
            let q = if (q.norm() - 1.0).abs() <= 1e-12 {
                UnitQuaternion::new_unchecked(q)
            } else {
                UnitQuaternion::new_normalize(q)
            };
            samples.push((line_no, v[0], Point::new(v[1], v[2], v[3]), q));
        }
        let fps = fps.ok_or_else(|| parse_err(1, "missing '# fps' header"))?;
        let traj = Trajectory::new(fps, samples.iter().map(|&(_, _, p, q)| (p, q)))?;
        for (i, (line_no, t, _, _)) in samples.iter().enumerate() {
            if (t - traj.poses[i].t).abs() > 1e-9 {
                return Err(parse_err(*line_no, format!("timestamp {t} does not match frame {i} at {fps} fps")));
            }
        }
        Ok(traj)
    }
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> ExploreError {
    ExploreError::Parse {
        line,
        message: message.into(),
    }
}

pub(crate) fn parse_f64(s: &str, line: usize) -> Result<f64, ExploreError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(line, format!("bad number '{s}'")))
}
