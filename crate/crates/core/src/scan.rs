//! In-memory scan frames: a sensor pose, the points it saw and one evidence
//! row per point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::ClassEvidence;
use crate::scalar::Scalar;

/// Rigid sensor-to-world transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T> {
    rotation: [[T; 3]; 3],
    translation: [T; 3],
}

impl<T: Scalar> Pose<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            rotation: [[o, z, z], [z, o, z], [z, z, o]],
            translation: [z; 3],
        }
    }

    pub fn new(rotation: [[T; 3]; 3], translation: [T; 3]) -> Result<Self> {
        let tol = T::lit(1e-6);
        let all = rotation.iter().flatten().chain(translation.iter());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("pose contains a non-finite value"));
        }
        for i in 0..3 {
            for j in 0..3 {
                let dot = (0..3).fold(T::zero(), |acc, k| acc + rotation[i][k] * rotation[j][k]);
                let want = if i == j { T::one() } else { T::zero() };
                if (dot - want).abs() > tol {
                    return Err(Error::invalid("pose rotation is not orthonormal"));
                }
            }
        }
        let r = &rotation;
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if (det - T::one()).abs() > tol {
            return Err(Error::invalid(format!(
                "pose rotation has determinant {det}, not +1"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Rotation about +z by `yaw` radians, then translation.
    pub fn from_yaw(yaw: T, translation: [T; 3]) -> Self {
        let (s, c) = yaw.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self {
            rotation: [[c, -s, z], [s, c, z], [z, z, o]],
            translation,
        }
    }

    /// Parses a homogeneous 4x4 matrix given row-major.
    pub fn from_row_major(m: &[T; 16]) -> Result<Self> {
        let (z, o) = (T::zero(), T::one());
        if m[12] != z || m[13] != z || m[14] != z || m[15] != o {
            return Err(Error::invalid("pose bottom row must be [0, 0, 0, 1]"));
        }
        Self::new(
            [[m[0], m[1], m[2]], [m[4], m[5], m[6]], [m[8], m[9], m[10]]],
            [m[3], m[7], m[11]],
        )
    }

    pub fn to_row_major(&self) -> [T; 16] {
        let r = &self.rotation;
        let t = &self.translation;
        let (z, o) = (T::zero(), T::one());
        [
            r[0][0], r[0][1], r[0][2], t[0], //
            r[1][0], r[1][1], r[1][2], t[1], //
            r[2][0], r[2][1], r[2][2], t[2], //
            z, z, z, o,
        ]
    }

    pub fn rotation(&self) -> &[[T; 3]; 3] {
        &self.rotation
    }

    pub fn translation(&self) -> [T; 3] {
        self.translation
    }

    pub fn transform_point(&self, p: [T; 3]) -> [T; 3] {
        let r = &self.rotation;
        let t = &self.translation;
        std::array::from_fn(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + t[i])
    }

    /// World-to-sensor transform.
    pub fn inverse(&self) -> Self {
        let r = &self.rotation;
        let rt: [[T; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| r[j][i]));
        let t = self.translation;
        let ti = std::array::from_fn(|i| -(rt[i][0] * t[0] + rt[i][1] * t[1] + rt[i][2] * t[2]));
        Self {
            rotation: rt,
            translation: ti,
        }
    }
}

/// Coordinate frame the points of a [`ScanFrame`] are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointFrame {
    Sensor,
    World,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanFrame<T> {
    seq: u64,
    pose: Pose<T>,
    frame: PointFrame,
    num_classes: usize,
    points: Vec<[T; 3]>,
    evidence: Vec<ClassEvidence<T>>,
}

impl<T: Scalar> ScanFrame<T> {
    /// Builds a sensor-frame scan. Every evidence row must have `num_classes` entries.
    pub fn new(
        seq: u64,
        pose: Pose<T>,
        num_classes: usize,
        points: Vec<[T; 3]>,
        evidence: Vec<ClassEvidence<T>>,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if points.len() != evidence.len() {
            return Err(Error::invalid(format!(
                "{} points but {} evidence rows",
                points.len(),
                evidence.len()
            )));
        }
        if let Some((i, e)) = evidence
            .iter()
            .enumerate()
            .find(|(_, e)| e.num_classes() != num_classes)
        {
            return Err(Error::invalid(format!(
                "evidence row {i} has {} classes, expected {num_classes}",
                e.num_classes()
            )));
        }
        Ok(Self {
            seq,
            pose,
            frame: PointFrame::Sensor,
            num_classes,
            points,
            evidence,
        })
    }

    /// Scan with an identity pose whose points are already in world coordinates.
    pub fn in_world(
        seq: u64,
        num_classes: usize,
        points: Vec<[T; 3]>,
        evidence: Vec<ClassEvidence<T>>,
    ) -> Result<Self> {
        let mut scan = Self::new(seq, Pose::identity(), num_classes, points, evidence)?;
        scan.frame = PointFrame::World;
        Ok(scan)
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn pose(&self) -> &Pose<T> {
        &self.pose
    }

    pub fn frame(&self) -> PointFrame {
        self.frame
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[T; 3]] {
        &self.points
    }

    pub fn evidence(&self) -> &[ClassEvidence<T>] {
        &self.evidence
    }

    /// Sensor position in world coordinates.
    pub fn sensor_origin(&self) -> [T; 3] {
        self.pose.translation
    }

    /// Applies the pose to every point. The pose is kept so the sensor origin
    /// stays known; evidence rows are untouched.
    pub fn to_world(&self) -> Self {
        match self.frame {
            PointFrame::World => self.clone(),
            PointFrame::Sensor => Self {
                points: self
                    .points
                    .iter()
                    .map(|&p| self.pose.transform_point(p))
                    .collect(),
                frame: PointFrame::World,
                ..self.clone()
            },
        }
    }
}
