//! Pinhole intrinsics, rigid poses and pixel projection.
//!
//! Camera frame: +z forward along the optical axis, +x right, +y down.
//! Poses are world-from-camera.

use nalgebra::{Matrix3, Point3, Rotation3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f32,
    pub fy: f32,
    pub cx: f32,
    pub cy: f32,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f32, fy: f32, cx: f32, cy: f32, width: usize, height: usize) -> Result<Self> {
        let intr = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx >= 0.0
            && self.cy >= 0.0
            && self.cx < self.width as f32
            && self.cy < self.height as f32;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid intrinsics {self:?}")))
        }
    }

    /// Camera-space direction through pixel (u, v), with unit z component.
    pub fn ray_direction(&self, u: f32, v: f32) -> Vector3<f32> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Camera-space point at pixel (u, v) with optical-axis depth `z`.
    pub fn back_project(&self, u: f32, v: f32, z: f32) -> Point3<f32> {
        Point3::from(self.ray_direction(u, v) * z)
    }
}

/// Rigid world-from-camera transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

const ORTHONORMAL_TOL: f64 = 1e-6;

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let pose = Pose {
            rotation,
            translation,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn identity() -> Self {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Pose {
            rotation: q.to_rotation_matrix().into_inner(),
            translation,
        }
    }

    /// Camera at `eye` looking at `target`, with image-up roughly along `up`.
    pub fn look_at(eye: Point3<f64>, target: Point3<f64>, up: Vector3<f64>) -> Result<Self> {
        let forward = target - eye;
        if forward.norm() == 0.0 {
            return Err(Error::InvalidParameter("look_at: eye equals target".into()));
        }
        let z = forward.normalize();
        let x = z.cross(&up);
        if x.norm() < 1e-9 {
            return Err(Error::InvalidParameter(
                "look_at: view direction parallel to up".into(),
            ));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        Pose::new(Matrix3::from_columns(&[x, y, z]), eye.coords)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        let orth = (r.transpose() * r - Matrix3::identity()).amax();
        let det = r.determinant();
        let finite = r.iter().chain(self.translation.iter()).all(|v| v.is_finite());
        if finite && orth <= ORTHONORMAL_TOL && (det - 1.0).abs() <= ORTHONORMAL_TOL {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "pose rotation not orthonormal (|RtR-I|={orth:e}, det={det})"
            )))
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.rotation))
    }

    pub fn camera_to_world(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn world_to_camera(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation.transpose() * (p.coords - self.translation))
    }
}

/// Result of projecting a point into an image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: usize,
    pub v: usize,
    /// Camera-space depth along the optical axis.
    pub z: f32,
}

/// Pose and intrinsics folded into single-precision world-to-image form.
#[derive(Debug, Clone, Copy)]
pub struct Projector {
    /// Rows of the world-to-camera rotation.
    rot: Matrix3<f32>,
    trans: Vector3<f32>,
    intr: CameraIntrinsics,
}

impl Projector {
    pub fn new(pose: &Pose, intr: &CameraIntrinsics) -> Self {
        let rt = pose.rotation.transpose();
        let t = -(rt * pose.translation);
        Projector {
            rot: rt.cast::<f32>(),
            trans: t.cast::<f32>(),
            intr: *intr,
        }
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intr
    }

    #[inline]
    pub fn to_camera(&self, p: &Point3<f32>) -> Point3<f32> {
        Point3::from(self.rot * p.coords + self.trans)
    }

    /// World-space change in camera coordinates per unit step along each world axis.
    pub fn axis_steps(&self) -> [Vector3<f32>; 3] {
        [
            self.rot.column(0).into(),
            self.rot.column(1).into(),
            self.rot.column(2).into(),
        ]
    }

    /// Continuous pixel coordinates of a camera-space point; `None` when z <= 0.
    #[inline]
    pub fn pixel_of_camera_point(&self, c: &Point3<f32>) -> Option<(f32, f32)> {
        if c.z <= 0.0 {
            return None;
        }
        let inv_z = 1.0 / c.z;
        Some((
            self.intr.fx * c.x * inv_z + self.intr.cx,
            self.intr.fy * c.y * inv_z + self.intr.cy,
        ))
    }

    /// Nearest-pixel projection of a camera-space point.
    #[inline]
    pub fn project_camera_point(&self, c: &Point3<f32>) -> Option<Projection> {
        let (u, v) = self.pixel_of_camera_point(c)?;
        let (u, v) = (u.round(), v.round());
        if u < 0.0 || v < 0.0 || u >= self.intr.width as f32 || v >= self.intr.height as f32 {
            return None;
        }
        Some(Projection {
            u: u as usize,
            v: v as usize,
            z: c.z,
        })
    }

    #[inline]
    pub fn project(&self, p: &Point3<f32>) -> Option<Projection> {
        self.project_camera_point(&self.to_camera(p))
    }
}

/// Project a world point to its nearest pixel, or `None` when it is behind
/// the camera or outside the image.
pub fn project(point: &Point3<f32>, pose: &Pose, intr: &CameraIntrinsics) -> Option<Projection> {
    Projector::new(pose, intr).project(point)
}
