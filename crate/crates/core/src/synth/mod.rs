//! Synthetic labeled scenes: analytic ground-truth rendering, orbit
//! trajectories and the label-switching noise model.

mod noise;
mod scene;

pub use noise::{add_depth_noise, corrupt_labels, NoiseSpec};
pub use scene::{default_room_scene, Aabb, Scene, SceneObject, Shape};

use std::f64::consts::TAU;

use nalgebra::{Point3, Vector3};

use crate::camera::{CameraIntrinsics, Pose};
use crate::error::{Error, Result};
use crate::fusion::{LabeledFrame, Labeling};
use crate::image::Image;
use crate::volume::LabelId;

/// Ground-truth depth and category maps by ray casting the scene's boxes.
///
/// Depth is the optical-axis distance to the nearest hit; pixels whose ray
/// leaves the scene without a hit are background with invalid (0) depth.
/// Every labeled pixel gets score 1.0.
pub fn render_frame(scene: &Scene, pose: &Pose, intr: &CameraIntrinsics) -> LabeledFrame {
    let (w, h) = (intr.width, intr.height);
    let mut depth = Image::filled(w, h, 0.0f32);
    let mut category = Image::filled(w, h, LabelId::BACKGROUND);
    let boxes: Vec<(Aabb, LabelId)> = scene
        .objects
        .iter()
        .map(|o| (o.aabb(&scene.bounds), o.label))
        .collect();
    let eye = Point3::from(*pose.translation());
    let rot = pose.rotation();

    for v in 0..h {
        for u in 0..w {
            let d_cam = Vector3::new(
                (u as f64 - intr.cx as f64) / intr.fx as f64,
                (v as f64 - intr.cy as f64) / intr.fy as f64,
                1.0,
            );
            let dir = rot * d_cam;
            let nearest = boxes
                .iter()
                .filter_map(|(b, l)| b.ray_entry(&eye, &dir).map(|t| (t, *l)))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((t, label)) = nearest {
                depth.set(u, v, t as f32);
                category.set(u, v, label);
            }
        }
    }
    let score = Image::filled(w, h, 1.0f32);
    LabeledFrame {
        depth,
        labeling: Some(Labeling { category, score }),
        pose: *pose,
        intr: *intr,
    }
}

/// `n_frames` poses evenly spaced on a horizontal circle around the scene
/// centroid at world height `height`, each looking at the centroid.
pub fn generate_orbit(scene: &Scene, n_frames: usize, radius: f64, height: f64) -> Result<Vec<Pose>> {
    if n_frames == 0 {
        return Err(Error::InvalidParameter("orbit needs at least one frame".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("orbit radius must be > 0, got {radius}")));
    }
    let c = scene.centroid();
    (0..n_frames)
        .map(|i| {
            let angle = TAU * i as f64 / n_frames as f64;
            let eye = Point3::new(c.x + radius * angle.cos(), c.y + radius * angle.sin(), height);
            Pose::look_at(eye, c, Vector3::z())
        })
        .collect()
}
