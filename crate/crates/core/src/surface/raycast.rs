use nalgebra::{Point3, Vector3};

use crate::camera::{CameraIntrinsics, Pose};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::volume::{LabelId, VoxelGrid};

/// Per-pixel output of [`raycast`].
#[derive(Debug, Clone, PartialEq)]
pub struct RaycastImages {
    pub label: Image<LabelId>,
    /// Label score of the hit voxel; 0 where `label` is unlabeled.
    pub confidence: Image<f32>,
    /// Optical-axis depth of the surface crossing; 0 where nothing was hit.
    pub depth: Image<f32>,
    /// |cos| between the surface normal and the viewing ray, in [0, 1].
    pub normal_shading: Image<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Hit {
    depth: f32,
    label: LabelId,
    confidence: f32,
    shading: f32,
}

/// Render label, confidence, depth and shading images of the fused surface
/// seen from `pose`. Marches each pixel ray at half-voxel steps up to
/// `max_range` meters and refines the first positive-to-negative crossing
/// linearly.
pub fn raycast(
    grid: &VoxelGrid,
    pose: &Pose,
    intr: &CameraIntrinsics,
    max_range: f32,
) -> Result<RaycastImages> {
    if !(max_range > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "max_range must be > 0, got {max_range}"
        )));
    }
    intr.validate()?;
    let (w, h) = (intr.width, intr.height);
    let rot = pose.rotation().cast::<f32>();
    let eye = Point3::from(pose.translation().cast::<f32>());

    let trace_row = |v: usize| -> Vec<Option<Hit>> {
        (0..w)
            .map(|u| {
                let dir_cam = intr.ray_direction(u as f32, v as f32);
                trace(grid, &eye, &(rot * dir_cam), max_range)
            })
            .collect()
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<Option<Hit>>> = {
        use rayon::prelude::*;
        (0..h).into_par_iter().map(trace_row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<Option<Hit>>> = (0..h).map(trace_row).collect();

    let mut out = RaycastImages {
        label: Image::filled(w, h, LabelId::UNLABELED),
        confidence: Image::filled(w, h, 0.0),
        depth: Image::filled(w, h, 0.0),
        normal_shading: Image::filled(w, h, 0.0),
    };
    for (v, row) in rows.into_iter().enumerate() {
        for (u, hit) in row.into_iter().enumerate() {
            if let Some(hit) = hit {
                out.label.set(u, v, hit.label);
                out.confidence.set(u, v, hit.confidence);
                out.depth.set(u, v, hit.depth);
                out.normal_shading.set(u, v, hit.shading);
            }
        }
    }
    Ok(out)
}

/// Parameter interval of `eye + t * dir` inside the grid's bounding box.
fn clip_to_box(grid: &VoxelGrid, eye: &Point3<f32>, dir: &Vector3<f32>) -> Option<(f32, f32)> {
    let lo = grid.params().world_min();
    let hi = grid.params().world_max();
    let (mut t0, mut t1) = (0.0f32, f32::INFINITY);
    for a in 0..3 {
        if dir[a] == 0.0 {
            if eye[a] < lo[a] || eye[a] > hi[a] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dir[a];
        let (mut ta, mut tb) = ((lo[a] - eye[a]) * inv, (hi[a] - eye[a]) * inv);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
    }
    (t0 <= t1).then_some((t0, t1))
}

/// `dir` has unit camera-space z, so the ray parameter equals optical depth.
fn trace(grid: &VoxelGrid, eye: &Point3<f32>, dir: &Vector3<f32>, max_range: f32) -> Option<Hit> {
    let len = dir.norm();
    let step = 0.5 * grid.params().voxel_size / len;
    let (t_enter, t_exit) = clip_to_box(grid, eye, dir)?;
    let t_end = t_exit.min(max_range / len);

    let mut t = t_enter;
    let mut prev: Option<(f32, f32)> = None;
    while t <= t_end {
        let sample = grid.trilinear_sdf(&(eye + dir * t));
        match (prev, sample) {
            (Some((tp, sp)), Some(sc)) if sp > 0.0 && sc <= 0.0 => {
                let tc = tp + (t - tp) * sp / (sp - sc);
                return Some(surface_hit(grid, eye, dir, tc));
            }
            _ => {}
        }
        prev = sample.map(|s| (t, s));
        t += step;
    }
    None
}

fn surface_hit(grid: &VoxelGrid, eye: &Point3<f32>, dir: &Vector3<f32>, t: f32) -> Hit {
    let p = eye + dir * t;
    let (label, confidence) = match grid.nearest_voxel(&p).and_then(|i| grid.get(i)) {
        Some(v) if !v.label.is_unlabeled() => (v.label, v.score),
        _ => (LabelId::UNLABELED, 0.0),
    };
    let shading = sdf_gradient(grid, &p)
        .and_then(|g| g.try_normalize(1e-12))
        .map(|n| (-n.dot(&dir.normalize())).clamp(0.0, 1.0))
        .unwrap_or(0.0);
    Hit {
        depth: t,
        label,
        confidence,
        shading,
    }
}

/// Central-difference gradient of the interpolated sdf, one voxel apart.
pub(crate) fn sdf_gradient(grid: &VoxelGrid, p: &Point3<f32>) -> Option<Vector3<f32>> {
    let h = grid.params().voxel_size;
    let mut g = Vector3::zeros();
    for a in 0..3 {
        let mut off = Vector3::zeros();
        off[a] = h;
        let f1 = grid.trilinear_sdf(&(p + off))?;
        let f0 = grid.trilinear_sdf(&(p - off))?;
        g[a] = (f1 - f0) / (2.0 * h);
    }
    Some(g)
}
