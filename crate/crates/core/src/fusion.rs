//! Per-frame integration of depth and semantic labels into a [`VoxelGrid`].
//!
//! Every voxel is visited once per frame, its center projected into the
//! frame, and the nearest pixel sampled. Depth goes through a capped running
//! average; labels go through the evidence-weighted rule in
//! [`update_voxel_label`]. Voxels are independent within a frame, so z-slices
//! are processed in parallel when the `parallel` feature is on.

use std::borrow::Borrow;

use nalgebra::Point3;

use crate::camera::{CameraIntrinsics, Pose, Projector};
use crate::error::{Error, Result};
use crate::image::{DepthImage, Image, ScoreMap};
use crate::volume::{LabelId, Voxel, VoxelGrid};

/// Category and score maps produced by a labeler for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    pub category: Image<LabelId>,
    pub score: ScoreMap,
}

/// One fusion input: depth, optional labeling, pose and intrinsics.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    pub depth: DepthImage,
    pub labeling: Option<Labeling>,
    pub pose: Pose,
    pub intr: CameraIntrinsics,
}

impl LabeledFrame {
    pub fn new(
        depth: DepthImage,
        labeling: Option<Labeling>,
        pose: Pose,
        intr: CameraIntrinsics,
    ) -> Result<Self> {
        let frame = LabeledFrame {
            depth,
            labeling,
            pose,
            intr,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<()> {
        self.intr.validate()?;
        self.pose.validate()?;
        let expect = (self.intr.width, self.intr.height);
        let check = |what: &str, dims: (usize, usize)| {
            if dims == expect {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(format!(
                    "{what} is {}x{}, intrinsics say {}x{}",
                    dims.0, dims.1, expect.0, expect.1
                )))
            }
        };
        check("depth image", self.depth.dims())?;
        if let Some(lab) = &self.labeling {
            check("category map", lab.category.dims())?;
            check("score map", lab.score.dims())?;
            if let Some(bad) = lab.score.as_slice().iter().find(|s| !(0.0..=1.0).contains(*s)) {
                return Err(Error::InvalidParameter(format!(
                    "score pixel {bad} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Switches for how a frame is integrated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrateOptions {
    /// Label every visible voxel along the pixel ray, not only the
    /// truncation band around the measured surface.
    pub label_full_ray: bool,
}

/// Voxel update counts for one frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameStats {
    pub depth_updated: usize,
    pub label_updated: usize,
}

/// Fold one depth observation into a voxel's running average.
///
/// `measured_sdf` is clamped to `[-mu, mu]`; each observation has unit weight
/// and the accumulated weight saturates at `w_max`. Callers skip observations
/// with `measured_sdf <= -mu`.
#[inline]
pub fn update_voxel_sdf(v: Voxel, measured_sdf: f32, mu: f32, w_max: f32) -> Voxel {
    let d = measured_sdf.clamp(-mu, mu);
    let sdf = (v.weight * v.sdf + d) / (v.weight + 1.0);
    Voxel {
        sdf,
        weight: (v.weight + 1.0).min(w_max),
        ..v
    }
}

/// Evidence-weighted label update for a single voxel.
///
/// Unlabeled and background inputs leave the voxel untouched. An unlabeled
/// voxel, or one whose score has gone negative, takes the input label with the
/// input score. Agreement adds the input score (capped at `w_clamp`);
/// disagreement subtracts it without changing the label.
#[inline]
pub fn update_voxel_label(v: Voxel, l_in: LabelId, w_in: f32, w_clamp: f32) -> Voxel {
    if l_in == LabelId::UNLABELED || l_in == LabelId::BACKGROUND {
        return v;
    }
    if v.label == LabelId::UNLABELED || v.score < 0.0 {
        Voxel {
            label: l_in,
            score: w_in,
            ..v
        }
    } else if l_in == v.label {
        Voxel {
            score: (v.score + w_in).min(w_clamp),
            ..v
        }
    } else {
        Voxel {
            score: v.score - w_in,
            ..v
        }
    }
}

/// Integrate the frame's depth map. Returns the number of voxels updated.
pub fn integrate_depth(grid: &mut VoxelGrid, frame: &LabeledFrame) -> Result<usize> {
    frame.validate()?;
    Ok(integrate_pass(grid, frame, Pass::DEPTH, IntegrateOptions::default()).depth_updated)
}

/// Integrate the frame's category and score maps. Returns the number of voxels
/// that received an object-label observation.
pub fn integrate_labels(
    grid: &mut VoxelGrid,
    frame: &LabeledFrame,
    opts: IntegrateOptions,
) -> Result<usize> {
    frame.validate()?;
    if frame.labeling.is_none() {
        return Err(Error::MissingLabeling);
    }
    Ok(integrate_pass(grid, frame, Pass::LABELS, opts).label_updated)
}

/// Depth then labels (when present) in a single sweep over the grid.
///
/// Equivalent to [`integrate_depth`] followed by [`integrate_labels`]: the
/// label band test only reads the frame, never the voxel's distance.
pub fn integrate_frame(
    grid: &mut VoxelGrid,
    frame: &LabeledFrame,
    opts: IntegrateOptions,
) -> Result<FrameStats> {
    frame.validate()?;
    let pass = Pass {
        depth: true,
        labels: frame.labeling.is_some(),
    };
    Ok(integrate_pass(grid, frame, pass, opts))
}

/// Integrate frames in order, returning per-frame statistics.
pub fn fuse_sequence<I>(
    grid: &mut VoxelGrid,
    frames: I,
    opts: IntegrateOptions,
) -> Result<Vec<FrameStats>>
where
    I: IntoIterator,
    I::Item: Borrow<LabeledFrame>,
{
    let mut stats = Vec::new();
    let mut dims = None;
    for (index, frame) in frames.into_iter().enumerate() {
        let frame = frame.borrow();
        let wrap = |source: Error| Error::Frame {
            index,
            source: Box::new(source),
        };
        let fd = (frame.intr.width, frame.intr.height);
        match dims {
            None => dims = Some(fd),
            Some(d) if d != fd => {
                return Err(wrap(Error::DimensionMismatch(format!(
                    "frame is {}x{}, sequence is {}x{}",
                    fd.0, fd.1, d.0, d.1
                ))))
            }
            _ => {}
        }
        stats.push(integrate_frame(grid, frame, opts).map_err(wrap)?);
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy)]
struct Pass {
    depth: bool,
    labels: bool,
}

impl Pass {
    const DEPTH: Pass = Pass {
        depth: true,
        labels: false,
    };
    const LABELS: Pass = Pass {
        depth: false,
        labels: true,
    };
}

fn integrate_pass(
    grid: &mut VoxelGrid,
    frame: &LabeledFrame,
    pass: Pass,
    opts: IntegrateOptions,
) -> FrameStats {
    let params = *grid.params();
    let [nx, ny, _] = params.dims;
    let proj = Projector::new(&frame.pose, &frame.intr);
    let s = params.voxel_size;
    let [ax, ay, az] = proj.axis_steps();
    let (step_x, step_y, step_z) = (ax * s, ay * s, az * s);
    let first = proj.to_camera(&Point3::new(
        params.origin[0] + 0.5 * s,
        params.origin[1] + 0.5 * s,
        params.origin[2] + 0.5 * s,
    ));
    let width = frame.intr.width;
    let (wf, hf) = (frame.intr.width as f32, frame.intr.height as f32);
    let depth = frame.depth.as_slice();
    let labeling = frame.labeling.as_ref().filter(|_| pass.labels);

    let slice_kernel = |k: usize, slice: &mut [Voxel]| -> FrameStats {
        let mut stats = FrameStats::default();
        for j in 0..ny {
            let row = first + step_y * j as f32 + step_z * k as f32;
            let voxels = &mut slice[j * nx..(j + 1) * nx];
            for (i, v) in voxels.iter_mut().enumerate() {
                let c = row + step_x * i as f32;
                let Some((uf, vf)) = proj.pixel_of_camera_point(&c) else {
                    continue;
                };
                let (uf, vf) = (uf.round(), vf.round());
                if !(uf >= 0.0 && vf >= 0.0 && uf < wf && vf < hf) {
                    continue;
                }
                let pix = vf as usize * width + uf as usize;
                let d = depth[pix];
                let depth_valid = d > 0.0 && d.is_finite();
                let measured = d - c.z;

                if pass.depth && depth_valid && measured > -params.mu {
                    *v = update_voxel_sdf(*v, measured, params.mu, params.w_max);
                    stats.depth_updated += 1;
                }
                if let Some(lab) = labeling {
                    let in_band = depth_valid && measured.abs() <= params.mu;
                    if in_band || opts.label_full_ray {
                        let l_in = lab.category.as_slice()[pix];
                        if l_in.is_object() {
                            let w_in = lab.score.as_slice()[pix];
                            *v = update_voxel_label(*v, l_in, w_in, params.w_clamp);
                            stats.label_updated += 1;
                        }
                    }
                }
            }
        }
        stats
    };

    let slice_len = nx * ny;
    let add = |a: FrameStats, b: FrameStats| FrameStats {
        depth_updated: a.depth_updated + b.depth_updated,
        label_updated: a.label_updated + b.label_updated,
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.voxels_mut()
            .par_chunks_mut(slice_len)
            .enumerate()
            .map(|(k, slice)| slice_kernel(k, slice))
            .reduce(FrameStats::default, add)
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.voxels_mut()
            .chunks_mut(slice_len)
            .enumerate()
            .map(|(k, slice)| slice_kernel(k, slice))
            .fold(FrameStats::default(), add)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::GridParams;

    const A: LabelId = LabelId(5);
    const B: LabelId = LabelId(7);

    fn vox(label: LabelId, score: f32) -> Voxel {
        Voxel {
            sdf: 0.01,
            weight: 3.0,
            label,
            score,
        }
    }

    #[test]
    fn sdf_first_observation() {
        let v = update_voxel_sdf(Voxel::default(), 0.02, 0.1, 64.0);
        assert_eq!((v.sdf, v.weight), (0.02, 1.0));
    }

    #[test]
    fn sdf_equal_weight_mean() {
        let v = Voxel {
            sdf: 0.04,
            weight: 1.0,
            ..Voxel::default()
        };
        let v = update_voxel_sdf(v, 0.02, 0.1, 64.0);
        assert!((v.sdf - 0.03).abs() < 1e-7);
        assert_eq!(v.weight, 2.0);
    }

    #[test]
    fn sdf_weight_saturates() {
        let v = Voxel {
            sdf: 0.05,
            weight: 64.0,
            ..Voxel::default()
        };
        let u = update_voxel_sdf(v, -0.01, 0.1, 64.0);
        assert_eq!(u.weight, 64.0);
        assert!((u.sdf - (64.0 * 0.05 - 0.01) / 65.0).abs() < 1e-7);
    }

    #[test]
    fn sdf_measurement_is_truncated() {
        let v = update_voxel_sdf(Voxel::default(), 3.0, 0.1, 64.0);
        assert_eq!(v.sdf, 0.1);
    }

    #[test]
    fn sdf_update_leaves_label() {
        let v = vox(A, 2.5);
        let u = update_voxel_sdf(v, 0.03, 0.1, 64.0);
        assert_eq!((u.label, u.score), (A, 2.5));
    }

    #[test]
    fn label_examples() {
        let un = Voxel::default();
        assert_eq!(update_voxel_label(un, LabelId::UNLABELED, 1.0, 20.0), un);

        let v = update_voxel_label(un, A, 1.0, 20.0);
        assert_eq!((v.label, v.score), (A, 1.0));

        let v = update_voxel_label(vox(A, 0.4), A, 0.8, 20.0);
        assert_eq!(v.label, A);
        assert!((v.score - 1.2).abs() < 1e-6);

        let v = update_voxel_label(vox(A, 0.4), B, 1.0, 20.0);
        assert_eq!(v.label, A);
        assert!((v.score + 0.6).abs() < 1e-6);
        let v = update_voxel_label(v, B, 0.5, 20.0);
        assert_eq!((v.label, v.score), (B, 0.5));

        let v = update_voxel_label(vox(A, 19.8), A, 1.0, 20.0);
        assert_eq!(v.score, 20.0);
    }

    #[test]
    fn zero_score_does_not_replace() {
        let v = update_voxel_label(vox(A, 0.0), B, 0.3, 20.0);
        assert_eq!(v.label, A);
        assert!((v.score + 0.3).abs() < 1e-7);
    }

    #[test]
    fn background_never_changes_voxel() {
        for v in [Voxel::default(), vox(A, 3.0), vox(A, -0.5)] {
            assert_eq!(update_voxel_label(v, LabelId::BACKGROUND, 1.0, 20.0), v);
        }
    }

    #[test]
    fn label_update_leaves_sdf() {
        let v = vox(A, 1.0);
        let u = update_voxel_label(v, B, 0.7, 20.0);
        assert_eq!((u.sdf, u.weight), (v.sdf, v.weight));
    }

    fn tiny_frame(depth: f32, labeling: Option<Labeling>) -> LabeledFrame {
        let intr = CameraIntrinsics::new(4.0, 4.0, 2.0, 2.0, 4, 4).unwrap();
        LabeledFrame::new(Image::filled(4, 4, depth), labeling, Pose::identity(), intr).unwrap()
    }

    #[test]
    fn missing_labeling_is_an_error() {
        let mut g = VoxelGrid::new(GridParams::new([4, 4, 4], 0.1, [-0.2, -0.2, 0.5])).unwrap();
        let err = integrate_labels(&mut g, &tiny_frame(1.0, None), IntegrateOptions::default())
            .unwrap_err();
        assert_eq!(err.to_string(), "frame has no labeling");
    }

    #[test]
    fn frame_validation() {
        let intr = CameraIntrinsics::new(4.0, 4.0, 2.0, 2.0, 4, 4).unwrap();
        let bad = LabeledFrame::new(Image::filled(3, 4, 1.0), None, Pose::identity(), intr);
        assert!(matches!(bad, Err(Error::DimensionMismatch(_))));
        let lab = Labeling {
            category: Image::filled(4, 4, A),
            score: Image::filled(4, 4, 1.5),
        };
        let bad = LabeledFrame::new(Image::filled(4, 4, 1.0), Some(lab), Pose::identity(), intr);
        assert!(matches!(bad, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn invalid_depth_updates_nothing() {
        let mut g = VoxelGrid::new(GridParams::new([4, 4, 4], 0.1, [-0.2, -0.2, 0.5])).unwrap();
        let before = g.clone();
        let n = integrate_depth(&mut g, &tiny_frame(0.0, None)).unwrap();
        assert_eq!(n, 0);
        assert_eq!(g, before);
    }

    #[test]
    fn fuse_sequence_reports_frame_index() {
        let mut g = VoxelGrid::new(GridParams::new([4, 4, 4], 0.1, [-0.2, -0.2, 0.5])).unwrap();
        let good = tiny_frame(1.0, None);
        let mut bad = tiny_frame(1.0, None);
        bad.depth = Image::filled(2, 2, 1.0);
        let err = fuse_sequence(&mut g, [good.clone(), good, bad], IntegrateOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::Frame { index: 2, .. }));
    }
}
