//! Labeling error metrics and the label-noise sweep.

use std::fmt::Write as _;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::camera::{CameraIntrinsics, Pose};
use crate::error::{Error, Result};
use crate::fusion::{fuse_sequence, update_voxel_label, IntegrateOptions, LabeledFrame};
use crate::image::Image;
use crate::surface::extract_surface_voxels;
use crate::synth::{corrupt_labels, render_frame, NoiseSpec, Scene};
use crate::volume::{GridParams, LabelId, Voxel, VoxelGrid};

/// Fraction of the reference's labeled surface voxels whose label in `test`
/// differs. Returns 0 when the reference has no labeled surface voxel.
pub fn volumetric_error_rate(test: &VoxelGrid, reference: &VoxelGrid) -> Result<f64> {
    if !test.params().same_geometry(reference.params()) {
        return Err(Error::GridMismatch(format!(
            "test {:?} vs reference {:?}",
            test.params(),
            reference.params()
        )));
    }
    let mut total = 0usize;
    let mut wrong = 0usize;
    for e in extract_surface_voxels(reference).iter() {
        if e.label.is_unlabeled() {
            continue;
        }
        total += 1;
        if test.get(e.index).map(|v| v.label) != Some(e.label) {
            wrong += 1;
        }
    }
    Ok(if total == 0 {
        0.0
    } else {
        wrong as f64 / total as f64
    })
}

/// Fraction of ground-truth labeled pixels (anything but unlabeled) whose
/// predicted label differs.
pub fn per_frame_error_rate(pred: &Image<LabelId>, gt: &Image<LabelId>) -> Result<f64> {
    if pred.dims() != gt.dims() {
        return Err(Error::DimensionMismatch(format!(
            "prediction {:?} vs ground truth {:?}",
            pred.dims(),
            gt.dims()
        )));
    }
    let (mut total, mut wrong) = (0usize, 0usize);
    for (p, g) in pred.as_slice().iter().zip(gt.as_slice()) {
        if g.is_unlabeled() {
            continue;
        }
        total += 1;
        wrong += (p != g) as usize;
    }
    Ok(if total == 0 {
        0.0
    } else {
        wrong as f64 / total as f64
    })
}

/// Monte-Carlo mislabel probability of a single voxel after `n_observations`
/// i.i.d. observations through [`update_voxel_label`]: correct with
/// probability `1 - p_switch`, otherwise one of the `n_labels - 1` wrong
/// labels uniformly, always with score 1.0.
pub fn markov_oracle(
    p_switch: f64,
    n_observations: usize,
    w_clamp: f32,
    n_labels: usize,
    n_trials: usize,
    seed: u64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_switch) {
        return Err(Error::InvalidParameter(format!("p_switch {p_switch} not in [0, 1]")));
    }
    if n_observations == 0 || n_trials == 0 || !(w_clamp > 0.0) {
        return Err(Error::InvalidParameter(
            "markov_oracle needs n_observations, n_trials >= 1 and w_clamp > 0".into(),
        ));
    }
    if n_labels < 2 && p_switch > 0.0 {
        return Err(Error::InvalidParameter("need at least two labels to switch".into()));
    }
    let correct = LabelId(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mislabeled = 0usize;
    for _ in 0..n_trials {
        let mut v = Voxel::default();
        for _ in 0..n_observations {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            let r = rng.next_u64();
            let l_in = if u < p_switch {
                let k = ((r as u128 * (n_labels - 1) as u128) >> 64) as u16;
                LabelId(correct.0 + 1 + k)
            } else {
                correct
            };
            v = update_voxel_label(v, l_in, 1.0, w_clamp);
        }
        mislabeled += (v.label != correct) as usize;
    }
    Ok(mislabeled as f64 / n_trials as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub p_switch: f64,
    pub error_rate: f64,
    /// Labeled surface voxels of the reference volume (the metric's denominator).
    pub surface_voxels: usize,
    pub frames: usize,
    pub seed: u64,
    /// Mean per-frame error of the corrupted category maps.
    pub mean_per_frame_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "p_switch,error_rate,surface_voxels,frames,seed";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.6},{},{},{}",
                r.p_switch, r.error_rate, r.surface_voxels, r.frames, r.seed
            );
        }
        s
    }
}

/// Default noise levels: 0, 0.05, ..., 0.7.
pub fn default_p_levels() -> Vec<f64> {
    (0..=14).map(|i| i as f64 * 0.05).map(|p| (p * 100.0).round() / 100.0).collect()
}

/// Everything needed to run the label-noise experiment.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub scene: Scene,
    pub trajectory: Vec<Pose>,
    pub intr: CameraIntrinsics,
    pub grid: GridParams,
    pub p_levels: Vec<f64>,
    pub seed: u64,
    pub options: IntegrateOptions,
}

/// Which volume a sweep callback is looking at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepVolume {
    Reference,
    Noisy(f64),
}

pub fn run_noise_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    run_noise_sweep_with(cfg, |_, _| Ok(()))
}

/// Fuse the noiseless reference once, then one fresh volume per noise level
/// with corrupted label maps, scoring each against the reference. The same
/// seed is used at every level, so the set of pixels switched at a lower
/// level is contained in the set switched at a higher one.
pub fn run_noise_sweep_with<F>(cfg: &SweepConfig, mut on_volume: F) -> Result<SweepResult>
where
    F: FnMut(SweepVolume, &VoxelGrid) -> Result<()>,
{
    if let Some(p) = cfg.p_levels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("noise level {p} not in [0, 1]")));
    }
    let frames: Vec<LabeledFrame> = cfg
        .trajectory
        .iter()
        .map(|pose| render_frame(&cfg.scene, pose, &cfg.intr))
        .collect();

    let mut reference = VoxelGrid::new(cfg.grid)?;
    fuse_sequence(&mut reference, &frames, cfg.options)?;
    on_volume(SweepVolume::Reference, &reference)?;
    let surface_voxels = extract_surface_voxels(&reference)
        .iter()
        .filter(|e| !e.label.is_unlabeled())
        .count();

    let mut rows = Vec::with_capacity(cfg.p_levels.len());
    for &p in &cfg.p_levels {
        let noise = NoiseSpec {
            p_switch: p,
            seed: cfg.seed,
            label_pool: cfg.scene.labels(),
        };
        let mut grid = VoxelGrid::new(cfg.grid)?;
        let mut per_frame_sum = 0.0;
        for (i, frame) in frames.iter().enumerate() {
            let noisy = corrupt_labels(frame, &noise, i as u64)?;
            let gt = &frame.labeling.as_ref().expect("rendered").category;
            per_frame_sum += per_frame_error_rate(&noisy.labeling.as_ref().expect("kept").category, gt)?;
            fuse_sequence(&mut grid, std::iter::once(&noisy), cfg.options).map_err(|e| match e {
                Error::Frame { source, .. } => Error::Frame { index: i, source },
                e => e,
            })?;
        }
        on_volume(SweepVolume::Noisy(p), &grid)?;
        rows.push(SweepRow {
            p_switch: p,
            error_rate: volumetric_error_rate(&grid, &reference)?,
            surface_voxels,
            frames: frames.len(),
            seed: cfg.seed,
            mean_per_frame_error: if frames.is_empty() {
                0.0
            } else {
                per_frame_sum / frames.len() as f64
            },
        });
    }
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled_grid(n: usize) -> VoxelGrid {
        let mut g = VoxelGrid::new(GridParams::new([n, n, n], 0.1, [0.0; 3])).unwrap();
        for i in 0..g.voxels().len() {
            let [_, _, z] = g.index_of(i);
            g.voxels_mut()[i] = Voxel {
                sdf: if z < n / 2 { 0.1 } else { -0.1 },
                weight: 1.0,
                label: LabelId(2 + (i % 3) as u16),
                score: 1.0,
            };
        }
        g
    }

    #[test]
    fn identical_volumes_have_zero_error() {
        let g = labeled_grid(6);
        assert_eq!(volumetric_error_rate(&g, &g).unwrap(), 0.0);
    }

    #[test]
    fn all_flipped_is_total_error() {
        let r = labeled_grid(6);
        let mut t = r.clone();
        for v in t.voxels_mut() {
            v.label = LabelId(v.label.0 + 10);
        }
        assert_eq!(volumetric_error_rate(&t, &r).unwrap(), 1.0);
    }

    #[test]
    fn hand_built_ten_voxel_surface() {
        // Reference: observed only along one x-row at y = z = 1; the sign
        // changes between x = 4 and x = 5, so the surface is {4, 5}. Add four
        // more two-voxel rows to reach ten surface voxels.
        let mut r = VoxelGrid::new(GridParams::new([8, 8, 8], 0.1, [0.0; 3])).unwrap();
        for (row, label) in [(1usize, 2u16), (2, 3), (3, 4), (4, 5), (5, 6)] {
            for x in 0..8 {
                let v = r.get_mut([x, row, 1]).unwrap();
                *v = Voxel {
                    sdf: if x <= 4 { 0.05 } else { -0.05 },
                    weight: 2.0,
                    label: LabelId(label),
                    score: 3.0,
                };
            }
        }
        let surface = extract_surface_voxels(&r);
        assert_eq!(surface.len(), 10);
        let mut t = r.clone();
        for idx in [[4, 1, 1], [5, 3, 1], [4, 5, 1]] {
            t.get_mut(idx).unwrap().label = LabelId(9);
        }
        // A mismatch off the surface does not count.
        t.get_mut([0, 1, 1]).unwrap().label = LabelId(9);
        assert!((volumetric_error_rate(&t, &r).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn unlabeled_reference_voxels_excluded() {
        let mut r = labeled_grid(4);
        for v in r.voxels_mut() {
            v.label = LabelId::UNLABELED;
        }
        let t = labeled_grid(4);
        assert_eq!(volumetric_error_rate(&t, &r).unwrap(), 0.0);
    }

    #[test]
    fn geometry_mismatch_rejected() {
        let a = labeled_grid(4);
        let b = labeled_grid(5);
        assert!(matches!(volumetric_error_rate(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn per_frame_examples() {
        let gt = Image::filled(10, 10, LabelId(2));
        assert_eq!(per_frame_error_rate(&gt, &gt).unwrap(), 0.0);
        let pred = Image::filled(10, 10, LabelId(3));
        assert_eq!(per_frame_error_rate(&pred, &gt).unwrap(), 1.0);

        let mut pred = gt.clone();
        for i in 0..26 {
            pred.set(i % 10, i / 10, LabelId(4));
        }
        assert!((per_frame_error_rate(&pred, &gt).unwrap() - 0.26).abs() < 1e-12);

        let mut gt2 = gt.clone();
        gt2.set(0, 0, LabelId::UNLABELED);
        let mut pred2 = gt2.clone();
        pred2.set(0, 0, LabelId(7));
        assert_eq!(per_frame_error_rate(&pred2, &gt2).unwrap(), 0.0);
        assert!(per_frame_error_rate(&Image::filled(3, 3, LabelId(2)), &gt).is_err());
    }

    #[test]
    fn oracle_extremes() {
        assert_eq!(markov_oracle(0.0, 50, 20.0, 5, 2000, 1).unwrap(), 0.0);
        assert_eq!(markov_oracle(1.0, 50, 20.0, 2, 2000, 1).unwrap(), 1.0);
        assert!(markov_oracle(0.3, 0, 20.0, 5, 10, 1).is_err());
    }

    #[test]
    fn default_levels() {
        let p = default_p_levels();
        assert_eq!(p.len(), 15);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[14], 0.7);
        assert_eq!(p[3], 0.15);
    }

    #[test]
    fn csv_header() {
        let r = SweepResult {
            rows: vec![SweepRow {
                p_switch: 0.5,
                error_rate: 0.125,
                surface_voxels: 10,
                frames: 4,
                seed: 1,
                mean_per_frame_error: 0.4,
            }],
        };
        assert_eq!(
            r.to_csv(),
            "p_switch,error_rate,surface_voxels,frames,seed\n0.5,0.125000,10,4,1\n"
        );
    }
}
