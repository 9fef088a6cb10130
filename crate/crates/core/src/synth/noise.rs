//! Label-switching and depth noise.
//!
//! Randomness comes from ChaCha8 with one stream per frame and a fixed
//! number of 32-bit words reserved per pixel, so the value drawn for a pixel
//! depends only on (seed, frame index, pixel index). Results are identical
//! across platforms and regardless of how rows are scheduled.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::fusion::LabeledFrame;
use crate::image::DepthImage;
use crate::volume::LabelId;

/// Two u64 draws per pixel.
const WORDS_PER_PIXEL: u128 = 4;
const DEPTH_NOISE_DOMAIN: u64 = 0x6465_7074_685f_6e7a;

/// Parameters of the label-switching noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// Probability that an object-labeled pixel is switched.
    pub p_switch: f64,
    pub seed: u64,
    /// Labels a switched pixel may take.
    pub label_pool: Vec<LabelId>,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_switch) {
            return Err(Error::InvalidParameter(format!(
                "p_switch must be in [0, 1], got {}",
                self.p_switch
            )));
        }
        if self.p_switch > 0.0 && self.label_pool.len() < 2 {
            return Err(Error::InvalidParameter(
                "label_pool needs at least two labels when p_switch > 0".into(),
            ));
        }
        Ok(())
    }
}

fn pixel_rng(seed: u64, stream: u64, pixel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(pixel as u128 * WORDS_PER_PIXEL);
    rng
}

/// Uniform in [0, 1) from the top 53 bits.
fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in [0, n) by widening multiply.
fn below(x: u64, n: usize) -> usize {
    ((x as u128 * n as u128) >> 64) as usize
}

/// Switch each object-labeled pixel with probability `p_switch` to a label
/// drawn uniformly from the pool minus its current label, with score 1.0.
/// Unlabeled and background pixels, and depth, are left untouched.
pub fn corrupt_labels(frame: &LabeledFrame, noise: &NoiseSpec, frame_index: u64) -> Result<LabeledFrame> {
    noise.validate()?;
    let Some(labeling) = frame.labeling.as_ref() else {
        return Err(Error::MissingLabeling);
    };
    let mut out = frame.clone();
    if noise.p_switch == 0.0 {
        return Ok(out);
    }
    let lab = out.labeling.as_mut().expect("cloned labeling");
    let w = labeling.category.width();
    let mut candidates = Vec::with_capacity(noise.label_pool.len());

    for y in 0..labeling.category.height() {
        let mut rng = pixel_rng(noise.seed, frame_index, y * w);
        for x in 0..w {
            let (r_switch, r_pick) = (rng.next_u64(), rng.next_u64());
            let current = labeling.category.get(x, y);
            if !current.is_object() || unit_f64(r_switch) >= noise.p_switch {
                continue;
            }
            candidates.clear();
            candidates.extend(noise.label_pool.iter().copied().filter(|&l| l != current));
            if candidates.is_empty() {
                continue;
            }
            lab.category.set(x, y, candidates[below(r_pick, candidates.len())]);
            lab.score.set(x, y, 1.0);
        }
    }
    Ok(out)
}

/// Add zero-mean Gaussian noise of standard deviation `sigma` meters to
/// every valid depth pixel (Box-Muller on the pixel's two draws).
pub fn add_depth_noise(depth: &DepthImage, sigma: f32, seed: u64, frame_index: u64) -> DepthImage {
    let mut out = depth.clone();
    if sigma <= 0.0 {
        return out;
    }
    let w = depth.width();
    for y in 0..depth.height() {
        let mut rng = pixel_rng(seed ^ DEPTH_NOISE_DOMAIN, frame_index, y * w);
        for x in 0..w {
            let (a, b) = (rng.next_u64(), rng.next_u64());
            let d = depth.get(x, y);
            if d <= 0.0 {
                continue;
            }
            let u1 = 1.0 - unit_f64(a);
            let u2 = unit_f64(b);
            let n = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            out.set(x, y, (d + sigma * n as f32).max(f32::MIN_POSITIVE));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{CameraIntrinsics, Pose};
    use crate::fusion::Labeling;
    use crate::image::Image;

    fn frame(w: usize, h: usize, label: LabelId) -> LabeledFrame {
        let intr = CameraIntrinsics::new(100.0, 100.0, w as f32 / 2.0, h as f32 / 2.0, w, h).unwrap();
        LabeledFrame {
            depth: Image::filled(w, h, 1.5),
            labeling: Some(Labeling {
                category: Image::filled(w, h, label),
                score: Image::filled(w, h, 0.7),
            }),
            pose: Pose::identity(),
            intr,
        }
    }

    fn spec(p: f64, pool: &[u16]) -> NoiseSpec {
        NoiseSpec {
            p_switch: p,
            seed: 42,
            label_pool: pool.iter().map(|&l| LabelId(l)).collect(),
        }
    }

    #[test]
    fn zero_probability_is_identity() {
        let f = frame(16, 8, LabelId(2));
        assert_eq!(corrupt_labels(&f, &spec(0.0, &[2, 3]), 0).unwrap(), f);
    }

    #[test]
    fn certain_switch_with_two_labels() {
        let f = frame(16, 8, LabelId(2));
        let g = corrupt_labels(&f, &spec(1.0, &[2, 3]), 0).unwrap();
        let lab = g.labeling.unwrap();
        assert!(lab.category.as_slice().iter().all(|&l| l == LabelId(3)));
        assert!(lab.score.as_slice().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn switch_fraction_concentrates() {
        // 100_000 pixels; binomial sd is 0.00145, so 0.01 is ~7 sd.
        let f = frame(400, 250, LabelId(2));
        let g = corrupt_labels(&f, &spec(0.3, &[2, 3, 4, 5]), 7).unwrap();
        let switched = g
            .labeling
            .unwrap()
            .category
            .as_slice()
            .iter()
            .filter(|&&l| l != LabelId(2))
            .count();
        let frac = switched as f64 / 100_000.0;
        assert!((frac - 0.3).abs() < 0.01, "{frac}");
    }

    #[test]
    fn background_and_unlabeled_untouched() {
        for l in [LabelId::BACKGROUND, LabelId::UNLABELED] {
            let f = frame(16, 8, l);
            assert_eq!(corrupt_labels(&f, &spec(1.0, &[2, 3]), 3).unwrap(), f);
        }
    }

    #[test]
    fn never_switches_to_own_label() {
        let f = frame(64, 64, LabelId(3));
        let g = corrupt_labels(&f, &spec(1.0, &[2, 3, 4]), 9).unwrap();
        let cat = g.labeling.unwrap().category;
        assert!(cat.as_slice().iter().all(|&l| l == LabelId(2) || l == LabelId(4)));
        let twos = cat.as_slice().iter().filter(|&&l| l == LabelId(2)).count();
        assert!((twos as f64 / 4096.0 - 0.5).abs() < 0.05);
    }

    #[test]
    fn reproducible_and_frame_dependent() {
        let f = frame(32, 32, LabelId(2));
        let s = spec(0.5, &[2, 3, 4]);
        let a = corrupt_labels(&f, &s, 1).unwrap();
        assert_eq!(a, corrupt_labels(&f, &s, 1).unwrap());
        assert_ne!(a, corrupt_labels(&f, &s, 2).unwrap());
    }

    #[test]
    fn rejects_bad_specs() {
        let f = frame(4, 4, LabelId(2));
        assert!(corrupt_labels(&f, &spec(0.5, &[2]), 0).is_err());
        assert!(corrupt_labels(&f, &spec(1.5, &[2, 3]), 0).is_err());
        let mut unlabeled = f.clone();
        unlabeled.labeling = None;
        assert!(matches!(
            corrupt_labels(&unlabeled, &spec(0.5, &[2, 3]), 0),
            Err(Error::MissingLabeling)
        ));
    }

    #[test]
    fn depth_noise_statistics() {
        let d = Image::filled(200, 200, 2.0f32);
        let n = add_depth_noise(&d, 0.01, 5, 0);
        let vals: Vec<f64> = n.as_slice().iter().map(|&v| v as f64 - 2.0).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 2e-4);
        assert!((var.sqrt() - 0.01).abs() < 5e-4);
        let invalid = Image::filled(4, 4, 0.0f32);
        assert_eq!(add_depth_noise(&invalid, 0.01, 5, 0), invalid);
    }
}
