//! Browser demo: fuse the synthetic room under label noise and look at the
//! result, plot the single-voxel noise curve, and step the label update by
//! hand.

use labelfuse::eval::{markov_oracle, volumetric_error_rate};
use labelfuse::io::label_color;
use labelfuse::synth::{corrupt_labels, default_room_scene, generate_orbit, render_frame, NoiseSpec, Scene};
use labelfuse::{
    fuse_sequence, raycast, update_voxel_label, CameraIntrinsics, GridParams, IntegrateOptions,
    LabelId, Pose, Voxel, VoxelGrid,
};
use nalgebra::{Point3, Vector3};
use wasm_bindgen::prelude::*;

const VIEW_W: usize = 256;
const VIEW_H: usize = 192;

fn err(e: labelfuse::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn view_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(220.0, 220.0, VIEW_W as f32 / 2.0, VIEW_H as f32 / 2.0, VIEW_W, VIEW_H)
        .expect("valid intrinsics")
}

/// The room fused from a noisy orbit, alongside its noiseless reference.
#[wasm_bindgen]
pub struct RoomDemo {
    scene: Scene,
    grid: VoxelGrid,
    error_rate: f64,
}

#[wasm_bindgen]
impl RoomDemo {
    /// Fuse `frames` views into an `n`^3 grid with labels switched at
    /// probability `p_switch`.
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, frames: usize, p_switch: f64, w_clamp: f32, seed: u64) -> Result<RoomDemo, JsError> {
        let scene = default_room_scene();
        let c = scene.bounds.center();
        let voxel = 3.9 / n as f32;
        let params = GridParams {
            w_clamp,
            ..GridParams::centered(n, voxel, [c.x as f32, c.y as f32, c.z as f32])
        };
        let intr = CameraIntrinsics::new(120.0, 120.0, 80.0, 60.0, 160, 120).map_err(err)?;
        let clean: Vec<_> = generate_orbit(&scene, frames, 2.5, 1.6)
            .map_err(err)?
            .iter()
            .map(|p| render_frame(&scene, p, &intr))
            .collect();
        let noise = NoiseSpec {
            p_switch,
            seed,
            label_pool: scene.labels(),
        };
        let noisy = clean
            .iter()
            .enumerate()
            .map(|(i, f)| corrupt_labels(f, &noise, i as u64))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let opts = IntegrateOptions::default();
        let mut reference = VoxelGrid::new(params).map_err(err)?;
        fuse_sequence(&mut reference, &clean, opts).map_err(err)?;
        let mut grid = VoxelGrid::new(params).map_err(err)?;
        fuse_sequence(&mut grid, &noisy, opts).map_err(err)?;
        let error_rate = volumetric_error_rate(&grid, &reference).map_err(err)?;
        Ok(RoomDemo {
            scene,
            grid,
            error_rate,
        })
    }

    #[wasm_bindgen(getter)]
    pub fn error_rate(&self) -> f64 {
        self.error_rate
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        VIEW_W
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        VIEW_H
    }

    /// RGBA pixels of the label-colored, shaded surface seen from azimuth
    /// `degrees` and camera height `height` meters.
    pub fn render(&self, degrees: f64, height: f64) -> Result<Vec<u8>, JsError> {
        let c = self.scene.centroid();
        let a = degrees.to_radians();
        let eye = Point3::new(c.x + 3.0 * a.cos(), c.y + 3.0 * a.sin(), height);
        let pose = Pose::look_at(eye, c, Vector3::z()).map_err(err)?;
        let img = raycast(&self.grid, &pose, &view_intrinsics(), 10.0).map_err(err)?;
        let mut rgba = Vec::with_capacity(VIEW_W * VIEW_H * 4);
        for y in 0..VIEW_H {
            for x in 0..VIEW_W {
                if img.depth.get(x, y) <= 0.0 {
                    rgba.extend_from_slice(&[24, 24, 28, 255]);
                    continue;
                }
                let shade = 0.35 + 0.65 * img.normal_shading.get(x, y);
                let [r, g, b] = label_color(img.label.get(x, y));
                let s = |v: u8| (v as f32 * shade).round() as u8;
                rgba.extend_from_slice(&[s(r), s(g), s(b), 255]);
            }
        }
        Ok(rgba)
    }
}

/// Predicted mislabel probability of one voxel after `n_obs` observations
/// for each noise level in `p_levels`.
#[wasm_bindgen]
pub fn noise_curve(
    p_levels: &[f64],
    n_obs: usize,
    w_clamp: f32,
    n_labels: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    p_levels
        .iter()
        .map(|&p| markov_oracle(p, n_obs, w_clamp, n_labels, trials, seed).map_err(err))
        .collect()
}

/// One voxel's label and score, updated one observation at a time.
#[wasm_bindgen]
pub struct VoxelStepper {
    voxel: Voxel,
    w_clamp: f32,
    history: Vec<(u16, f32)>,
}

#[wasm_bindgen]
impl VoxelStepper {
    #[wasm_bindgen(constructor)]
    pub fn new(w_clamp: f32) -> VoxelStepper {
        VoxelStepper {
            voxel: Voxel::default(),
            w_clamp,
            history: Vec::new(),
        }
    }

    /// Feed one observation; label 0 is unlabeled and 1 background.
    pub fn observe(&mut self, label: u16, score: f32) {
        self.voxel = update_voxel_label(self.voxel, LabelId(label), score, self.w_clamp);
        self.history.push((self.voxel.label.0, self.voxel.score));
    }

    #[wasm_bindgen(getter)]
    pub fn label(&self) -> u16 {
        self.voxel.label.0
    }

    #[wasm_bindgen(getter)]
    pub fn score(&self) -> f32 {
        self.voxel.score
    }

    /// Scores after every observation so far.
    pub fn score_history(&self) -> Vec<f32> {
        self.history.iter().map(|h| h.1).collect()
    }

    /// Labels after every observation so far.
    pub fn label_history(&self) -> Vec<u16> {
        self.history.iter().map(|h| h.0).collect()
    }

    pub fn reset(&mut self) {
        self.voxel = Voxel::default();
        self.history.clear();
    }
}
