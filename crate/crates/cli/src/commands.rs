use std::fs;
use std::path::{Path, PathBuf};

use labelfuse::eval::{
    default_p_levels, per_frame_error_rate, run_noise_sweep_with, volumetric_error_rate,
    SweepConfig, SweepVolume,
};
use labelfuse::io::{
    label_color, load_annotations, load_category, load_intrinsics, load_scene, load_trajectory,
    load_volume, rasterize_polygons, save_category, save_depth, save_gray8, save_rgb8, save_scene,
    save_score, save_volume, write_mesh_ply, Sequence, TimedPose, VolumeEncoding,
};
use labelfuse::synth::{
    add_depth_noise, corrupt_labels, default_room_scene, generate_orbit, render_frame, NoiseSpec,
    Scene,
};
use labelfuse::{
    extract_mesh, integrate_frame, raycast, CameraIntrinsics, Error, GridParams, Image,
    IntegrateOptions, Pose, VoxelGrid,
};
use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::error::CliError;
use crate::{
    Encoding, EvalArgs, EvalMode, FuseArgs, Levels, MeshArgs, RasterizeArgs, RenderArgs,
    SweepArgs, SynthArgs,
};

type Result<T> = std::result::Result<T, CliError>;

/// 320x240 pinhole camera with a 300 px focal length.
pub fn synthetic_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(300.0, 300.0, 160.0, 120.0, 320, 240).expect("valid intrinsics")
}

fn floats<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated values, got {}", v.len()))
}

pub fn parse_dims(s: &str) -> std::result::Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad dimension {t:?}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [n] => Ok([n; 3]),
        [x, y, z] => Ok([x, y, z]),
        _ => Err("expected n or nx,ny,nz".into()),
    }
}

pub fn parse_vec3(s: &str) -> std::result::Result<[f32; 3], String> {
    Ok(floats::<3>(s)?.map(|v| v as f32))
}

pub(crate) fn parse_p_levels(s: &str) -> std::result::Result<Levels, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad noise level {t:?}")))
        .collect::<std::result::Result<_, _>>()?;
    if let Some(p) = v.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(format!("noise level {p} not in [0, 1]"));
    }
    Ok(Levels(v))
}

fn parse_pose(s: &str) -> Result<Pose> {
    let v = floats::<7>(s).map_err(CliError::usage)?;
    let q = Quaternion::new(v[6], v[3], v[4], v[5]);
    if (q.norm() - 1.0).abs() > 1e-3 {
        return Err(CliError::usage(format!("pose quaternion norm {} is not unit", q.norm())));
    }
    Ok(Pose::from_quaternion(
        &UnitQuaternion::from_quaternion(q),
        Vector3::new(v[0], v[1], v[2]),
    ))
}

fn load_scene_or_default(path: Option<&Path>) -> Result<Scene> {
    Ok(match path {
        Some(p) => load_scene(p)?,
        None => default_room_scene(),
    })
}

fn grid_around(scene: &Scene, dims: [usize; 3], voxel_size: f32) -> GridParams {
    let c = scene.bounds.center();
    let origin = [0, 1, 2].map(|a| c[a] as f32 - dims[a] as f32 * voxel_size * 0.5);
    GridParams::new(dims, voxel_size, origin)
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::Io {
        path: p.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let scene = load_scene_or_default(a.scene.as_deref())?;
    let poses = generate_orbit(&scene, a.frames, a.orbit_radius, a.orbit_height)?;
    let intr = synthetic_intrinsics();
    let timed = poses
        .iter()
        .enumerate()
        .map(|(i, &pose)| TimedPose {
            timestamp: i as f64,
            pose,
        })
        .collect();
    let seq = Sequence::create(&a.out, intr, timed)?;
    save_scene(&a.out.join("scene.txt"), &scene)?;
    let noise = NoiseSpec {
        p_switch: a.noise_p,
        seed: a.seed,
        label_pool: scene.labels(),
    };
    noise.validate()?;
    for (i, pose) in poses.iter().enumerate() {
        let mut frame = corrupt_labels(&render_frame(&scene, pose, &intr), &noise, i as u64)?;
        if a.depth_noise > 0.0 {
            frame.depth = add_depth_noise(&frame.depth, a.depth_noise, a.seed, i as u64);
        }
        seq.write_frame(i, &frame, a.depth_scale)?;
    }
    println!("frames={} out={}", a.frames, a.out.display());
    Ok(())
}

pub fn fuse(a: FuseArgs) -> Result<()> {
    let seq = Sequence::open(&a.input)?;
    let origin = match a.origin {
        Some(o) => o,
        None => {
            let scene_path = a.input.join("scene.txt");
            if !scene_path.exists() {
                return Err(CliError::usage(
                    "--origin is required for sequences without scene.txt",
                ));
            }
            grid_around(&load_scene(&scene_path)?, a.dims, a.voxel_size).origin
        }
    };
    let params = GridParams {
        mu: a.mu.unwrap_or(GridParams::DEFAULT_TRUNCATION_VOXELS * a.voxel_size),
        w_max: a.w_max,
        w_clamp: a.w_clamp,
        ..GridParams::new(a.dims, a.voxel_size, origin)
    };
    let mut grid = VoxelGrid::new(params)?;
    let opts = IntegrateOptions {
        label_full_ray: a.label_full_ray,
    };
    let (mut depth_updates, mut label_updates) = (0usize, 0usize);
    for i in 0..seq.len() {
        let stats = seq
            .load_frame(i, a.depth_scale, !a.no_labels)
            .and_then(|f| integrate_frame(&mut grid, &f, opts))
            .map_err(|e| Error::Frame {
                index: i,
                source: Box::new(e),
            })?;
        depth_updates += stats.depth_updated;
        label_updates += stats.label_updated;
    }
    let encoding = match a.encoding {
        Encoding::Packed => VolumeEncoding::PackedHalf,
        Encoding::Full => VolumeEncoding::Full,
    };
    save_volume(&a.volume_out, &grid, encoding)?;
    println!(
        "frames={} depth_updates={depth_updates} label_updates={label_updates} out={}",
        seq.len(),
        a.volume_out.display()
    );
    Ok(())
}

pub fn render(a: RenderArgs) -> Result<()> {
    let grid = load_volume(&a.volume)?;
    let intr = match &a.intrinsics {
        Some(p) => load_intrinsics(p)?,
        None => synthetic_intrinsics(),
    };
    let pose = match (&a.pose, a.pose_index) {
        (Some(s), _) => parse_pose(s)?,
        (None, Some(i)) => {
            let traj = a
                .trajectory
                .as_ref()
                .ok_or_else(|| CliError::usage("--pose-index needs --trajectory"))?;
            let poses = load_trajectory(traj)?;
            poses
                .get(i)
                .ok_or_else(|| {
                    CliError::usage(format!("pose index {i} beyond trajectory of {}", poses.len()))
                })?
                .pose
        }
        (None, None) => return Err(CliError::usage("one of --pose or --pose-index is required")),
    };
    let img = raycast(&grid, &pose, &intr, a.max_range)?;
    create_dir(&a.out)?;
    let (w, h) = (intr.width, intr.height);
    let hit = |x, y| img.depth.get(x, y) > 0.0;
    let w_clamp = grid.params().w_clamp;
    let mut color = Image::filled(w, h, [0u8; 3]);
    let mut confidence = Image::filled(w, h, 0u8);
    let mut shaded = Image::filled(w, h, 0u8);
    for y in 0..h {
        for x in 0..w {
            if !hit(x, y) {
                continue;
            }
            color.set(x, y, label_color(img.label.get(x, y)));
            let c = (img.confidence.get(x, y) / w_clamp).clamp(0.0, 1.0);
            confidence.set(x, y, (c * 255.0).round() as u8);
            shaded.set(x, y, (img.normal_shading.get(x, y).clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    save_category(&a.out.join("label.png"), &img.label)?;
    save_rgb8(&a.out.join("label_color.png"), &color)?;
    save_gray8(&a.out.join("confidence.png"), &confidence)?;
    save_gray8(&a.out.join("shaded.png"), &shaded)?;
    save_depth(&a.out.join("depth.png"), &img.depth, labelfuse::io::DEFAULT_DEPTH_SCALE)?;
    println!("out={}", a.out.display());
    Ok(())
}

pub fn mesh(a: MeshArgs) -> Result<()> {
    let grid = load_volume(&a.volume)?;
    let m = extract_mesh(&grid);
    write_mesh_ply(&m, &a.out)?;
    println!("vertices={} triangles={} out={}", m.vertex_count(), m.triangles.len(), a.out.display());
    Ok(())
}

fn png_names(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut names = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let p = entry.path();
        if p.extension().is_some_and(|e| e == "png") {
            names.push(PathBuf::from(entry.file_name()));
        }
    }
    names.sort();
    Ok(names)
}

pub fn eval(a: EvalArgs) -> Result<()> {
    match a.mode {
        EvalMode::Volume => {
            let test = load_volume(&a.test)?;
            let reference = load_volume(&a.reference)?;
            println!("error_rate={:.6}", volumetric_error_rate(&test, &reference)?);
        }
        EvalMode::Frames => {
            let names = png_names(&a.reference)?;
            if names.is_empty() {
                return Err(CliError::usage(format!(
                    "no category maps in {}",
                    a.reference.display()
                )));
            }
            let mut sum = 0.0;
            for n in &names {
                let gt = load_category(&a.reference.join(n))?;
                let pred = load_category(&a.test.join(n))?;
                sum += per_frame_error_rate(&pred, &gt)?;
            }
            println!("error_rate={:.6} frames={}", sum / names.len() as f64, names.len());
        }
    }
    Ok(())
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let scene = load_scene_or_default(a.scene.as_deref())?;
    let trajectory = generate_orbit(&scene, a.frames, a.orbit_radius, a.orbit_height)?;
    let grid = GridParams {
        w_clamp: a.w_clamp,
        ..grid_around(&scene, a.dims, a.voxel_size)
    };
    let cfg = SweepConfig {
        trajectory,
        intr: synthetic_intrinsics(),
        grid,
        p_levels: a.p_levels.map(|l| l.0).unwrap_or_else(default_p_levels),
        seed: a.seed,
        options: IntegrateOptions {
            label_full_ray: a.label_full_ray,
        },
        scene,
    };
    if let Some(d) = &a.volume_dir {
        create_dir(d)?;
    }
    let result = run_noise_sweep_with(&cfg, |which, g| {
        let Some(dir) = &a.volume_dir else {
            return Ok(());
        };
        let name = match which {
            SweepVolume::Reference => "reference.sltv".to_string(),
            SweepVolume::Noisy(p) => format!("p_{p:.4}.sltv"),
        };
        save_volume(&dir.join(name), g, VolumeEncoding::PackedHalf)
    })?;
    let csv = result.to_csv();
    match &a.out {
        Some(p) => fs::write(p, csv).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?,
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn rasterize(a: RasterizeArgs) -> Result<()> {
    let frames = load_annotations(&a.annotations)?;
    let (cat_dir, score_dir) = (a.out.join("category"), a.out.join("score"));
    create_dir(&cat_dir)?;
    create_dir(&score_dir)?;
    for (name, ann) in &frames {
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(CliError::usage(format!("frame name {name:?} is not a plain file name")));
        }
        let (cat, score) = rasterize_polygons(ann, a.width, a.height)?;
        save_category(&cat_dir.join(format!("{name}.png")), &cat)?;
        save_score(&score_dir.join(format!("{name}.pfm")), &score)?;
    }
    println!("frames={} out={}", frames.len(), a.out.display());
    Ok(())
}
