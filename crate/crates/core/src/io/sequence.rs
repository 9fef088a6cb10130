//! Sequence directories.
//!
//! ```text
//! <root>/intrinsics.txt        fx fy cx cy width height
//! <root>/trajectory.txt        one pose per frame
//! <root>/scene.txt             optional, synthetic sequences only
//! <root>/depth/000000.png
//! <root>/category/000000.png   optional per frame
//! <root>/score/000000.pfm      optional per frame
//! ```
//!
//! A frame missing either its category or its score map is fused without
//! labels.

use std::fs;
use std::path::{Path, PathBuf};

use super::maps::{load_category, load_depth, load_score, save_category, save_depth, save_score};
use super::trajectory::{load_trajectory, save_trajectory, TimedPose};
use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::fusion::{LabeledFrame, Labeling};
use crate::image::Image;
use crate::volume::LabelId;

pub fn load_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let line = text
        .lines()
        .map(str::trim)
        .enumerate()
        .find(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let Some((i, line)) = line else {
        return Err(Error::format(path, "no intrinsics line"));
    };
    let err = |msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line: i + 1,
        msg: msg.to_string(),
    };
    let t: Vec<&str> = line.split_whitespace().collect();
    if t.len() != 6 {
        return Err(err("expected fx fy cx cy width height"));
    }
    let f = |s: &str| s.parse::<f32>().map_err(|_| err("bad number"));
    let u = |s: &str| s.parse::<usize>().map_err(|_| err("bad image size"));
    CameraIntrinsics::new(f(t[0])?, f(t[1])?, f(t[2])?, f(t[3])?, u(t[4])?, u(t[5])?)
}

pub fn save_intrinsics(path: &Path, intr: &CameraIntrinsics) -> Result<()> {
    let s = format!(
        "# fx fy cx cy width height\n{} {} {} {} {} {}\n",
        intr.fx, intr.fy, intr.cx, intr.cy, intr.width, intr.height
    );
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct Sequence {
    root: PathBuf,
    pub intr: CameraIntrinsics,
    pub poses: Vec<TimedPose>,
}

impl Sequence {
    pub fn frame_name(index: usize) -> String {
        format!("{index:06}")
    }

    pub fn open(root: &Path) -> Result<Self> {
        let intr = load_intrinsics(&root.join("intrinsics.txt"))?;
        let poses = load_trajectory(&root.join("trajectory.txt"))?;
        Ok(Sequence {
            root: root.to_path_buf(),
            intr,
            poses,
        })
    }

    /// Create the directory layout and write intrinsics and trajectory.
    pub fn create(root: &Path, intr: CameraIntrinsics, poses: Vec<TimedPose>) -> Result<Self> {
        for d in ["depth", "category", "score"] {
            let p = root.join(d);
            fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
        save_intrinsics(&root.join("intrinsics.txt"), &intr)?;
        save_trajectory(&root.join("trajectory.txt"), &poses)?;
        Ok(Sequence {
            root: root.to_path_buf(),
            intr,
            poses,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn depth_path(&self, i: usize) -> PathBuf {
        self.root.join("depth").join(format!("{}.png", Self::frame_name(i)))
    }

    pub fn category_path(&self, i: usize) -> PathBuf {
        self.root.join("category").join(format!("{}.png", Self::frame_name(i)))
    }

    pub fn score_path(&self, i: usize) -> PathBuf {
        self.root.join("score").join(format!("{}.pfm", Self::frame_name(i)))
    }

    /// Load frame `i`. Without both label maps (or with `with_labels` false)
    /// the frame carries depth only.
    pub fn load_frame(&self, i: usize, depth_scale: f32, with_labels: bool) -> Result<LabeledFrame> {
        let pose = self
            .poses
            .get(i)
            .ok_or_else(|| Error::InvalidParameter(format!("frame {i} beyond trajectory of {}", self.len())))?
            .pose;
        let depth = load_depth(&self.depth_path(i), depth_scale)?;
        let (cat_path, score_path) = (self.category_path(i), self.score_path(i));
        let labeling = if with_labels && cat_path.exists() && score_path.exists() {
            Some(Labeling {
                category: load_category(&cat_path)?,
                score: load_score(&score_path)?,
            })
        } else {
            None
        };
        LabeledFrame::new(depth, labeling, pose, self.intr)
    }

    pub fn write_frame(&self, i: usize, frame: &LabeledFrame, depth_scale: f32) -> Result<()> {
        save_depth(&self.depth_path(i), &frame.depth, depth_scale)?;
        if let Some(lab) = &frame.labeling {
            save_category(&self.category_path(i), &lab.category)?;
            save_score(&self.score_path(i), &lab.score)?;
        }
        Ok(())
    }
}

/// Object labels present in a category map, ascending.
pub fn labels_in(category: &Image<LabelId>) -> Vec<LabelId> {
    let mut v: Vec<LabelId> = category.as_slice().iter().copied().filter(|l| l.is_object()).collect();
    v.sort();
    v.dedup();
    v
}
