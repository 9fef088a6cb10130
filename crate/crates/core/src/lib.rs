//! Labeled truncated signed distance volumes.
//!
//! Depth frames are fused into a dense TSDF while per-pixel category and
//! score maps are fused into a single (label, score) pair per voxel using an
//! evidence-weighted update with hysteresis. Around that core the crate
//! provides surface extraction, a synthetic scene generator with a label
//! noise model, the error metrics used to evaluate fusion, and file formats
//! for every input and output.

pub mod camera;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod image;
pub mod io;
pub mod surface;
pub mod synth;
pub mod volume;

pub use camera::{project, CameraIntrinsics, Pose, Projection, Projector};
pub use error::{Error, Result};
pub use fusion::{
    fuse_sequence, integrate_depth, integrate_frame, integrate_labels, update_voxel_label,
    update_voxel_sdf, FrameStats, IntegrateOptions, LabeledFrame, Labeling,
};
pub use image::{DepthImage, Image, ScoreMap};
pub use surface::{
    extract_mesh, extract_surface_voxels, raycast, RaycastImages, SurfaceVoxelSet, TriangleMesh,
};
pub use volume::{pack, unpack, GridParams, LabelId, PackedGrid, PackedVoxel, Voxel, VoxelGrid};
