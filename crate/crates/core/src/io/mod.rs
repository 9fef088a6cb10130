//! On-disk formats.
//!
//! | data           | format                                                  |
//! |----------------|---------------------------------------------------------|
//! | depth          | 16-bit grayscale PNG, value = round(meters * scale)     |
//! | category map   | 16-bit grayscale PNG of label ids                        |
//! | score map      | single-channel PFM (`Pf`), values in [0, 1]              |
//! | trajectory     | `timestamp tx ty tz qx qy qz qw`, world-from-camera      |
//! | volume         | `SLTV1` header + little-endian voxel payload            |
//! | mesh           | binary little-endian PLY with color, label and score    |
//! | scene          | line-oriented text, see [`scene_file`]                   |
//! | annotations    | JSON polygons, see [`annotations`]                       |

pub mod annotations;
mod maps;
mod ply;
pub mod scene_file;
mod sequence;
mod trajectory;
mod volume_file;

pub use annotations::{
    load_annotations, rasterize_polygons, AnnotatedObject, AnnotationFile, PolygonAnnotation,
};
pub use maps::{
    load_category, load_depth, load_score, save_category, save_depth, save_gray8, save_rgb8,
    save_score, DEFAULT_DEPTH_SCALE,
};
pub use ply::{export_mesh_ply, label_color, read_mesh_ply, write_mesh_ply};
pub use scene_file::{load_scene, save_scene};
pub use sequence::{labels_in, load_intrinsics, save_intrinsics, Sequence};
pub use trajectory::{load_trajectory, save_trajectory, TimedPose};
pub use volume_file::{load_volume, load_volume_header, save_volume, VolumeEncoding, VolumeHeader};
