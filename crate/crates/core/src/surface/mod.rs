//! Zero-level isosurface of a labeled grid: surface voxel sets, raycast
//! images and labeled triangle meshes.

mod mesh;
mod raycast;

pub use mesh::{extract_mesh, TriangleMesh};
pub use raycast::{raycast, RaycastImages};

use crate::volume::{LabelId, VoxelGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceVoxel {
    pub index: [usize; 3],
    pub label: LabelId,
    pub score: f32,
}

/// Observed voxels adjacent to a sign change of the sdf, in row-major order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SurfaceVoxelSet {
    pub entries: Vec<SurfaceVoxel>,
}

impl SurfaceVoxelSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SurfaceVoxel> {
        self.entries.iter()
    }
}

/// A voxel is on the surface when it is observed and one of its six face
/// neighbors is observed with an sdf of opposite sign (product <= 0).
pub fn is_surface_voxel(grid: &VoxelGrid, idx: [usize; 3]) -> bool {
    let Some(v) = grid.get(idx) else {
        return false;
    };
    if !v.is_observed() {
        return false;
    }
    let dims = grid.dims();
    for axis in 0..3 {
        for forward in [false, true] {
            let mut n = idx;
            if forward {
                if n[axis] + 1 >= dims[axis] {
                    continue;
                }
                n[axis] += 1;
            } else {
                if n[axis] == 0 {
                    continue;
                }
                n[axis] -= 1;
            }
            let w = &grid.voxels()[grid.linear_index(n)];
            if w.is_observed() && v.sdf * w.sdf <= 0.0 {
                return true;
            }
        }
    }
    false
}

pub fn extract_surface_voxels(grid: &VoxelGrid) -> SurfaceVoxelSet {
    let entries = (0..grid.voxels().len())
        .filter_map(|i| {
            let idx = grid.index_of(i);
            is_surface_voxel(grid, idx).then(|| {
                let v = &grid.voxels()[i];
                SurfaceVoxel {
                    index: idx,
                    label: v.label,
                    score: v.score,
                }
            })
        })
        .collect();
    SurfaceVoxelSet { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{GridParams, Voxel};

    #[test]
    fn empty_grid_has_no_surface() {
        let g = VoxelGrid::new(GridParams::new([8, 8, 8], 0.1, [0.0; 3])).unwrap();
        assert!(extract_surface_voxels(&g).is_empty());
    }

    #[test]
    fn uniform_positive_field_has_no_surface() {
        let mut g = VoxelGrid::new(GridParams::new([8, 8, 8], 0.1, [0.0; 3])).unwrap();
        for v in g.voxels_mut() {
            *v = Voxel {
                sdf: 0.2,
                weight: 1.0,
                ..Voxel::default()
            };
        }
        assert!(extract_surface_voxels(&g).is_empty());
    }

    #[test]
    fn step_field_gives_two_layer_slab() {
        let mut g = VoxelGrid::new(GridParams::new([6, 6, 6], 0.1, [0.0; 3])).unwrap();
        for i in 0..g.voxels().len() {
            let [_, _, z] = g.index_of(i);
            g.voxels_mut()[i] = Voxel {
                sdf: if z < 3 { 0.1 } else { -0.1 },
                weight: 1.0,
                label: LabelId(4),
                score: 2.0,
            };
        }
        let set = extract_surface_voxels(&g);
        assert_eq!(set.len(), 2 * 36);
        assert!(set.iter().all(|e| e.index[2] == 2 || e.index[2] == 3));
        assert!(set.iter().all(|e| e.label == LabelId(4)));
    }

    #[test]
    fn unobserved_neighbor_is_ignored() {
        let mut g = VoxelGrid::new(GridParams::new([2, 1, 1], 0.1, [0.0; 3])).unwrap();
        g.voxels_mut()[0] = Voxel {
            sdf: 0.1,
            weight: 1.0,
            ..Voxel::default()
        };
        g.voxels_mut()[1].sdf = -0.1;
        assert!(extract_surface_voxels(&g).is_empty());
        g.voxels_mut()[1].weight = 1.0;
        assert_eq!(extract_surface_voxels(&g).len(), 2);
    }
}
