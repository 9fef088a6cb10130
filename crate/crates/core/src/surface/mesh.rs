//! Marching cubes over the observed part of the grid.
//!
//! The per-configuration triangulation is derived from face rules rather
//! than a literal 256-entry table: on every cube face, crossing edges are
//! paired so that each inside corner is cut off on its own, which resolves
//! ambiguous faces identically for both cells sharing the face. Chaining the
//! face segments yields closed polygons per cell.

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::Vector3;

use crate::volume::{LabelId, VoxelGrid};

/// Triangle mesh with a label and score per vertex.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub positions: Vec<[f32; 3]>,
    pub labels: Vec<LabelId>,
    pub scores: Vec<f32>,
    /// Counter-clockwise when seen from the positive (free-space) side.
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn face_normal(&self, tri: usize) -> Vector3<f32> {
        let [a, b, c] = self.triangles[tri].map(|i| Vector3::from(self.positions[i as usize]));
        (b - a).cross(&(c - a))
    }
}

/// Cube edges as (corner a, corner b, axis); corner bits are (x, y, z).
const EDGES: [(u8, u8, u8); 12] = [
    (0, 1, 0),
    (2, 3, 0),
    (4, 5, 0),
    (6, 7, 0),
    (0, 2, 1),
    (1, 3, 1),
    (4, 6, 1),
    (5, 7, 1),
    (0, 4, 2),
    (1, 5, 2),
    (2, 6, 2),
    (3, 7, 2),
];

fn edge_between(a: u8, b: u8) -> u8 {
    let (a, b) = (a.min(b), a.max(b));
    EDGES
        .iter()
        .position(|&(x, y, _)| x == a && y == b)
        .expect("corners share an edge") as u8
}

fn corner_pos(c: u8) -> Vector3<f32> {
    Vector3::new((c & 1) as f32, ((c >> 1) & 1) as f32, ((c >> 2) & 1) as f32)
}

/// Oriented polygons (as edge ids) for every inside-corner mask.
fn polygon_table() -> &'static [Vec<Vec<u8>>; 256] {
    static TABLE: OnceLock<[Vec<Vec<u8>>; 256]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|mask| polygons_for(mask as u8)))
}

fn polygons_for(mask: u8) -> Vec<Vec<u8>> {
    let inside = |c: u8| mask & (1 << c) != 0;
    let mut links: [Vec<u8>; 12] = Default::default();

    for axis in 0..3u8 {
        let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2u8 {
            let ring: [u8; 4] = [(0, 0), (1, 0), (1, 1), (0, 1)]
                .map(|(db, dc)| (side << axis) | (db << b) | (dc << c));
            let ring_edges: [u8; 4] = std::array::from_fn(|i| edge_between(ring[i], ring[(i + 1) % 4]));
            let crossing: Vec<usize> = (0..4)
                .filter(|&i| inside(ring[i]) != inside(ring[(i + 1) % 4]))
                .collect();
            let mut pair = |x: u8, y: u8| {
                links[x as usize].push(y);
                links[y as usize].push(x);
            };
            match crossing.len() {
                0 => {}
                2 => pair(ring_edges[crossing[0]], ring_edges[crossing[1]]),
                4 => {
                    // Isolate each inside corner: join the two edges meeting at it.
                    for i in 0..4 {
                        if inside(ring[i]) {
                            pair(ring_edges[(i + 3) % 4], ring_edges[i]);
                        }
                    }
                }
                _ => unreachable!("a face ring has an even number of sign changes"),
            }
        }
    }

    let mut visited = [false; 12];
    let mut polygons = Vec::new();
    for start in 0..12u8 {
        if visited[start as usize] || links[start as usize].is_empty() {
            continue;
        }
        let mut cycle = vec![start];
        visited[start as usize] = true;
        let mut prev = start;
        let mut cur = links[start as usize][0];
        while cur != start {
            visited[cur as usize] = true;
            cycle.push(cur);
            let l = &links[cur as usize];
            let next = if l[0] == prev { l[1] } else { l[0] };
            prev = cur;
            cur = next;
        }
        orient(&mut cycle, &inside);
        polygons.push(cycle);
    }
    polygons
}

/// Make the polygon normal point from inside corners to outside corners.
fn orient(cycle: &mut [u8], inside: &impl Fn(u8) -> bool) {
    let mid = |e: u8| {
        let (a, b, _) = EDGES[e as usize];
        (corner_pos(a) + corner_pos(b)) * 0.5
    };
    let mut normal = Vector3::zeros();
    for i in 0..cycle.len() {
        let (p, q) = (mid(cycle[i]), mid(cycle[(i + 1) % cycle.len()]));
        normal += p.cross(&q);
    }
    let outward: Vector3<f32> = cycle
        .iter()
        .map(|&e| {
            let (a, b, _) = EDGES[e as usize];
            let (inn, out) = if inside(a) { (a, b) } else { (b, a) };
            corner_pos(out) - corner_pos(inn)
        })
        .sum();
    if normal.dot(&outward) < 0.0 {
        cycle.reverse();
    }
}

/// Marching-cubes mesh of the sdf zero level over cells whose eight corners
/// are all observed. Vertices sit on the linear zero crossing along grid
/// edges and take label and score from the nearer edge endpoint.
pub fn extract_mesh(grid: &VoxelGrid) -> TriangleMesh {
    let table = polygon_table();
    let [nx, ny, nz] = grid.dims();
    let mut mesh = TriangleMesh::default();
    if nx < 2 || ny < 2 || nz < 2 {
        return mesh;
    }
    let voxels = grid.voxels();
    let strides = [1, nx, nx * ny];
    let mut vertex_of_edge: HashMap<(usize, u8), u32> = HashMap::new();

    for z in 0..nz - 1 {
        for y in 0..ny - 1 {
            for x in 0..nx - 1 {
                let base = grid.linear_index([x, y, z]);
                let corner_index = |c: u8| {
                    base + (c & 1) as usize * strides[0]
                        + ((c >> 1) & 1) as usize * strides[1]
                        + ((c >> 2) & 1) as usize * strides[2]
                };
                let mut mask = 0u8;
                let mut observed = true;
                for c in 0..8u8 {
                    let v = &voxels[corner_index(c)];
                    if !v.is_observed() {
                        observed = false;
                        break;
                    }
                    if v.sdf < 0.0 {
                        mask |= 1 << c;
                    }
                }
                if !observed || mask == 0 || mask == 0xff {
                    continue;
                }
                for poly in &table[mask as usize] {
                    let ids: Vec<u32> = poly
                        .iter()
                        .map(|&e| {
                            let (a, b, axis) = EDGES[e as usize];
                            let (ia, ib) = (corner_index(a), corner_index(b));
                            *vertex_of_edge.entry((ia, axis)).or_insert_with(|| {
                                push_vertex(&mut mesh, grid, ia, ib)
                            })
                        })
                        .collect();
                    for k in 1..ids.len() - 1 {
                        mesh.triangles.push([ids[0], ids[k], ids[k + 1]]);
                    }
                }
            }
        }
    }
    mesh
}

fn push_vertex(mesh: &mut TriangleMesh, grid: &VoxelGrid, ia: usize, ib: usize) -> u32 {
    let (va, vb) = (&grid.voxels()[ia], &grid.voxels()[ib]);
    let t = if va.sdf == vb.sdf {
        0.5
    } else {
        (va.sdf / (va.sdf - vb.sdf)).clamp(0.0, 1.0)
    };
    let pa = grid.center_unchecked(grid.index_of(ia));
    let pb = grid.center_unchecked(grid.index_of(ib));
    let p = pa + (pb - pa) * t;
    let nearest = if t <= 0.5 { va } else { vb };
    mesh.positions.push([p.x, p.y, p.z]);
    mesh.labels.push(nearest.label);
    mesh.scores.push(nearest.score);
    (mesh.positions.len() - 1) as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{GridParams, Voxel};
    use std::collections::HashMap;

    #[test]
    fn table_covers_every_crossing_edge_once() {
        for mask in 0..=255u8 {
            let polys = &polygon_table()[mask as usize];
            let mut seen = [0u8; 12];
            for p in polys {
                assert!(p.len() >= 3, "mask {mask:#x}");
                for &e in p {
                    seen[e as usize] += 1;
                }
            }
            for (e, &(a, b, _)) in EDGES.iter().enumerate() {
                let crosses = ((mask >> a) & 1) != ((mask >> b) & 1);
                assert_eq!(seen[e], crosses as u8, "mask {mask:#x} edge {e}");
            }
        }
    }

    fn sphere_grid(n: usize, radius: f32) -> VoxelGrid {
        let s = 1.0 / n as f32;
        let mut g = VoxelGrid::new(GridParams::new([n, n, n], s, [0.0; 3])).unwrap();
        for i in 0..g.voxels().len() {
            let c = g.voxel_center(g.index_of(i)).unwrap();
            let d = ((c.x - 0.5).powi(2) + (c.y - 0.5).powi(2) + (c.z - 0.5).powi(2)).sqrt();
            g.voxels_mut()[i] = Voxel {
                sdf: d - radius,
                weight: 1.0,
                label: LabelId(2),
                score: 1.0,
            };
        }
        g
    }

    #[test]
    fn empty_grid_gives_empty_mesh() {
        let g = VoxelGrid::new(GridParams::new([8, 8, 8], 0.1, [0.0; 3])).unwrap();
        assert!(extract_mesh(&g).is_empty());
    }

    #[test]
    fn sphere_mesh_is_closed_and_outward() {
        let g = sphere_grid(24, 0.3);
        let mesh = extract_mesh(&g);
        assert!(mesh.triangles.len() > 100);

        let mut edge_uses: HashMap<(u32, u32), i32> = HashMap::new();
        for t in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                // +1 for a->b, -1 for b->a: consistently oriented closed meshes cancel.
                *edge_uses.entry((a.min(b), a.max(b))).or_default() += if a < b { 1 } else { -1 };
            }
        }
        assert!(edge_uses.values().all(|&c| c == 0));

        for (i, t) in mesh.triangles.iter().enumerate() {
            let n = mesh.face_normal(i);
            let c = Vector3::from(mesh.positions[t[0] as usize]) - Vector3::new(0.5, 0.5, 0.5);
            assert!(n.dot(&c) >= 0.0, "inward-facing triangle {i}");
        }
        for p in &mesh.positions {
            let r = (Vector3::from(*p) - Vector3::new(0.5, 0.5, 0.5)).norm();
            assert!((r - 0.3).abs() < 0.5 / 24.0);
        }
    }
}
