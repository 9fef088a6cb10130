//! Labeled TSDF voxels and the dense grid that holds them.

use half::f16;
use nalgebra::Point3;

use crate::error::{Error, Result};

/// Semantic category id. 0 is unlabeled, 1 is background, 2.. are objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LabelId(pub u16);

impl LabelId {
    pub const UNLABELED: LabelId = LabelId(0);
    pub const BACKGROUND: LabelId = LabelId(1);

    pub fn is_unlabeled(self) -> bool {
        self == Self::UNLABELED
    }

    /// True for ids that name an actual object category.
    pub fn is_object(self) -> bool {
        self.0 >= 2
    }
}

impl From<u16> for LabelId {
    fn from(v: u16) -> Self {
        LabelId(v)
    }
}

impl std::fmt::Display for LabelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// One cell of the labeled TSDF.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Voxel {
    /// Truncated signed distance in meters, positive in front of the surface.
    pub sdf: f32,
    /// Number of depth observations averaged in, capped at `w_max`.
    pub weight: f32,
    pub label: LabelId,
    /// Accumulated evidence for `label`, capped at `w_clamp`.
    pub score: f32,
}

impl Voxel {
    pub fn is_observed(&self) -> bool {
        self.weight > 0.0
    }
}

/// Eight-byte storage form of a [`Voxel`]: half-precision sdf, weight and
/// score around a 16-bit label.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PackedVoxel {
    sdf: u16,
    weight: u16,
    label: u16,
    score: u16,
}

const _: () = assert!(std::mem::size_of::<PackedVoxel>() == 8);

impl PackedVoxel {
    pub const BYTES: usize = 8;

    pub fn to_le_bytes(self) -> [u8; 8] {
        let mut out = [0u8; 8];
        out[0..2].copy_from_slice(&self.sdf.to_le_bytes());
        out[2..4].copy_from_slice(&self.weight.to_le_bytes());
        out[4..6].copy_from_slice(&self.label.to_le_bytes());
        out[6..8].copy_from_slice(&self.score.to_le_bytes());
        out
    }

    pub fn from_le_bytes(b: [u8; 8]) -> Self {
        PackedVoxel {
            sdf: u16::from_le_bytes([b[0], b[1]]),
            weight: u16::from_le_bytes([b[2], b[3]]),
            label: u16::from_le_bytes([b[4], b[5]]),
            score: u16::from_le_bytes([b[6], b[7]]),
        }
    }
}

fn to_half(value: f32, field: &'static str) -> Result<u16> {
    let h = f16::from_f32(value);
    if !value.is_finite() || !h.is_finite() {
        return Err(Error::NonFiniteVoxel(field));
    }
    Ok(h.to_bits())
}

pub fn pack(v: &Voxel) -> Result<PackedVoxel> {
    Ok(PackedVoxel {
        sdf: to_half(v.sdf, "sdf")?,
        weight: to_half(v.weight, "weight")?,
        label: v.label.0,
        score: to_half(v.score, "score")?,
    })
}

pub fn unpack(p: &PackedVoxel) -> Voxel {
    Voxel {
        sdf: f16::from_bits(p.sdf).to_f32(),
        weight: f16::from_bits(p.weight).to_f32(),
        label: LabelId(p.label),
        score: f16::from_bits(p.score).to_f32(),
    }
}

/// Geometry and fusion constants of a voxel grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub dims: [usize; 3],
    /// Edge length of one voxel, meters.
    pub voxel_size: f32,
    /// World position of the outer corner of voxel (0, 0, 0).
    pub origin: [f32; 3],
    /// Truncation distance, meters.
    pub mu: f32,
    /// Cap on the depth-observation weight.
    pub w_max: f32,
    /// Cap on the label score.
    pub w_clamp: f32,
}

impl GridParams {
    pub const DEFAULT_TRUNCATION_VOXELS: f32 = 4.0;
    pub const DEFAULT_W_MAX: f32 = 64.0;
    pub const DEFAULT_W_CLAMP: f32 = 20.0;

    /// Grid with default truncation (4 voxels), `w_max` 64 and `w_clamp` 20.
    pub fn new(dims: [usize; 3], voxel_size: f32, origin: [f32; 3]) -> Self {
        GridParams {
            dims,
            voxel_size,
            origin,
            mu: Self::DEFAULT_TRUNCATION_VOXELS * voxel_size,
            w_max: Self::DEFAULT_W_MAX,
            w_clamp: Self::DEFAULT_W_CLAMP,
        }
    }

    /// Cube of `n` voxels per side centered on `center`.
    pub fn centered(n: usize, voxel_size: f32, center: [f32; 3]) -> Self {
        let half = n as f32 * voxel_size * 0.5;
        Self::new(
            [n, n, n],
            voxel_size,
            [center[0] - half, center[1] - half, center[2] - half],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if self.dims.iter().any(|&d| d == 0) {
            return fail(format!("grid dims must be >= 1, got {:?}", self.dims));
        }
        if self.voxel_count().is_none() {
            return fail(format!("grid dims overflow: {:?}", self.dims));
        }
        if !(self.voxel_size > 0.0 && self.voxel_size.is_finite()) {
            return fail(format!("voxel_size must be > 0, got {}", self.voxel_size));
        }
        if !self.origin.iter().all(|o| o.is_finite()) {
            return fail("origin must be finite".into());
        }
        if !(self.mu >= self.voxel_size && self.mu.is_finite()) {
            return fail(format!("mu must be >= voxel_size, got {}", self.mu));
        }
        if !(self.w_max >= 1.0 && self.w_max.is_finite()) {
            return fail(format!("w_max must be >= 1, got {}", self.w_max));
        }
        if !(self.w_clamp > 0.0 && self.w_clamp.is_finite()) {
            return fail(format!("w_clamp must be > 0, got {}", self.w_clamp));
        }
        Ok(())
    }

    pub fn voxel_count(&self) -> Option<usize> {
        self.dims[0]
            .checked_mul(self.dims[1])
            .and_then(|n| n.checked_mul(self.dims[2]))
    }

    /// Same placement and resolution (fusion constants may differ).
    pub fn same_geometry(&self, other: &GridParams) -> bool {
        self.dims == other.dims && self.voxel_size == other.voxel_size && self.origin == other.origin
    }

    pub fn world_min(&self) -> Point3<f32> {
        Point3::from(self.origin)
    }

    pub fn world_max(&self) -> Point3<f32> {
        Point3::new(
            self.origin[0] + self.dims[0] as f32 * self.voxel_size,
            self.origin[1] + self.dims[1] as f32 * self.voxel_size,
            self.origin[2] + self.dims[2] as f32 * self.voxel_size,
        )
    }
}

/// Dense row-major (x fastest) labeled TSDF.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    params: GridParams,
    voxels: Vec<Voxel>,
}

impl VoxelGrid {
    pub fn new(params: GridParams) -> Result<Self> {
        params.validate()?;
        let n = params.voxel_count().expect("validated");
        Ok(VoxelGrid {
            params,
            voxels: vec![Voxel::default(); n],
        })
    }

    pub fn from_voxels(params: GridParams, voxels: Vec<Voxel>) -> Result<Self> {
        params.validate()?;
        if Some(voxels.len()) != params.voxel_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} voxels for dims {:?}",
                voxels.len(),
                params.dims
            )));
        }
        Ok(VoxelGrid { params, voxels })
    }

    pub fn params(&self) -> &GridParams {
        &self.params
    }

    pub fn dims(&self) -> [usize; 3] {
        self.params.dims
    }

    pub fn voxels(&self) -> &[Voxel] {
        &self.voxels
    }

    pub fn voxels_mut(&mut self) -> &mut [Voxel] {
        &mut self.voxels
    }

    #[inline]
    pub fn linear_index(&self, [x, y, z]: [usize; 3]) -> usize {
        let [nx, ny, _] = self.params.dims;
        x + nx * (y + ny * z)
    }

    pub fn index_of(&self, linear: usize) -> [usize; 3] {
        let [nx, ny, _] = self.params.dims;
        [linear % nx, (linear / nx) % ny, linear / (nx * ny)]
    }

    pub fn in_bounds(&self, idx: [usize; 3]) -> bool {
        idx.iter().zip(self.params.dims).all(|(&i, n)| i < n)
    }

    #[inline]
    pub fn get(&self, idx: [usize; 3]) -> Option<&Voxel> {
        if self.in_bounds(idx) {
            Some(&self.voxels[self.linear_index(idx)])
        } else {
            None
        }
    }

    pub fn get_mut(&mut self, idx: [usize; 3]) -> Option<&mut Voxel> {
        if self.in_bounds(idx) {
            let i = self.linear_index(idx);
            Some(&mut self.voxels[i])
        } else {
            None
        }
    }

    /// World position of a voxel center.
    pub fn voxel_center(&self, idx: [usize; 3]) -> Result<Point3<f32>> {
        if !self.in_bounds(idx) {
            return Err(Error::IndexOutOfBounds {
                index: idx,
                dims: self.params.dims,
            });
        }
        Ok(self.center_unchecked(idx))
    }

    #[inline]
    pub(crate) fn center_unchecked(&self, idx: [usize; 3]) -> Point3<f32> {
        let s = self.params.voxel_size;
        let o = self.params.origin;
        Point3::new(
            o[0] + (idx[0] as f32 + 0.5) * s,
            o[1] + (idx[1] as f32 + 0.5) * s,
            o[2] + (idx[2] as f32 + 0.5) * s,
        )
    }

    /// Continuous voxel coordinates, where integer values are voxel centers.
    #[inline]
    pub fn grid_coords(&self, p: &Point3<f32>) -> [f32; 3] {
        let s = self.params.voxel_size;
        let o = self.params.origin;
        [
            (p.x - o[0]) / s - 0.5,
            (p.y - o[1]) / s - 0.5,
            (p.z - o[2]) / s - 0.5,
        ]
    }

    /// Index of the voxel whose center is closest to `p`, if inside the grid.
    pub fn nearest_voxel(&self, p: &Point3<f32>) -> Option<[usize; 3]> {
        let g = self.grid_coords(p);
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let r = g[a].round();
            if r < 0.0 || r >= self.params.dims[a] as f32 {
                return None;
            }
            idx[a] = r as usize;
        }
        Some(idx)
    }

    /// Trilinear interpolation of the sdf over the eight surrounding voxel
    /// centers. `None` if any of them is unobserved or the point is outside
    /// the interpolatable interior.
    pub fn trilinear_sdf(&self, p: &Point3<f32>) -> Option<f32> {
        let g = self.grid_coords(p);
        let mut base = [0usize; 3];
        let mut frac = [0f32; 3];
        for a in 0..3 {
            let n = self.params.dims[a];
            if n < 2 || !(g[a] >= 0.0 && g[a] <= (n - 1) as f32) {
                return None;
            }
            // Points on the last center plane interpolate within the last cell.
            let b = (g[a].floor() as usize).min(n - 2);
            base[a] = b;
            frac[a] = g[a] - b as f32;
        }
        let [nx, ny, _] = self.params.dims;
        let i0 = base[0] + nx * (base[1] + ny * base[2]);
        let (sx, sy, sz) = (1, nx, nx * ny);
        let mut acc = 0.0f32;
        for corner in 0..8 {
            let (dx, dy, dz) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
            let v = &self.voxels[i0 + dx * sx + dy * sy + dz * sz];
            if v.weight <= 0.0 {
                return None;
            }
            let wx = if dx == 1 { frac[0] } else { 1.0 - frac[0] };
            let wy = if dy == 1 { frac[1] } else { 1.0 - frac[1] };
            let wz = if dz == 1 { frac[2] } else { 1.0 - frac[2] };
            acc += wx * wy * wz * v.sdf;
        }
        Some(acc)
    }
}

/// Grid stored in the eight-byte [`PackedVoxel`] layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedGrid {
    params: GridParams,
    voxels: Vec<PackedVoxel>,
}

impl PackedGrid {
    pub fn from_grid(grid: &VoxelGrid) -> Result<Self> {
        let voxels = grid.voxels().iter().map(pack).collect::<Result<Vec<_>>>()?;
        Ok(PackedGrid {
            params: *grid.params(),
            voxels,
        })
    }

    pub fn from_packed(params: GridParams, voxels: Vec<PackedVoxel>) -> Result<Self> {
        params.validate()?;
        if Some(voxels.len()) != params.voxel_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} packed voxels for dims {:?}",
                voxels.len(),
                params.dims
            )));
        }
        Ok(PackedGrid { params, voxels })
    }

    pub fn to_grid(&self) -> VoxelGrid {
        VoxelGrid {
            params: self.params,
            voxels: self.voxels.iter().map(unpack).collect(),
        }
    }

    pub fn params(&self) -> &GridParams {
        &self.params
    }

    pub fn voxels(&self) -> &[PackedVoxel] {
        &self.voxels
    }

    /// Bytes occupied by the voxel payload.
    pub fn payload_bytes(&self) -> usize {
        std::mem::size_of_val(self.voxels.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(n: usize, s: f32, origin: [f32; 3]) -> VoxelGrid {
        VoxelGrid::new(GridParams::new([n, n, n], s, origin)).unwrap()
    }

    #[test]
    fn voxel_center_examples() {
        let g = grid(10, 0.1, [0.0; 3]);
        let c = g.voxel_center([0, 0, 0]).unwrap();
        assert_relative_eq!(c, Point3::new(0.05, 0.05, 0.05), epsilon = 1e-6);
        let c = g.voxel_center([9, 0, 0]).unwrap();
        assert_relative_eq!(c, Point3::new(0.95, 0.05, 0.05), epsilon = 1e-6);

        let g = grid(4, 0.5, [-1.0; 3]);
        let c = g.voxel_center([2, 2, 2]).unwrap();
        assert_relative_eq!(c, Point3::new(0.25, 0.25, 0.25), epsilon = 1e-6);
    }

    #[test]
    fn voxel_center_out_of_bounds() {
        let g = grid(10, 0.1, [0.0; 3]);
        let err = g.voxel_center([10, 0, 0]).unwrap_err();
        assert!(err.to_string().contains("index out of bounds"));
    }

    #[test]
    fn params_validation() {
        let mut p = GridParams::new([4, 4, 4], 0.1, [0.0; 3]);
        assert!(p.validate().is_ok());
        p.mu = 0.05;
        assert!(p.validate().is_err());
        let p = GridParams::new([0, 4, 4], 0.1, [0.0; 3]);
        assert!(p.validate().is_err());
        let mut p = GridParams::new([4, 4, 4], 0.1, [0.0; 3]);
        p.w_clamp = 0.0;
        assert!(p.validate().is_err());
    }

    fn observe_all(g: &mut VoxelGrid, f: impl Fn(Point3<f32>) -> f32) {
        for i in 0..g.voxels().len() {
            let c = g.center_unchecked(g.index_of(i));
            let v = &mut g.voxels_mut()[i];
            v.sdf = f(c);
            v.weight = 1.0;
        }
    }

    #[test]
    fn trilinear_constant_field() {
        let mut g = grid(4, 0.1, [0.0; 3]);
        observe_all(&mut g, |_| 0.04);
        let d = g.trilinear_sdf(&Point3::new(0.17, 0.22, 0.13)).unwrap();
        assert_relative_eq!(d, 0.04, epsilon = 1e-6);
    }

    #[test]
    fn trilinear_at_voxel_center() {
        let mut g = grid(4, 0.1, [0.0; 3]);
        observe_all(&mut g, |p| p.x * 0.3 - p.y + p.z * p.z);
        let c = g.voxel_center([1, 2, 1]).unwrap();
        let d = g.trilinear_sdf(&c).unwrap();
        assert_relative_eq!(d, g.get([1, 2, 1]).unwrap().sdf, epsilon = 1e-6);
    }

    #[test]
    fn trilinear_linear_midpoint() {
        // sdf 0.0 on the first center plane, 0.1 one voxel further in x.
        let mut g = grid(2, 0.1, [0.0; 3]);
        observe_all(&mut g, |p| if p.x < 0.1 { 0.0 } else { 0.1 });
        let d = g.trilinear_sdf(&Point3::new(0.1, 0.07, 0.08)).unwrap();
        assert_relative_eq!(d, 0.05, epsilon = 1e-6);
    }

    #[test]
    fn trilinear_unobserved_and_exterior() {
        let mut g = grid(4, 0.1, [0.0; 3]);
        assert!(g.trilinear_sdf(&Point3::new(0.2, 0.2, 0.2)).is_none());
        observe_all(&mut g, |_| 0.01);
        assert!(g.trilinear_sdf(&Point3::new(0.02, 0.2, 0.2)).is_none());
        assert!(g.trilinear_sdf(&Point3::new(0.2, 0.2, 0.39)).is_none());
        assert!(g.trilinear_sdf(&Point3::new(0.35, 0.35, 0.35)).is_some());
        g.get_mut([2, 2, 2]).unwrap().weight = 0.0;
        assert!(g.trilinear_sdf(&Point3::new(0.2, 0.2, 0.2)).is_none());
    }

    #[test]
    fn pack_zero_voxel_is_zero_bytes() {
        let p = pack(&Voxel::default()).unwrap();
        assert_eq!(p.to_le_bytes(), [0u8; 8]);
    }

    #[test]
    fn pack_examples() {
        let v = Voxel {
            sdf: 0.1,
            weight: 3.0,
            label: LabelId(65535),
            score: 7.5,
        };
        let u = unpack(&pack(&v).unwrap());
        assert!((u.sdf - 0.1).abs() <= 1e-4);
        assert_eq!(u.label, LabelId(65535));
        assert_eq!(u.weight, 3.0);
        assert_eq!(u.score, 7.5);
    }

    #[test]
    fn pack_rejects_non_finite() {
        let v = Voxel {
            score: f32::NAN,
            ..Voxel::default()
        };
        assert!(matches!(pack(&v), Err(Error::NonFiniteVoxel("score"))));
        let v = Voxel {
            sdf: f32::INFINITY,
            ..Voxel::default()
        };
        assert!(matches!(pack(&v), Err(Error::NonFiniteVoxel("sdf"))));
    }

    #[test]
    fn packed_grid_payload_is_eight_bytes_per_voxel() {
        let g = VoxelGrid::new(GridParams::new([128, 128, 128], 0.03, [0.0; 3])).unwrap();
        let p = PackedGrid::from_grid(&g).unwrap();
        assert_eq!(p.payload_bytes(), 128 * 128 * 128 * 8);
    }

    proptest! {
        #[test]
        fn pack_unpack_idempotent(bits in any::<[u8; 8]>()) {
            let p = PackedVoxel::from_le_bytes(bits);
            let v = unpack(&p);
            prop_assume!(v.sdf.is_finite() && v.weight.is_finite() && v.score.is_finite());
            let q = pack(&v).unwrap();
            // NaN payloads are excluded above; -0.0 and 0.0 keep their bits.
            prop_assert_eq!(q.to_le_bytes(), bits);
        }

        #[test]
        fn unpack_pack_is_one_quantization(sdf in -1.0f32..1.0, w in 0.0f32..64.0, s in -1.0f32..20.0, l in any::<u16>()) {
            let v = Voxel { sdf, weight: w, label: LabelId(l), score: s };
            let u = unpack(&pack(&v).unwrap());
            prop_assert_eq!(u.sdf, f16::from_f32(sdf).to_f32());
            prop_assert_eq!(u.score, f16::from_f32(s).to_f32());
            prop_assert_eq!(u.label, v.label);
            prop_assert_eq!(pack(&u).unwrap(), pack(&v).unwrap());
        }
    }
}
