//! `SLTV1` volume files.
//!
//! Header (46 bytes, little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 5    | magic `SLTV1`                           |
//! | 5      | 1    | encoding: 0 packed-half, 1 full         |
//! | 6      | 12   | dims nx, ny, nz (u32)                   |
//! | 18     | 4    | voxel_size (f32)                        |
//! | 22     | 12   | origin x, y, z (f32)                    |
//! | 34     | 4    | mu (f32)                                |
//! | 38     | 4    | w_max (f32)                             |
//! | 42     | 4    | w_clamp (f32)                           |
//!
//! The payload follows in row-major voxel order (x fastest). Packed voxels
//! are 8 bytes (sdf f16, weight f16, label u16, score f16); full voxels are
//! 14 bytes (sdf f32, weight f32, label u16, score f32).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{pack, unpack, GridParams, LabelId, PackedVoxel, Voxel, VoxelGrid};

const MAGIC: &[u8; 5] = b"SLTV1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeEncoding {
    PackedHalf,
    Full,
}

impl VolumeEncoding {
    pub fn bytes_per_voxel(self) -> u64 {
        match self {
            VolumeEncoding::PackedHalf => PackedVoxel::BYTES as u64,
            VolumeEncoding::Full => 14,
        }
    }

    fn tag(self) -> u8 {
        match self {
            VolumeEncoding::PackedHalf => 0,
            VolumeEncoding::Full => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeHeader {
    pub params: GridParams,
    pub encoding: VolumeEncoding,
}

impl VolumeHeader {
    pub const LEN: u64 = 46;

    pub fn payload_len(&self) -> Result<u64> {
        let d = self.params.dims.map(|d| d as u64);
        d[0].checked_mul(d[1])
            .and_then(|n| n.checked_mul(d[2]))
            .and_then(|n| n.checked_mul(self.encoding.bytes_per_voxel()))
            .ok_or(Error::DimsOverflow(self.params.dims.map(|d| d as u32)))
    }

    pub fn to_bytes(&self) -> Result<[u8; Self::LEN as usize]> {
        let mut b = [0u8; Self::LEN as usize];
        b[0..5].copy_from_slice(MAGIC);
        b[5] = self.encoding.tag();
        let mut off = 6;
        for d in self.params.dims {
            let d = u32::try_from(d)
                .map_err(|_| Error::InvalidParameter(format!("dimension {d} exceeds u32")))?;
            b[off..off + 4].copy_from_slice(&d.to_le_bytes());
            off += 4;
        }
        let p = &self.params;
        for v in [p.voxel_size, p.origin[0], p.origin[1], p.origin[2], p.mu, p.w_max, p.w_clamp] {
            b[off..off + 4].copy_from_slice(&v.to_le_bytes());
            off += 4;
        }
        Ok(b)
    }

    pub fn from_bytes(b: &[u8; Self::LEN as usize]) -> Result<Self> {
        if &b[0..5] != MAGIC {
            return Err(Error::BadMagic);
        }
        let encoding = match b[5] {
            0 => VolumeEncoding::PackedHalf,
            1 => VolumeEncoding::Full,
            t => return Err(Error::InvalidParameter(format!("unknown volume encoding tag {t}"))),
        };
        let u = |o: usize| u32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]]);
        let f = |o: usize| f32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]]);
        let dims32 = [u(6), u(10), u(14)];
        let params = GridParams {
            dims: dims32.map(|d| d as usize),
            voxel_size: f(18),
            origin: [f(22), f(26), f(30)],
            mu: f(34),
            w_max: f(38),
            w_clamp: f(42),
        };
        let header = VolumeHeader { params, encoding };
        header
            .payload_len()
            .map_err(|_| Error::DimsOverflow(dims32))?;
        if usize::try_from(header.payload_len()?).is_err() {
            return Err(Error::DimsOverflow(dims32));
        }
        Ok(header)
    }
}

/// Read and validate the header, checking the file holds exactly the payload
/// it declares.
pub fn load_volume_header(path: &Path) -> Result<VolumeHeader> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let file_len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut buf = [0u8; VolumeHeader::LEN as usize];
    BufReader::new(file).read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::BadMagic,
        _ => Error::io(path, e),
    })?;
    let header = VolumeHeader::from_bytes(&buf)?;
    let expected = header.payload_len()?;
    let found = file_len - VolumeHeader::LEN;
    if found < expected {
        return Err(Error::TruncatedPayload { expected, found });
    }
    if found > expected {
        return Err(Error::format(path, format!("{} trailing bytes after payload", found - expected)));
    }
    Ok(header)
}

pub fn save_volume(path: &Path, grid: &VoxelGrid, encoding: VolumeEncoding) -> Result<()> {
    let header = VolumeHeader {
        params: *grid.params(),
        encoding,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    let io = |e| Error::io(path, e);
    w.write_all(&header.to_bytes()?).map_err(io)?;
    for v in grid.voxels() {
        match encoding {
            VolumeEncoding::PackedHalf => w.write_all(&pack(v)?.to_le_bytes()).map_err(io)?,
            VolumeEncoding::Full => {
                w.write_all(&v.sdf.to_le_bytes()).map_err(io)?;
                w.write_all(&v.weight.to_le_bytes()).map_err(io)?;
                w.write_all(&v.label.0.to_le_bytes()).map_err(io)?;
                w.write_all(&v.score.to_le_bytes()).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

pub fn load_volume(path: &Path) -> Result<VoxelGrid> {
    let header = load_volume_header(path)?;
    header.params.validate()?;
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(|e| Error::io(path, e))?;
    let payload = &payload[VolumeHeader::LEN as usize..];
    let voxels: Vec<Voxel> = match header.encoding {
        VolumeEncoding::PackedHalf => payload
            .chunks_exact(8)
            .map(|c| unpack(&PackedVoxel::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect(),
        VolumeEncoding::Full => payload
            .chunks_exact(14)
            .map(|c| {
                let f = |o: usize| f32::from_le_bytes([c[o], c[o + 1], c[o + 2], c[o + 3]]);
                Voxel {
                    sdf: f(0),
                    weight: f(4),
                    label: LabelId(u16::from_le_bytes([c[8], c[9]])),
                    score: f(10),
                }
            })
            .collect(),
    };
    VoxelGrid::from_voxels(header.params, voxels)
}
