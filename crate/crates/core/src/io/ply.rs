use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::surface::TriangleMesh;
use crate::volume::LabelId;

/// Deterministic color for a label: grey for unlabeled, a hashed hue
/// otherwise.
pub fn label_color(label: LabelId) -> [u8; 3] {
    if label.is_unlabeled() {
        return [128, 128, 128];
    }
    let mut h = (label.0 as u32 + 1).wrapping_mul(0x9E37_79B9);
    h ^= h >> 16;
    h = h.wrapping_mul(0x85EB_CA6B);
    h ^= h >> 13;
    [(h >> 16) as u8, (h >> 8) as u8, h as u8]
}

/// Write a binary little-endian PLY with per-vertex color, label and score.
pub fn export_mesh_ply(
    mesh: &TriangleMesh,
    path: &Path,
    palette: impl Fn(LabelId) -> [u8; 3],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_ply(&mut w, mesh, palette).map_err(|e| Error::io(path, e))
}

pub fn write_mesh_ply(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    export_mesh_ply(mesh, path, label_color)
}

fn write_ply(
    w: &mut impl Write,
    mesh: &TriangleMesh,
    palette: impl Fn(LabelId) -> [u8; 3],
) -> std::io::Result<()> {
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\n\
         element vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         property ushort label\nproperty float score\n\
         element face {}\n\
         property list uchar uint vertex_indices\n\
         end_header\n",
        mesh.positions.len(),
        mesh.triangles.len()
    )?;
    for ((p, l), s) in mesh.positions.iter().zip(&mesh.labels).zip(&mesh.scores) {
        for c in p {
            w.write_all(&c.to_le_bytes())?;
        }
        w.write_all(&palette(*l))?;
        w.write_all(&l.0.to_le_bytes())?;
        w.write_all(&s.to_le_bytes())?;
    }
    for t in &mesh.triangles {
        w.write_all(&[3])?;
        for i in t {
            w.write_all(&i.to_le_bytes())?;
        }
    }
    w.flush()
}

/// Read a mesh written by [`export_mesh_ply`]. Only that exact layout is
/// accepted.
pub fn read_mesh_ply(path: &Path) -> Result<TriangleMesh> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |msg: &str| Error::format(path, msg.to_string());
    let mut line = String::new();
    let (mut nv, mut nf) = (None, None);
    let mut first = true;
    loop {
        line.clear();
        if r.read_line(&mut line).map_err(|e| Error::io(path, e))? == 0 {
            return Err(bad("missing end_header"));
        }
        let l = line.trim_end();
        if first {
            if l != "ply" {
                return Err(bad("not a PLY file"));
            }
            first = false;
            continue;
        }
        let mut it = l.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some("format"), Some(f), _) if f != "binary_little_endian" => {
                return Err(bad("only binary_little_endian is supported"))
            }
            (Some("element"), Some("vertex"), Some(n)) => nv = n.parse::<usize>().ok(),
            (Some("element"), Some("face"), Some(n)) => nf = n.parse::<usize>().ok(),
            (Some("end_header"), _, _) => break,
            _ => {}
        }
    }
    let (nv, nf) = match (nv, nf) {
        (Some(v), Some(f)) => (v, f),
        _ => return Err(bad("missing element counts")),
    };
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
    const VERTEX_BYTES: usize = 12 + 3 + 2 + 4;
    const FACE_BYTES: usize = 1 + 12;
    if body.len() != nv * VERTEX_BYTES + nf * FACE_BYTES {
        return Err(bad("body size does not match header"));
    }
    let f32_at = |b: &[u8], o: usize| f32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]]);
    let mut mesh = TriangleMesh::default();
    for c in body[..nv * VERTEX_BYTES].chunks_exact(VERTEX_BYTES) {
        mesh.positions.push([f32_at(c, 0), f32_at(c, 4), f32_at(c, 8)]);
        mesh.labels.push(LabelId(u16::from_le_bytes([c[15], c[16]])));
        mesh.scores.push(f32_at(c, 17));
    }
    for c in body[nv * VERTEX_BYTES..].chunks_exact(FACE_BYTES) {
        if c[0] != 3 {
            return Err(bad("only triangles are supported"));
        }
        let u = |o: usize| u32::from_le_bytes([c[o], c[o + 1], c[o + 2], c[o + 3]]);
        let t = [u(1), u(5), u(9)];
        if t.iter().any(|&i| i as usize >= nv) {
            return Err(bad("face index out of range"));
        }
        mesh.triangles.push(t);
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unlabeled_is_grey() {
        assert_eq!(label_color(LabelId::UNLABELED), [128, 128, 128]);
        assert_ne!(label_color(LabelId(2)), label_color(LabelId(3)));
    }

    #[test]
    fn round_trip() {
        let mesh = TriangleMesh {
            positions: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.5]],
            labels: vec![LabelId(2), LabelId(3), LabelId(0)],
            scores: vec![1.5, -2.0, 0.0],
            triangles: vec![[0, 1, 2]],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ply");
        write_mesh_ply(&mesh, &p).unwrap();
        assert_eq!(read_mesh_ply(&p).unwrap(), mesh);
    }
}
