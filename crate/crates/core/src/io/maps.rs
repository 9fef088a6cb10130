use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{DepthImage, Image, ScoreMap};
use crate::volume::LabelId;

/// Depth PNG units per meter (millimeters).
pub const DEFAULT_DEPTH_SCALE: f32 = 1000.0;

fn write_png(path: &Path, w: usize, h: usize, color: png::ColorType, depth: png::BitDepth, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    enc.set_color(color);
    enc.set_depth(depth);
    let mut writer = enc
        .write_header()
        .map_err(|e| Error::format(path, e.to_string()))?;
    writer
        .write_image_data(data)
        .map_err(|e| Error::format(path, e.to_string()))?;
    writer.finish().map_err(|e| Error::format(path, e.to_string()))
}

fn read_gray16(path: &Path) -> Result<Image<u16>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = png::Decoder::new(BufReader::new(file));
    dec.set_transformations(png::Transformations::IDENTITY);
    let mut reader = dec
        .read_info()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let info = reader.info();
    let (w, h) = (info.width as usize, info.height as usize);
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::format(
            path,
            format!(
                "expected 16-bit single-channel PNG, found {}-bit {:?}",
                info.bit_depth as u8, info.color_type
            ),
        ));
    }
    let mut buf = vec![0u8; w * h * 2];
    reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let data = buf
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Image::from_vec(w, h, data)
}

fn write_gray16(path: &Path, img: &Image<u16>) -> Result<()> {
    let bytes: Vec<u8> = img.as_slice().iter().flat_map(|v| v.to_be_bytes()).collect();
    write_png(path, img.width(), img.height(), png::ColorType::Grayscale, png::BitDepth::Sixteen, &bytes)
}

pub fn save_depth(path: &Path, depth: &DepthImage, depth_scale: f32) -> Result<()> {
    let mut out = Vec::with_capacity(depth.as_slice().len());
    for &m in depth.as_slice() {
        let q = (m * depth_scale).round();
        if !(0.0..=u16::MAX as f32).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "depth {m} m not representable at scale {depth_scale}"
            )));
        }
        out.push(q as u16);
    }
    write_gray16(path, &Image::from_vec(depth.width(), depth.height(), out)?)
}

/// Stored value 0 loads as invalid depth (0.0).
pub fn load_depth(path: &Path, depth_scale: f32) -> Result<DepthImage> {
    let raw = read_gray16(path)?;
    let data = raw.as_slice().iter().map(|&v| v as f32 / depth_scale).collect();
    Image::from_vec(raw.width(), raw.height(), data)
}

pub fn save_category(path: &Path, category: &Image<LabelId>) -> Result<()> {
    let raw = category.as_slice().iter().map(|l| l.0).collect();
    write_gray16(path, &Image::from_vec(category.width(), category.height(), raw)?)
}

pub fn load_category(path: &Path) -> Result<Image<LabelId>> {
    let raw = read_gray16(path)?;
    let data = raw.as_slice().iter().map(|&v| LabelId(v)).collect();
    Image::from_vec(raw.width(), raw.height(), data)
}

fn check_score(path: &Path, s: f32) -> Result<()> {
    if s.is_nan() {
        return Err(Error::format(path, "score is NaN"));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::format(path, format!("score {s} outside [0, 1]")));
    }
    Ok(())
}

/// Little-endian PFM, rows stored bottom to top.
pub fn save_score(path: &Path, score: &ScoreMap) -> Result<()> {
    for &s in score.as_slice() {
        check_score(path, s)?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "Pf\n{} {}\n-1.0\n", score.width(), score.height()).map_err(io)?;
    for y in (0..score.height()).rev() {
        for v in score.row(y) {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn load_score(path: &Path) -> Result<ScoreMap> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;

    // Three whitespace-separated header lines: magic, "w h", scale.
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, "truncated PFM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1; // single whitespace byte before the raster
    match fields[0].as_str() {
        "Pf" => {}
        "PF" => return Err(Error::format(path, "expected single-channel PFM (Pf), found 3-channel PF")),
        m => return Err(Error::format(path, format!("not a PFM file (magic {m:?})"))),
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::format(path, format!("bad PFM dimension {s:?}")))
    };
    let (w, h) = (parse_dim(&fields[1])?, parse_dim(&fields[2])?);
    let scale: f32 = fields[3]
        .parse()
        .map_err(|_| Error::format(path, format!("bad PFM scale {:?}", fields[3])))?;
    let little = scale < 0.0;
    let need = w * h * 4;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() != need {
        return Err(Error::format(
            path,
            format!("PFM raster is {} bytes, expected {need}", raster.len()),
        ));
    }
    let mut data = vec![0f32; w * h];
    for (i, b) in raster.chunks_exact(4).enumerate() {
        let b = [b[0], b[1], b[2], b[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        check_score(path, v)?;
        let (x, y_from_bottom) = (i % w, i / w);
        data[(h - 1 - y_from_bottom) * w + x] = v;
    }
    Image::from_vec(w, h, data)
}

pub fn save_gray8(path: &Path, img: &Image<u8>) -> Result<()> {
    write_png(path, img.width(), img.height(), png::ColorType::Grayscale, png::BitDepth::Eight, img.as_slice())
}

pub fn save_rgb8(path: &Path, img: &Image<[u8; 3]>) -> Result<()> {
    let bytes: Vec<u8> = img.as_slice().iter().flatten().copied().collect();
    write_png(path, img.width(), img.height(), png::ColorType::Rgb, png::BitDepth::Eight, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn depth_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        let mut d = Image::filled(3, 2, 0.0f32);
        d.set(1, 0, 1.234);
        d.set(2, 1, 0.5);
        save_depth(&p, &d, 1000.0).unwrap();
        let raw = read_gray16(&p).unwrap();
        assert_eq!(raw.get(1, 0), 1234);
        assert_eq!(raw.get(0, 0), 0);
        let back = load_depth(&p, 1000.0).unwrap();
        assert_eq!(back.get(0, 0), 0.0);
        assert!((back.get(1, 0) - 1.234).abs() <= 1e-3);
    }

    #[test]
    fn depth_rejects_wrong_format() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgb.png");
        save_rgb8(&p, &Image::filled(2, 2, [1u8, 2, 3])).unwrap();
        let err = load_depth(&p, 1000.0).unwrap_err().to_string();
        assert!(err.contains("8-bit") && err.contains("Rgb"), "{err}");
    }

    #[test]
    fn depth_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let d = Image::filled(1, 1, 70.0f32);
        assert!(save_depth(&dir.path().join("d.png"), &d, 1000.0).is_err());
    }

    #[test]
    fn score_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.pfm");
        std::fs::write(&p, [b"Pf\n1 1\n-1.0\n".as_slice(), &1.5f32.to_le_bytes()].concat()).unwrap();
        assert!(load_score(&p).unwrap_err().to_string().contains("outside [0, 1]"));
        std::fs::write(&p, [b"Pf\n1 1\n-1.0\n".as_slice(), &f32::NAN.to_le_bytes()].concat()).unwrap();
        assert!(load_score(&p).unwrap_err().to_string().contains("NaN"));
        std::fs::write(&p, [b"Pf\n1 1\n1.0\n".as_slice(), &0.25f32.to_be_bytes()].concat()).unwrap();
        assert_eq!(load_score(&p).unwrap().get(0, 0), 0.25);
        assert!(save_score(&p, &Image::filled(1, 1, -0.1)).is_err());
    }

    #[test]
    fn score_one_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.pfm");
        save_score(&p, &Image::filled(4, 3, 1.0)).unwrap();
        assert_eq!(load_score(&p).unwrap(), Image::filled(4, 3, 1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn depth_round_trip(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("d.png");
            let data: Vec<f32> = (0..w * h)
                .map(|i| {
                    let x = seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407));
                    if x % 7 == 0 { 0.0 } else { (x >> 40) as f32 / (1u64 << 24) as f32 * 60.0 }
                })
                .collect();
            let d = Image::from_vec(w, h, data).unwrap();
            save_depth(&p, &d, 1000.0).unwrap();
            let back = load_depth(&p, 1000.0).unwrap();
            for (a, b) in d.as_slice().iter().zip(back.as_slice()) {
                prop_assert!((a - b).abs() <= 1.0 / 1000.0);
                prop_assert_eq!(*a == 0.0 || (a * 1000.0).round() == 0.0, *b == 0.0);
            }
        }

        #[test]
        fn category_round_trip(w in 1usize..24, h in 1usize..24, labels in proptest::collection::vec(any::<u16>(), 576)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("c.png");
            let c = Image::from_vec(w, h, labels[..w * h].iter().map(|&l| LabelId(l)).collect()).unwrap();
            save_category(&p, &c).unwrap();
            prop_assert_eq!(load_category(&p).unwrap(), c);
        }

        #[test]
        fn score_round_trip(w in 1usize..24, h in 1usize..24, vals in proptest::collection::vec(0.0f32..=1.0, 576)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("s.pfm");
            let s = Image::from_vec(w, h, vals[..w * h].to_vec()).unwrap();
            save_score(&p, &s).unwrap();
            prop_assert_eq!(load_score(&p).unwrap(), s);
        }
    }
}
