//! Text scene descriptions.
//!
//! ```text
//! # comment
//! bounds -2 -2 -0.1 2 2 2.9
//! slab 2 floor z -0.1 0
//! box 3 bed -1.6 -1.5 0 -0.2 0.5 0.5
//! ```
//!
//! `bounds` must appear exactly once. Object names may not contain
//! whitespace.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::synth::{Aabb, Scene, SceneObject, Shape};
use crate::volume::LabelId;

pub fn parse_scene(text: &str, path: &Path) -> Result<Scene> {
    let mut bounds = None;
    let mut objects = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        let floats = |ts: &[&str]| {
            ts.iter()
                .map(|t| {
                    t.parse::<f32>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(format!("bad number {t:?}")))
                })
                .collect::<Result<Vec<f32>>>()
        };
        let label = |t: &str| t.parse::<u16>().map(LabelId).map_err(|_| err(format!("bad label {t:?}")));
        match toks[0] {
            "bounds" if toks.len() == 7 => {
                if bounds.is_some() {
                    return Err(err("duplicate bounds".into()));
                }
                let v = floats(&toks[1..])?;
                bounds = Some(Aabb {
                    min: [v[0], v[1], v[2]],
                    max: [v[3], v[4], v[5]],
                });
            }
            "box" if toks.len() == 9 => {
                let v = floats(&toks[3..])?;
                objects.push(SceneObject {
                    name: toks[2].to_string(),
                    label: label(toks[1])?,
                    shape: Shape::Box {
                        min: [v[0], v[1], v[2]],
                        max: [v[3], v[4], v[5]],
                    },
                });
            }
            "slab" if toks.len() == 6 => {
                let axis = match toks[3] {
                    "x" => 0,
                    "y" => 1,
                    "z" => 2,
                    a => return Err(err(format!("bad axis {a:?}"))),
                };
                let v = floats(&toks[4..])?;
                objects.push(SceneObject {
                    name: toks[2].to_string(),
                    label: label(toks[1])?,
                    shape: Shape::Slab { axis, lo: v[0], hi: v[1] },
                });
            }
            kw => return Err(err(format!("unrecognized line starting with {kw:?}"))),
        }
    }
    let bounds = bounds.ok_or_else(|| Error::format(path, "missing bounds line"))?;
    Scene::new(objects, bounds)
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene(&text, path)
}

pub fn format_scene(scene: &Scene) -> String {
    let b = &scene.bounds;
    let mut s = format!(
        "bounds {} {} {} {} {} {}\n",
        b.min[0], b.min[1], b.min[2], b.max[0], b.max[1], b.max[2]
    );
    for o in &scene.objects {
        match o.shape {
            Shape::Box { min, max } => s.push_str(&format!(
                "box {} {} {} {} {} {} {} {}\n",
                o.label, o.name, min[0], min[1], min[2], max[0], max[1], max[2]
            )),
            Shape::Slab { axis, lo, hi } => s.push_str(&format!(
                "slab {} {} {} {} {}\n",
                o.label,
                o.name,
                ["x", "y", "z"][axis],
                lo,
                hi
            )),
        }
    }
    s
}

pub fn save_scene(path: &Path, scene: &Scene) -> Result<()> {
    fs::write(path, format_scene(scene)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::default_room_scene;

    #[test]
    fn default_room_round_trips() {
        let s = default_room_scene();
        let back = parse_scene(&format_scene(&s), Path::new("s.txt")).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_scene("bounds 0 0 0 1 1 1\nbox 2 a 0 0 0 1 1\n", Path::new("s")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_scene("box 2 a 0 0 0 1 1 1\n", Path::new("s")).unwrap_err();
        assert!(matches!(e, Error::Format { .. }));
    }

    #[test]
    fn invalid_labels_rejected() {
        let e = parse_scene("bounds 0 0 0 1 1 1\nbox 1 a 0 0 0 1 1 1\n", Path::new("s")).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter(_)));
    }
}
