//! Polygon annotations.
//!
//! ```json
//! {
//!   "labels": { "bed": 3, "desk": 5 },
//!   "frames": [
//!     { "name": "000000", "objects": [ { "name": "bed", "polygon": [[10, 10], [20, 10], [20, 20]] } ] }
//!   ]
//! }
//! ```
//!
//! `labels` is optional. Without it every distinct object name receives an
//! increasing id starting at 2, in order of first appearance.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Image, ScoreMap};
use crate::volume::LabelId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedObject {
    pub name: String,
    /// Pixel-space vertices `[x, y]`; pixel `(i, j)` covers `[i, i+1) x [j, j+1)`.
    pub polygon: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedFrame {
    pub name: String,
    #[serde(default)]
    pub objects: Vec<AnnotatedObject>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<String, u16>>,
    pub frames: Vec<AnnotatedFrame>,
}

/// The objects of one frame together with the name-to-label table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolygonAnnotation {
    pub objects: Vec<AnnotatedObject>,
    pub labels: BTreeMap<String, LabelId>,
}

impl PolygonAnnotation {
    pub fn validate(&self) -> Result<()> {
        for o in &self.objects {
            if o.polygon.len() < 3 {
                return Err(Error::InvalidParameter(format!(
                    "polygon of {:?} has {} vertices, need at least 3",
                    o.name,
                    o.polygon.len()
                )));
            }
            if o.polygon.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite vertex in {:?}", o.name)));
            }
        }
        for (name, id) in &self.labels {
            if !id.is_object() {
                return Err(Error::InvalidParameter(format!(
                    "object {name:?} assigned label {id}, need >= 2"
                )));
            }
        }
        Ok(())
    }
}

impl AnnotationFile {
    /// Resolve the label table and split into per-frame annotations.
    pub fn resolve(&self) -> Result<Vec<(String, PolygonAnnotation)>> {
        let labels: BTreeMap<String, LabelId> = match &self.labels {
            Some(table) => table.iter().map(|(k, v)| (k.clone(), LabelId(*v))).collect(),
            None => {
                let mut table = BTreeMap::new();
                let mut next = 2u16;
                for o in self.frames.iter().flat_map(|f| &f.objects) {
                    if !table.contains_key(&o.name) {
                        table.insert(o.name.clone(), LabelId(next));
                        next = next.checked_add(1).ok_or_else(|| {
                            Error::InvalidParameter("too many distinct objects".into())
                        })?;
                    }
                }
                table
            }
        };
        let mut ids: Vec<LabelId> = labels.values().copied().collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("label table assigns one id twice".into()));
        }
        self.frames
            .iter()
            .map(|f| {
                let ann = PolygonAnnotation {
                    objects: f.objects.clone(),
                    labels: labels.clone(),
                };
                ann.validate()?;
                for o in &ann.objects {
                    if !ann.labels.contains_key(&o.name) {
                        return Err(Error::UnknownObject(o.name.clone()));
                    }
                }
                Ok((f.name.clone(), ann))
            })
            .collect()
    }
}

pub fn load_annotations(path: &Path) -> Result<Vec<(String, PolygonAnnotation)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: AnnotationFile =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    file.resolve()
}

/// Paint each polygon with its label (score 1.0) in annotation order using
/// the even-odd rule at pixel centers. Untouched pixels stay unlabeled with
/// score 0.
pub fn rasterize_polygons(
    ann: &PolygonAnnotation,
    width: usize,
    height: usize,
) -> Result<(Image<LabelId>, ScoreMap)> {
    ann.validate()?;
    let mut category = Image::filled(width, height, LabelId::UNLABELED);
    let mut score = Image::filled(width, height, 0.0f32);
    let mut xs = Vec::new();
    for o in &ann.objects {
        let label = *ann
            .labels
            .get(&o.name)
            .ok_or_else(|| Error::UnknownObject(o.name.clone()))?;
        let poly = &o.polygon;
        let (ymin, ymax) = poly
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[1]), hi.max(p[1])));
        let y0 = (ymin - 0.5).ceil().max(0.0) as usize;
        let y1 = ((ymax - 0.5).floor() + 1.0).clamp(0.0, height as f64) as usize;
        for y in y0..y1 {
            let ty = y as f64 + 0.5;
            xs.clear();
            let mut j = poly.len() - 1;
            for i in 0..poly.len() {
                let (a, b) = (poly[i], poly[j]);
                if (a[1] > ty) != (b[1] > ty) {
                    xs.push((b[0] - a[0]) * (ty - a[1]) / (b[1] - a[1]) + a[0]);
                }
                j = i;
            }
            xs.sort_by(f64::total_cmp);
            // A center is inside iff an odd number of crossings lie at or left of it.
            let mut k = 0;
            for x in 0..width {
                let tx = x as f64 + 0.5;
                while k < xs.len() && xs[k] <= tx {
                    k += 1;
                }
                if k % 2 == 1 {
                    category.set(x, y, label);
                    score.set(x, y, 1.0);
                }
            }
        }
    }
    Ok((category, score))
}
