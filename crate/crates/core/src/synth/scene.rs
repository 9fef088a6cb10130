use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::volume::LabelId;

/// Axis-aligned box in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: [f32; 3],
    pub max: [f32; 3],
}

impl Aabb {
    pub fn center(&self) -> Point3<f64> {
        Point3::new(
            0.5 * (self.min[0] as f64 + self.max[0] as f64),
            0.5 * (self.min[1] as f64 + self.max[1] as f64),
            0.5 * (self.min[2] as f64 + self.max[2] as f64),
        )
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.min[a] <= other.max[a] && other.min[a] <= self.max[a])
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] as f64 && p[a] <= self.max[a] as f64)
    }

    /// Smallest positive ray parameter at which the ray enters the box.
    /// Rays starting inside the box report no hit.
    pub fn ray_entry(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        for a in 0..3 {
            let (lo, hi) = (self.min[a] as f64, self.max[a] as f64);
            if dir[a] == 0.0 {
                if origin[a] < lo || origin[a] > hi {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[a];
            let (mut ta, mut tb) = ((lo - origin[a]) * inv, (hi - origin[a]) * inv);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
        (t0 <= t1 && t0 > 0.0).then_some(t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Box { min: [f32; 3], max: [f32; 3] },
    /// Slab `lo <= p[axis] <= hi`, unbounded along the other axes except by
    /// the scene bounds.
    Slab { axis: usize, lo: f32, hi: f32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub name: String,
    pub label: LabelId,
    pub shape: Shape,
}

impl SceneObject {
    /// Solid extent of the object, slabs clipped to the scene bounds.
    pub fn aabb(&self, bounds: &Aabb) -> Aabb {
        match self.shape {
            Shape::Box { min, max } => Aabb { min, max },
            Shape::Slab { axis, lo, hi } => {
                let mut b = *bounds;
                b.min[axis] = lo;
                b.max[axis] = hi;
                b
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub bounds: Aabb,
}

impl Scene {
    pub fn new(objects: Vec<SceneObject>, bounds: Aabb) -> Result<Self> {
        let scene = Scene { objects, bounds };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if !(0..3).all(|a| b.min[a] < b.max[a]) {
            return Err(Error::InvalidParameter(format!("empty scene bounds {b:?}")));
        }
        let mut seen = std::collections::HashSet::new();
        for o in &self.objects {
            if !o.label.is_object() {
                return Err(Error::InvalidParameter(format!(
                    "object {:?} has label {}, objects need labels >= 2",
                    o.name, o.label
                )));
            }
            if !seen.insert(o.label) {
                return Err(Error::InvalidParameter(format!("duplicate label {}", o.label)));
            }
            if let Shape::Slab { axis, lo, hi } = o.shape {
                if axis > 2 || lo > hi {
                    return Err(Error::InvalidParameter(format!("bad slab {:?}", o.name)));
                }
            }
            let bb = o.aabb(b);
            if !(0..3).all(|a| bb.min[a] <= bb.max[a]) || !bb.intersects(b) {
                return Err(Error::InvalidParameter(format!(
                    "object {:?} does not intersect the scene bounds",
                    o.name
                )));
            }
        }
        Ok(())
    }

    /// Mean of the object box centers (slabs clipped to bounds); the bounds
    /// center for an empty scene.
    pub fn centroid(&self) -> Point3<f64> {
        if self.objects.is_empty() {
            return self.bounds.center();
        }
        let sum: Vector3<f64> = self
            .objects
            .iter()
            .map(|o| o.aabb(&self.bounds).center().coords)
            .sum();
        Point3::from(sum / self.objects.len() as f64)
    }

    pub fn labels(&self) -> Vec<LabelId> {
        self.objects.iter().map(|o| o.label).collect()
    }
}

/// A 4 x 4 x 3 m room: floor slab plus bed, pillow, desk, cabinet and chair.
///
/// | label | object  | min (m)             | max (m)            |
/// |-------|---------|---------------------|--------------------|
/// | 2     | floor   | z = -0.10           | z = 0.00           |
/// | 3     | bed     | (-1.60, -1.50, 0.00) | (-0.20, 0.50, 0.50) |
/// | 4     | pillow  | (-1.40, 0.05, 0.50)  | (-0.60, 0.45, 0.65) |
/// | 5     | desk    | (0.50, 0.90, 0.00)   | (1.70, 1.50, 0.75)  |
/// | 6     | cabinet | (0.90, -1.60, 0.00)  | (1.50, -1.00, 1.20) |
/// | 7     | chair   | (0.80, 0.10, 0.00)   | (1.25, 0.55, 0.45)  |
///
/// Bounds are (-2, -2, -0.1) to (2, 2, 2.9).
pub fn default_room_scene() -> Scene {
    let object = |label: u16, name: &str, shape: Shape| SceneObject {
        name: name.to_string(),
        label: LabelId(label),
        shape,
    };
    let bx = |min: [f32; 3], max: [f32; 3]| Shape::Box { min, max };
    Scene {
        objects: vec![
            object(2, "floor", Shape::Slab { axis: 2, lo: -0.1, hi: 0.0 }),
            object(3, "bed", bx([-1.6, -1.5, 0.0], [-0.2, 0.5, 0.5])),
            object(4, "pillow", bx([-1.4, 0.05, 0.5], [-0.6, 0.45, 0.65])),
            object(5, "desk", bx([0.5, 0.9, 0.0], [1.7, 1.5, 0.75])),
            object(6, "cabinet", bx([0.9, -1.6, 0.0], [1.5, -1.0, 1.2])),
            object(7, "chair", bx([0.8, 0.1, 0.0], [1.25, 0.55, 0.45])),
        ],
        bounds: Aabb {
            min: [-2.0, -2.0, -0.1],
            max: [2.0, 2.0, 2.9],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn room_has_six_distinct_objects() {
        let s = default_room_scene();
        assert!(s.validate().is_ok());
        assert_eq!(s.objects.len(), 6);
        let mut labels = s.labels();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 6);
        assert!(labels.iter().all(|l| l.is_object()));
        assert!(s.bounds.contains(&s.centroid()));
    }

    #[test]
    fn rejects_reserved_and_duplicate_labels() {
        let b = default_room_scene().bounds;
        let o = |l| SceneObject {
            name: "x".into(),
            label: LabelId(l),
            shape: Shape::Box {
                min: [0.0; 3],
                max: [0.5; 3],
            },
        };
        assert!(Scene::new(vec![o(1)], b).is_err());
        assert!(Scene::new(vec![o(2), o(2)], b).is_err());
        let far = SceneObject {
            shape: Shape::Box {
                min: [10.0; 3],
                max: [11.0; 3],
            },
            ..o(3)
        };
        assert!(Scene::new(vec![far], b).is_err());
    }

    #[test]
    fn ray_entry_from_outside_and_inside() {
        let b = Aabb {
            min: [-1.0, -1.0, 2.0],
            max: [1.0, 1.0, 3.0],
        };
        let t = b.ray_entry(&Point3::origin(), &Vector3::z()).unwrap();
        assert_eq!(t, 2.0);
        assert!(b.ray_entry(&Point3::new(0.0, 0.0, 2.5), &Vector3::z()).is_none());
        assert!(b.ray_entry(&Point3::origin(), &-Vector3::z()).is_none());
    }
}
