//! Page-space geometry: points (1/72 inch), top-left origin, y growing downward.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Rounds to the 1e-3 grid used by every serialized coordinate.
pub fn round3(v: f64) -> f64 {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub(crate) fn ser_round3<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round3(*v))
}

/// Axis-aligned rectangle `[x0, y0, x1, y1]`.
///
/// Construction through [`BBox::new`] checks `x0 < x1` and `y0 < y1`; the raw
/// fields stay public so deserialized values can be validated with a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Option<Self> {
        let b = BBox { x0, y0, x1, y1 };
        b.is_valid().then_some(b)
    }

    /// Builds from COCO `[x, y, w, h]`.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Option<Self> {
        Self::new(x, y, x + w, y + h)
    }

    pub fn is_valid(&self) -> bool {
        [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite())
            && self.x0 < self.x1
            && self.y0 < self.y1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point {
            x: (self.x0 + self.x1) / 2.0,
            y: (self.y0 + self.y1) / 2.0,
        }
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }

    /// Intersection with positive area, if any.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        BBox::new(
            self.x0.max(other.x0),
            self.y0.max(other.y0),
            self.x1.min(other.x1),
            self.y1.min(other.y1),
        )
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.x1.min(other.x1) - self.x0.max(other.x0)).max(0.0);
        let h = (self.y1.min(other.y1) - self.y0.max(other.y0)).max(0.0);
        w * h
    }

    /// Closed containment, so points on an edge count as inside.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Squared Euclidean distance from `p` to the nearest point of the rectangle.
    pub fn distance_sq_to(&self, p: Point) -> f64 {
        let dx = (self.x0 - p.x).max(0.0).max(p.x - self.x1);
        let dy = (self.y0 - p.y).max(0.0).max(p.y - self.y1);
        dx * dx + dy * dy
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox {
            x0: self.x0 + dx,
            y0: self.y0 + dy,
            x1: self.x1 + dx,
            y1: self.y1 + dy,
        }
    }

    pub fn rounded(&self) -> BBox {
        BBox {
            x0: round3(self.x0),
            y0: round3(self.y0),
            x1: round3(self.x1),
            y1: round3(self.y1),
        }
    }

    /// Tight union of a non-empty sequence.
    pub fn union_all<'a, I: IntoIterator<Item = &'a BBox>>(boxes: I) -> Option<BBox> {
        boxes.into_iter().fold(None, |acc: Option<BBox>, b| {
            Some(match acc {
                Some(a) => a.union(b),
                None => *b,
            })
        })
    }
}

impl Serialize for BBox {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [round3(self.x0), round3(self.y0), round3(self.x1), round3(self.y1)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v: Vec<f64> = Vec::deserialize(d)?;
        match v.as_slice() {
            &[x0, y0, x1, y1] => Ok(BBox { x0, y0, x1, y1 }),
            _ => Err(D::Error::invalid_length(v.len(), &"four coordinates")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [round3(self.x), round3(self.y)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(Point { x, y })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(BBox::new(0.0, 0.0, 0.0, 1.0).is_none());
        assert!(BBox::new(2.0, 0.0, 1.0, 1.0).is_none());
        assert!(BBox::new(0.0, 0.0, 1.0, f64::NAN).is_none());
    }

    #[test]
    fn point_distance() {
        let b = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        assert_eq!(b.distance_sq_to(Point::new(5.0, 5.0)), 0.0);
        assert_eq!(b.distance_sq_to(Point::new(13.0, 14.0)), 25.0);
        assert_eq!(b.distance_sq_to(Point::new(5.0, -3.0)), 9.0);
    }

    #[test]
    fn round3_normalizes_negative_zero() {
        assert_eq!(round3(-0.0001).to_bits(), 0.0f64.to_bits());
        assert_eq!(round3(1.23456), 1.235);
    }
}
