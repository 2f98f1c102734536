//! Convex planar regions `X·R⁰` and enumeration of their integer points in a
//! residue class.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("region has zero or negative area")]
    Degenerate,
    #[error("polygon is not convex")]
    NotConvex,
    #[error("scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("non-finite coordinate")]
    NonFinite,
}

/// The unscaled region `R⁰`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Disk { center: [f64; 2], radius: f64 },
    /// Closed box `[min.0, max.0] × [min.1, max.1]`.
    Box { min: [f64; 2], max: [f64; 2] },
    /// Convex polygon; vertices in either orientation.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Shape {
    fn validate(&self) -> Result<Shape, RegionError> {
        match self {
            Shape::Disk { center, radius } => {
                if !center.iter().chain([radius]).all(|v| v.is_finite()) {
                    return Err(RegionError::NonFinite);
                }
                if *radius <= 0.0 {
                    return Err(RegionError::Degenerate);
                }
                Ok(self.clone())
            }
            Shape::Box { min, max } => {
                if !min.iter().chain(max).all(|v| v.is_finite()) {
                    return Err(RegionError::NonFinite);
                }
                if max[0] <= min[0] || max[1] <= min[1] {
                    return Err(RegionError::Degenerate);
                }
                Ok(self.clone())
            }
            Shape::Polygon { vertices } => {
                if vertices.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(RegionError::NonFinite);
                }
                if vertices.len() < 3 {
                    return Err(RegionError::Degenerate);
                }
                let area2 = shoelace2(vertices);
                if area2 == 0.0 {
                    return Err(RegionError::Degenerate);
                }
                let mut vs = vertices.clone();
                if area2 < 0.0 {
                    vs.reverse();
                }
                let n = vs.len();
                for i in 0..n {
                    let (a, b, c) = (vs[i], vs[(i + 1) % n], vs[(i + 2) % n]);
                    if cross(sub(b, a), sub(c, b)) < 0.0 {
                        return Err(RegionError::NotConvex);
                    }
                }
                Ok(Shape::Polygon { vertices: vs })
            }
        }
    }

    fn area(&self) -> f64 {
        match self {
            Shape::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            Shape::Box { min, max } => (max[0] - min[0]) * (max[1] - min[1]),
            Shape::Polygon { vertices } => shoelace2(vertices).abs() / 2.0,
        }
    }

    fn perimeter(&self) -> f64 {
        match self {
            Shape::Disk { radius, .. } => 2.0 * std::f64::consts::PI * radius,
            Shape::Box { min, max } => 2.0 * ((max[0] - min[0]) + (max[1] - min[1])),
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        let d = sub(vertices[(i + 1) % n], vertices[i]);
                        d[0].hypot(d[1])
                    })
                    .sum()
            }
        }
    }

    fn scaled(&self, s: f64) -> Shape {
        let sc = |p: [f64; 2]| [p[0] * s, p[1] * s];
        match self {
            Shape::Disk { center, radius } => Shape::Disk {
                center: sc(*center),
                radius: radius * s,
            },
            Shape::Box { min, max } => Shape::Box {
                min: sc(*min),
                max: sc(*max),
            },
            Shape::Polygon { vertices } => Shape::Polygon {
                vertices: vertices.iter().map(|&v| sc(v)).collect(),
            },
        }
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn shoelace2(vs: &[[f64; 2]]) -> f64 {
    let n = vs.len();
    (0..n).map(|i| cross(vs[i], vs[(i + 1) % n])).sum()
}

/// `X·R⁰` for a convex `R⁰`. Regions are closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    unit: Shape,
    scale: f64,
    scaled: Shape,
}

impl Region {
    pub fn new(unit: Shape, scale: f64) -> Result<Self, RegionError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(RegionError::BadScale(scale));
        }
        let unit = unit.validate()?;
        let scaled = unit.scaled(scale);
        Ok(Self { unit, scale, scaled })
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Result<Self, RegionError> {
        Self::new(Shape::Disk { center, radius }, 1.0)
    }

    pub fn rect(min: [f64; 2], max: [f64; 2]) -> Result<Self, RegionError> {
        Self::new(Shape::Box { min, max }, 1.0)
    }

    /// `[-1, 1]²` scaled by `x`.
    pub fn square(x: f64) -> Result<Self, RegionError> {
        Self::new(
            Shape::Box {
                min: [-1.0, -1.0],
                max: [1.0, 1.0],
            },
            x,
        )
    }

    pub fn unit_shape(&self) -> &Shape {
        &self.unit
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self, RegionError> {
        Self::new(self.unit.clone(), scale)
    }

    /// `vol(R⁰)`.
    pub fn unit_volume(&self) -> f64 {
        self.unit.area()
    }

    /// `vol(X·R⁰)`.
    pub fn volume(&self) -> f64 {
        self.scaled.area()
    }

    /// `vol(R⁰)` exactly, for boxes and polygons.
    pub fn unit_volume_exact(&self) -> Option<BigRational> {
        let r = |v: f64| BigRational::from_f64(v);
        match &self.unit {
            Shape::Disk { .. } => None,
            Shape::Box { min, max } => Some((r(max[0])? - r(min[0])?) * (r(max[1])? - r(min[1])?)),
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut acc = BigRational::zero();
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    acc += r(a[0])? * r(b[1])? - r(a[1])? * r(b[0])?;
                }
                Some(acc.abs() / BigRational::from_integer(BigInt::from(2)))
            }
        }
    }

    /// Boundary length of `X·R⁰`.
    pub fn perimeter(&self) -> f64 {
        self.scaled.perimeter()
    }

    pub fn contains(&self, x: (i128, i128)) -> bool {
        let (px, py) = (x.0 as f64, x.1 as f64);
        match &self.scaled {
            Shape::Disk { center, radius } => {
                let (dx, dy) = (px - center[0], py - center[1]);
                dx * dx + dy * dy <= radius * radius
            }
            Shape::Box { min, max } => px >= min[0] && px <= max[0] && py >= min[1] && py <= max[1],
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    cross(sub(b, a), [px - a[0], py - a[1]]) >= 0.0
                })
            }
        }
    }

    /// Integer bounding box `(xmin, xmax, ymin, ymax)`.
    pub fn integer_bounds(&self) -> (i128, i128, i128, i128) {
        let (lo, hi) = match &self.scaled {
            Shape::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Shape::Box { min, max } => (*min, *max),
            Shape::Polygon { vertices } => vertices.iter().fold(
                ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
                |(lo, hi), v| {
                    (
                        [lo[0].min(v[0]), lo[1].min(v[1])],
                        [hi[0].max(v[0]), hi[1].max(v[1])],
                    )
                },
            ),
        };
        (
            lo[0].ceil() as i128 - 1,
            hi[0].floor() as i128 + 1,
            lo[1].ceil() as i128 - 1,
            hi[1].floor() as i128 + 1,
        )
    }

    /// Number of integer points in the bounding box.
    pub fn bounding_area(&self) -> u128 {
        let (x0, x1, y0, y1) = self.integer_bounds();
        ((x1 - x0 + 1) as u128) * ((y1 - y0 + 1) as u128)
    }

    /// Integer span `[lo, hi]` of the row at height `y`, if nonempty.
    pub fn row_span(&self, y: i128) -> Option<(i128, i128)> {
        let yf = y as f64;
        let (lo, hi) = match &self.scaled {
            Shape::Disk { center, radius } => {
                let dy = yf - center[1];
                let h2 = radius * radius - dy * dy;
                if h2 < 0.0 {
                    return None;
                }
                let h = h2.sqrt();
                (center[0] - h, center[0] + h)
            }
            Shape::Box { min, max } => {
                if yf < min[1] || yf > max[1] {
                    return None;
                }
                (min[0], max[0])
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    let (ylo, yhi) = (a[1].min(b[1]), a[1].max(b[1]));
                    if yf < ylo || yf > yhi {
                        continue;
                    }
                    if a[1] == b[1] {
                        lo = lo.min(a[0].min(b[0]));
                        hi = hi.max(a[0].max(b[0]));
                    } else {
                        let t = (yf - a[1]) / (b[1] - a[1]);
                        let x = a[0] + t * (b[0] - a[0]);
                        lo = lo.min(x);
                        hi = hi.max(x);
                    }
                }
                if lo > hi {
                    return None;
                }
                (lo, hi)
            }
        };
        // float span, then settle the endpoints with the membership test
        let mut a = lo.ceil() as i128 - 1;
        let mut b = hi.floor() as i128 + 1;
        while a <= b && !self.contains((a, y)) {
            a += 1;
            if a > lo.ceil() as i128 + 1 {
                break;
            }
        }
        while b >= a && !self.contains((b, y)) {
            b -= 1;
            if b < hi.floor() as i128 - 1 {
                break;
            }
        }
        (a <= b && self.contains((a, y)) && self.contains((b, y))).then_some((a, b))
    }

    /// Rows of the points `x ≡ z (mod m)` inside the region, as
    /// `(y, first_x, last_x)` with both ends in the residue class.
    pub fn residue_rows(&self, m: u128, z: (i128, i128)) -> Vec<(i128, i128, i128)> {
        let m = m as i128;
        let (_, _, y0, y1) = self.integer_bounds();
        let mut rows = Vec::new();
        let mut y = y0 + (z.1 - y0).rem_euclid(m);
        while y <= y1 {
            if let Some((lo, hi)) = self.row_span(y) {
                let first = lo + (z.0 - lo).rem_euclid(m);
                if first <= hi {
                    let last = first + (hi - first) / m * m;
                    rows.push((y, first, last));
                }
            }
            y += m;
        }
        rows
    }
}
