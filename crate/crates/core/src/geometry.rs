//! Plane geometry helpers: points, polylines, polygons.

use std::collections::HashMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or vector of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Vec2::new(r * theta.cos(), r * theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// `det(self, o)`, the z-component of the cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by a right angle.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

/// Distance from `p` to the segment `[a, b]`, with the closest parameter in `[0, 1]`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> (f64, f64) {
    let d = b - a;
    let len2 = d.norm2();
    let t = if len2 > 0.0 {
        ((p - a).dot(d) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.dist(a + d * t), t)
}

/// Proper or touching intersection of segments `[a, b]` and `[c, d]`.
/// Returns the parameters along each segment.
pub fn segment_intersection(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Option<(f64, f64)> {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    if denom.abs() <= 1e-12 * r.norm() * s.norm() {
        return collinear_overlap(a, r, c, s);
    }
    let ac = c - a;
    let t = ac.cross(s) / denom;
    let u = ac.cross(r) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some((t, u))
}

/// Intersection of (nearly) parallel segments: first common point if they
/// lie on one line and overlap.
fn collinear_overlap(a: Vec2, r: Vec2, c: Vec2, s: Vec2) -> Option<(f64, f64)> {
    let (rr, ss) = (r.dot(r), s.dot(s));
    if rr == 0.0 || ss == 0.0 {
        return None;
    }
    let scale = rr.sqrt().max(ss.sqrt());
    if (c - a).cross(r).abs() / rr.sqrt() > 1e-12 * scale {
        return None;
    }
    let (t0, t1) = ((c - a).dot(r) / rr, (c + s - a).dot(r) / rr);
    let (lo, hi) = (t0.min(t1).max(0.0), t0.max(t1).min(1.0));
    if lo > hi {
        return None;
    }
    let p = a + r * lo;
    Some((lo, ((p - c).dot(s) / ss).clamp(0.0, 1.0)))
}

/// Distance from `p` to an open polyline and the index of the closest segment.
pub fn polyline_distance(p: Vec2, pts: &[Vec2]) -> (f64, usize) {
    match pts.len() {
        0 => (f64::INFINITY, 0),
        1 => (p.dist(pts[0]), 0),
        _ => pts
            .windows(2)
            .enumerate()
            .map(|(i, w)| (point_segment_distance(p, w[0], w[1]).0, i))
            .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc }),
    }
}

/// Shoelace signed area (positive for counter-clockwise vertex order).
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    (0..n)
        .map(|i| poly[i].cross(poly[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

/// Winding number of a closed polygon (implicitly closed) around `p`.
pub fn winding_number(poly: &[Vec2], p: Vec2) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let side = (b - a).cross(p - a);
        if a.y <= p.y {
            if b.y > p.y && side > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && side < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Distance from `p` to the boundary of a closed polygon.
pub fn polygon_boundary_distance(poly: &[Vec2], p: Vec2) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n]).0)
        .fold(f64::INFINITY, f64::min)
}

/// Bucket grid over segments for intersection queries.
pub struct SegmentIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    segs: Vec<(Vec2, Vec2)>,
}

impl SegmentIndex {
    pub fn new(segs: Vec<(Vec2, Vec2)>, cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, &(a, b)) in segs.iter().enumerate() {
            for key in Self::cover(cell, a, b) {
                buckets.entry(key).or_default().push(k);
            }
        }
        SegmentIndex { cell, buckets, segs }
    }

    fn cover(cell: f64, a: Vec2, b: Vec2) -> impl Iterator<Item = (i64, i64)> {
        let i0 = (a.x.min(b.x) / cell).floor() as i64;
        let i1 = (a.x.max(b.x) / cell).floor() as i64;
        let j0 = (a.y.min(b.y) / cell).floor() as i64;
        let j1 = (a.y.max(b.y) / cell).floor() as i64;
        (i0..=i1).flat_map(move |i| (j0..=j1).map(move |j| (i, j)))
    }

    pub fn segment(&self, k: usize) -> (Vec2, Vec2) {
        self.segs[k]
    }

    /// Indices of stored segments intersecting `[a, b]`, with parameters
    /// `(t along query, u along stored)`, sorted by `t`.
    pub fn intersections(&self, a: Vec2, b: Vec2) -> Vec<(usize, f64, f64)> {
        let mut cand: Vec<usize> = Self::cover(self.cell, a, b)
            .filter_map(|key| self.buckets.get(&key))
            .flatten()
            .copied()
            .collect();
        cand.sort_unstable();
        cand.dedup();
        let mut out = Vec::new();
        for k in cand {
            let (c, d) = self.segs[k];
            if let Some((t, u)) = segment_intersection(a, b, c, d) {
                out.push((k, t, u));
            }
        }
        out.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        out
    }
}

/// True if the closed polygon has no two non-adjacent edges that intersect.
pub fn is_simple_polygon(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let edges: Vec<(Vec2, Vec2)> = (0..n).map(|i| (poly[i], poly[(i + 1) % n])).collect();
    let mean_len = edges.iter().map(|(a, b)| a.dist(*b)).sum::<f64>() / n as f64;
    let index = SegmentIndex::new(edges.clone(), (4.0 * mean_len).max(1e-12));
    for (i, &(a, b)) in edges.iter().enumerate() {
        for (k, _, _) in index.intersections(a, b) {
            let adjacent = k == i || k == (i + 1) % n || i == (k + 1) % n;
            if !adjacent {
                return false;
            }
        }
    }
    true
}

/// Symmetric Hausdorff distance between two point samples.
pub fn hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    let directed = |p: &[Vec2], q: &[Vec2]| {
        p.iter()
            .map(|x| q.iter().map(|y| x.dist(*y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}
