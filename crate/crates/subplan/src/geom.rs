//! 2D geometry primitives shared by the simulator, sensors and planners.

use serde::{Deserialize, Serialize};

pub const EPS: f64 = 1e-12;

/// Normalize an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * std::f64::consts::PI);
    if a <= -std::f64::consts::PI {
        a += 2.0 * std::f64::consts::PI;
    } else if a > std::f64::consts::PI {
        a -= 2.0 * std::f64::consts::PI;
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// 2D cross product (z component).
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n < EPS {
            Vec2::ZERO
        } else {
            self * (1.0 / n)
        }
    }

    /// Rotate 90 degrees counter-clockwise.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Robot base configuration. `theta` is always kept in (-pi, pi].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2D {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Transform a point from this pose's local frame to the world frame.
    pub fn transform(&self, local: Vec2) -> Vec2 {
        self.position() + local.rotated(self.theta)
    }

    /// Transform a world point into this pose's local frame.
    pub fn inverse_transform(&self, world: Vec2) -> Vec2 {
        (world - self.position()).rotated(-self.theta)
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::new(self.theta.cos(), self.theta.sin())
    }
}

/// Line segment between two points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn direction(&self) -> Vec2 {
        (self.b - self.a).normalized()
    }

    /// Closest distance from a point to this segment.
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        let d = self.b - self.a;
        let len_sq = d.norm_sq();
        if len_sq < EPS {
            return self.a.dist(p);
        }
        let t = ((p - self.a).dot(d) / len_sq).clamp(0.0, 1.0);
        (self.a + d * t).dist(p)
    }

    /// Intersection parameter of a ray (origin, unit dir) with this segment,
    /// if any. Returns the distance along the ray.
    pub fn raycast(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let v1 = origin - self.a;
        let v2 = self.b - self.a;
        let v3 = dir.perp();
        let denom = v2.dot(v3);
        if denom.abs() < EPS {
            return None; // parallel
        }
        let t = v2.cross(v1) / denom;
        let u = v1.dot(v3) / denom;
        if t >= 0.0 && (0.0..=1.0).contains(&u) {
            Some(t)
        } else {
            None
        }
    }

    /// Whether two segments intersect (including touching endpoints).
    pub fn intersects(&self, other: &Segment) -> bool {
        self.intersection_t(other).is_some()
    }

    /// Parameter t in [0, 1] along `self` of the first intersection with
    /// `other`, if the segments cross or touch.
    pub fn intersection_t(&self, other: &Segment) -> Option<f64> {
        let r = self.b - self.a;
        let s = other.b - other.a;
        let denom = r.cross(s);
        let qp = other.a - self.a;
        if denom.abs() < EPS {
            // Parallel: check for collinear overlap.
            if qp.cross(r).abs() > 1e-9 {
                return None;
            }
            let rr = r.norm_sq();
            if rr < EPS {
                // Degenerate point segment.
                return if other.distance_to_point(self.a) < 1e-9 {
                    Some(0.0)
                } else {
                    None
                };
            }
            let t0 = qp.dot(r) / rr;
            let t1 = (other.b - self.a).dot(r) / rr;
            let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            if hi < 0.0 || lo > 1.0 {
                return None;
            }
            return Some(lo.max(0.0));
        }
        let t = qp.cross(s) / denom;
        let u = qp.cross(r) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            Some(t)
        } else {
            None
        }
    }
}

/// Convex polygon, vertices in counter-clockwise order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Vec2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Vec2>) -> Self {
        Polygon { vertices }
    }

    pub fn rectangle(cx: f64, cy: f64, half_w: f64, half_h: f64) -> Self {
        Polygon::new(vec![
            Vec2::new(cx - half_w, cy - half_h),
            Vec2::new(cx + half_w, cy - half_h),
            Vec2::new(cx + half_w, cy + half_h),
            Vec2::new(cx - half_w, cy + half_h),
        ])
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Signed area (positive for CCW winding).
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.vertices[i].cross(self.vertices[(i + 1) % n]);
        }
        acc * 0.5
    }

    pub fn is_convex_ccw(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            if (b - a).cross(c - b) < -1e-9 {
                return false;
            }
        }
        self.signed_area() > EPS
    }

    pub fn contains(&self, p: Vec2) -> bool {
        // Convex CCW polygon: point is inside iff left of (or on) every edge.
        for e in self.edges() {
            if (e.b - e.a).cross(p - e.a) < -1e-9 {
                return false;
            }
        }
        true
    }

    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|e| e.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Transform every vertex by `pose` (local -> world).
    pub fn transformed(&self, pose: &Pose2D) -> Polygon {
        Polygon::new(self.vertices.iter().map(|v| pose.transform(*v)).collect())
    }

    pub fn translated(&self, d: Vec2) -> Polygon {
        Polygon::new(self.vertices.iter().map(|v| *v + d).collect())
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len() as f64;
        let mut c = Vec2::ZERO;
        for v in &self.vertices {
            c = c + *v;
        }
        c * (1.0 / n)
    }

    /// First crossing of a directed segment with the polygon boundary.
    /// Returns (t along the segment, contacted edge). A start point inside
    /// the polygon reports t = 0 against the nearest edge.
    pub fn sweep_contact(&self, sweep: &Segment) -> Option<(f64, Segment)> {
        if self.contains(sweep.a) {
            let edge = self
                .edges()
                .min_by(|e1, e2| {
                    e1.distance_to_point(sweep.a)
                        .partial_cmp(&e2.distance_to_point(sweep.a))
                        .unwrap()
                })
                .unwrap();
            return Some((0.0, edge));
        }
        let mut best: Option<(f64, Segment)> = None;
        for e in self.edges() {
            if let Some(t) = sweep.intersection_t(&e) {
                if best.as_ref().map_or(true, |(bt, _)| t < *bt) {
                    best = Some((t, e));
                }
            }
        }
        best
    }

    /// Whether a disc overlaps this polygon.
    pub fn intersects_disc(&self, center: Vec2, radius: f64) -> bool {
        self.distance_to_point(center) <= radius
    }

    pub fn intersects_segment(&self, seg: &Segment) -> bool {
        if self.contains(seg.a) || self.contains(seg.b) {
            return true;
        }
        self.edges().any(|e| e.intersects(seg))
    }

    pub fn intersects_polygon(&self, other: &Polygon) -> bool {
        if other.vertices.iter().any(|v| self.contains(*v))
            || self.vertices.iter().any(|v| other.contains(*v))
        {
            return true;
        }
        self.edges()
            .any(|e| other.edges().any(|f| e.intersects(&f)))
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(wrap_angle(0.5), 0.5);
    }

    #[test]
    fn segment_point_distance() {
        let s = Segment::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0));
        assert!((s.distance_to_point(Vec2::new(1.0, 1.0)) - 1.0).abs() < 1e-12);
        assert!((s.distance_to_point(Vec2::new(3.0, 0.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn raycast_hits_perpendicular_wall() {
        let s = Segment::new(Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0));
        let t = s.raycast(Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert!(s.raycast(Vec2::ZERO, Vec2::new(-1.0, 0.0)).is_none());
    }

    #[test]
    fn segment_intersection() {
        let a = Segment::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 2.0));
        let b = Segment::new(Vec2::new(0.0, 2.0), Vec2::new(2.0, 0.0));
        let t = a.intersection_t(&b).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        let c = Segment::new(Vec2::new(5.0, 5.0), Vec2::new(6.0, 5.0));
        assert!(!a.intersects(&c));
    }

    #[test]
    fn polygon_contains_and_distance() {
        let p = Polygon::rectangle(0.0, 0.0, 1.0, 1.0);
        assert!(p.is_convex_ccw());
        assert!(p.contains(Vec2::ZERO));
        assert!(!p.contains(Vec2::new(1.5, 0.0)));
        assert!((p.distance_to_point(Vec2::new(2.0, 0.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_contact_entry_point() {
        let p = Polygon::rectangle(1.0, 0.0, 0.5, 0.5);
        let sweep = Segment::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0));
        let (t, _edge) = p.sweep_contact(&sweep).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        // Start inside reports t = 0.
        let sweep2 = Segment::new(Vec2::new(1.0, 0.0), Vec2::new(1.2, 0.0));
        let (t2, _) = p.sweep_contact(&sweep2).unwrap();
        assert_eq!(t2, 0.0);
    }

    #[test]
    fn pose_round_trip() {
        let p = Pose2D::new(1.0, 2.0, 0.7);
        let w = p.transform(Vec2::new(0.3, -0.4));
        let l = p.inverse_transform(w);
        assert!((l.x - 0.3).abs() < 1e-12 && (l.y + 0.4).abs() < 1e-12);
    }
}
