//! Planar geometry: SE(2) configurations, simple polygons, disc tests.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r >= PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// SE(2) configuration; serialized as `[x, y, theta]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Config {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl From<[f64; 3]> for Config {
    fn from(v: [f64; 3]) -> Self {
        Config::new(v[0], v[1], v[2])
    }
}

impl From<Config> for [f64; 3] {
    fn from(c: Config) -> Self {
        [c.x, c.y, c.theta]
    }
}

impl Config {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn xy(&self) -> Point {
        [self.x, self.y]
    }

    pub fn dist(&self, o: &Config) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    /// Signed shortest rotation from `self.theta` to `o.theta`.
    pub fn dtheta(&self, o: &Config) -> f64 {
        wrap_angle(o.theta - self.theta)
    }

    pub fn within(&self, o: &Config, pos_tol: f64, ang_tol: f64) -> bool {
        self.dist(o) <= pos_tol && self.dtheta(o).abs() <= ang_tol
    }

    /// Interpolates position linearly and heading along the shortest arc.
    pub fn lerp(&self, o: &Config, s: f64) -> Config {
        Config::new(
            self.x + (o.x - self.x) * s,
            self.y + (o.y - self.y) * s,
            self.theta + self.dtheta(o) * s,
        )
    }

    /// `self ∘ o`: `o` expressed in the frame of `self`.
    pub fn compose(&self, o: &Config) -> Config {
        let p = self.apply(o.xy());
        Config::new(p[0], p[1], self.theta + o.theta)
    }

    pub fn inverse(&self) -> Config {
        let (s, c) = self.theta.sin_cos();
        Config::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)
    }

    /// Maps a body-frame point to the world frame.
    pub fn apply(&self, p: Point) -> Point {
        let (s, c) = self.theta.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Simple polygon, vertices in order (either orientation).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon(pub Vec<Point>);

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0)
    };
    let q = [a[0] + ab[0] * t, a[1] + ab[1] * t];
    (p[0] - q[0]).hypot(p[1] - q[1])
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

impl Polygon {
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Polygon(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.0
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.0.len();
        (0..n).map(move |i| (self.0[i], self.0[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| cross(a, b)).sum::<f64>() / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn is_degenerate(&self) -> bool {
        self.0.len() < 3 || self.area() < 1e-12
    }

    pub fn centroid(&self) -> Point {
        let a = self.signed_area();
        if a.abs() < 1e-15 {
            let n = self.0.len().max(1) as f64;
            let sx: f64 = self.0.iter().map(|p| p[0]).sum();
            let sy: f64 = self.0.iter().map(|p| p[1]).sum();
            return [sx / n, sy / n];
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in self.edges() {
            let k = cross(p, q);
            cx += (p[0] + q[0]) * k;
            cy += (p[1] + q[1]) * k;
        }
        [cx / (6.0 * a), cy / (6.0 * a)]
    }

    /// Even-odd point containment; boundary points count as inside.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if dist_point_segment(p, a, b) < 1e-12 {
                return true;
            }
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn dist_to_boundary(&self, p: Point) -> f64 {
        self.edges()
            .map(|(a, b)| dist_point_segment(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Closed disc of radius `r` at `c` overlaps the polygon.
    pub fn hits_disc(&self, c: Point, r: f64) -> bool {
        self.contains(c) || self.dist_to_boundary(c) < r
    }

    /// Interiors or boundaries overlap.
    pub fn intersects(&self, o: &Polygon) -> bool {
        for (a, b) in self.edges() {
            for (c, d) in o.edges() {
                if segments_intersect(a, b, c, d) {
                    return true;
                }
            }
        }
        self.0.first().is_some_and(|p| o.contains(*p)) || o.0.first().is_some_and(|p| self.contains(*p))
    }

    /// Euclidean distance between the two regions; 0 when they overlap.
    pub fn distance(&self, o: &Polygon) -> f64 {
        if self.intersects(o) {
            return 0.0;
        }
        let a = self.0.iter().map(|p| o.dist_to_boundary(*p));
        let b = o.0.iter().map(|p| self.dist_to_boundary(*p));
        a.chain(b).fold(f64::INFINITY, f64::min)
    }

    /// `o` lies entirely within `self`.
    pub fn encloses(&self, o: &Polygon) -> bool {
        if !o.0.iter().all(|p| self.contains(*p)) {
            return false;
        }
        // a crossing edge pair means part of `o` pokes out of a concave `self`
        for (a, b) in self.edges() {
            for (c, d) in o.edges() {
                let d1 = orient(c, d, a);
                let d2 = orient(c, d, b);
                let d3 = orient(a, b, c);
                let d4 = orient(a, b, d);
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    return false;
                }
            }
        }
        true
    }

    pub fn transformed(&self, pose: &Config) -> Polygon {
        Polygon(self.0.iter().map(|p| pose.apply(*p)).collect())
    }

    /// Largest distance of any vertex from the origin of its frame.
    pub fn max_radius(&self) -> f64 {
        self.0.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max)
    }

    /// Axis-aligned bounds `[min, max]`.
    pub fn aabb(&self) -> [Point; 2] {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.0 {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        [lo, hi]
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.0 {
            for b in &self.0 {
                d = d.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        d
    }
}
