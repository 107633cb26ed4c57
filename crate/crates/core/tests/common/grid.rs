//! Grid Dijkstra motion oracle with its own geometry.
//!
//! Free space is sampled on a square lattice; moves are 16-connected and
//! accepted when both ends and the midpoint are free. Headings are fixed, so
//! a carried body is a rigid translate of the robot disc.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

pub type P = [f64; 2];
pub type Poly = Vec<P>;

pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Poly {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

fn seg_dist(p: P, a: P, b: P) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0)
    };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

fn inside(p: P, poly: &Poly) -> bool {
    let mut c = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                c = !c;
            }
        }
    }
    c
}

fn edges(poly: &Poly) -> impl Iterator<Item = (P, P)> + '_ {
    (0..poly.len()).map(move |i| (poly[i], poly[(i + 1) % poly.len()]))
}

pub fn disc_hits(c: P, r: f64, poly: &Poly) -> bool {
    inside(c, poly) || edges(poly).any(|(a, b)| seg_dist(c, a, b) <= r)
}

fn cross(o: P, a: P, b: P) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segs_cross(a: P, b: P, c: P, d: P) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: P, q: P, r: P| {
        cross(p, q, r).abs() < 1e-12
            && r[0] >= p[0].min(q[0]) - 1e-12
            && r[0] <= p[0].max(q[0]) + 1e-12
            && r[1] >= p[1].min(q[1]) - 1e-12
            && r[1] <= p[1].max(q[1]) + 1e-12
    };
    on(c, d, a) || on(c, d, b) || on(a, b, c) || on(a, b, d)
}

pub fn polys_touch(p: &Poly, q: &Poly) -> bool {
    edges(p).any(|(a, b)| edges(q).any(|(c, d)| segs_cross(a, b, c, d))) || inside(p[0], q) || inside(q[0], p)
}

/// Distance from segment `ab` to a polygon; zero when they meet.
pub fn segment_clearance(a: P, b: P, poly: &Poly) -> f64 {
    if inside(a, poly) || edges(poly).any(|(c, d)| segs_cross(a, b, c, d)) {
        return 0.0;
    }
    edges(poly)
        .map(|(c, d)| seg_dist(a, c, d).min(seg_dist(b, c, d)).min(seg_dist(c, a, b)).min(seg_dist(d, a, b)))
        .fold(f64::INFINITY, f64::min)
}

pub fn translate(poly: &Poly, d: P) -> Poly {
    poly.iter().map(|v| [v[0] + d[0], v[1] + d[1]]).collect()
}

/// Robot disc plus an optional body carried at a fixed offset.
#[derive(Clone)]
pub struct Body {
    pub radius: f64,
    pub carried: Option<Poly>,
}

#[derive(Clone)]
pub struct Space {
    pub lo: P,
    pub hi: P,
    pub obstacles: Vec<Poly>,
    pub body: Body,
}

impl Space {
    pub fn free(&self, c: P) -> bool {
        let r = self.body.radius;
        if c[0] - r < self.lo[0] || c[0] + r > self.hi[0] || c[1] - r < self.lo[1] || c[1] + r > self.hi[1] {
            return false;
        }
        if self.obstacles.iter().any(|o| disc_hits(c, r, o)) {
            return false;
        }
        if let Some(b) = &self.body.carried {
            let s = translate(b, c);
            let out = s
                .iter()
                .any(|v| v[0] < self.lo[0] || v[0] > self.hi[0] || v[1] < self.lo[1] || v[1] > self.hi[1]);
            if out || self.obstacles.iter().any(|o| polys_touch(&s, o)) {
                return false;
            }
        }
        true
    }

    /// Straight move checked every centimetre.
    pub fn line_free(&self, a: P, b: P) -> bool {
        let n = ((a[0] - b[0]).hypot(a[1] - b[1]) / 0.01).ceil().max(1.0) as usize;
        (0..=n).all(|i| {
            let t = i as f64 / n as f64;
            self.free([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
        })
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal)
    }
}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

const MOVES: [(i64, i64); 16] = [
    (1, 0), (-1, 0), (0, 1), (0, -1),
    (1, 1), (1, -1), (-1, 1), (-1, -1),
    (2, 1), (2, -1), (-2, 1), (-2, -1),
    (1, 2), (1, -2), (-1, 2), (-1, -2),
];

/// Shortest-path lengths from a point over the lattice.
pub struct Field {
    h: f64,
    nx: usize,
    ny: usize,
    lo: P,
    dist: Vec<f64>,
    space: Space,
}

impl Field {
    pub fn from(space: &Space, h: f64, start: P) -> Field {
        let nx = ((space.hi[0] - space.lo[0]) / h).floor() as usize + 1;
        let ny = ((space.hi[1] - space.lo[1]) / h).floor() as usize + 1;
        let lo = space.lo;
        // occupancy at half pitch: lattice nodes sit at even indices,
        // move midpoints at odd ones
        let (mx, my) = (2 * nx - 1, 2 * ny - 1);
        let mut half = vec![false; mx * my];
        for j in 0..my {
            for i in 0..mx {
                half[j * mx + i] = space.free([lo[0] + i as f64 * h / 2.0, lo[1] + j as f64 * h / 2.0]);
            }
        }
        let free: Vec<bool> = (0..nx * ny).map(|k| half[(k / nx) * 2 * mx + (k % nx) * 2]).collect();
        let mut dist = vec![f64::INFINITY; nx * ny];
        let mut heap = BinaryHeap::new();
        for (k, d) in snap(space, h, nx, ny, lo, start, &free) {
            if d < dist[k] {
                dist[k] = d;
                heap.push(Item(d, k));
            }
        }
        while let Some(Item(d, k)) = heap.pop() {
            if d > dist[k] {
                continue;
            }
            let (i, j) = ((k % nx) as i64, (k / nx) as i64);
            for (di, dj) in MOVES {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                    continue;
                }
                let n = b as usize * nx + a as usize;
                if !free[n] {
                    continue;
                }
                let mid = (2 * j + dj) as usize * mx + (2 * i + di) as usize;
                if !half[mid] {
                    continue;
                }
                let nd = d + h * ((di * di + dj * dj) as f64).sqrt();
                if nd < dist[n] {
                    dist[n] = nd;
                    heap.push(Item(nd, n));
                }
            }
        }
        Field {
            h,
            nx,
            ny,
            lo,
            dist,
            space: space.clone(),
        }
    }

    /// Path length to `goal`, or infinity.
    pub fn to(&self, goal: P) -> f64 {
        snap(&self.space, self.h, self.nx, self.ny, self.lo, goal, &[])
            .into_iter()
            .map(|(k, d)| self.dist[k] + d)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Lattice nodes within two cells of `p` joined to it by a free line.
fn snap(space: &Space, h: f64, nx: usize, ny: usize, lo: P, p: P, free: &[bool]) -> Vec<(usize, f64)> {
    let ci = ((p[0] - lo[0]) / h).round() as i64;
    let cj = ((p[1] - lo[1]) / h).round() as i64;
    let mut out = Vec::new();
    for j in cj - 2..=cj + 2 {
        for i in ci - 2..=ci + 2 {
            if i < 0 || j < 0 || i >= nx as i64 || j >= ny as i64 {
                continue;
            }
            let k = j as usize * nx + i as usize;
            if !free.is_empty() && !free[k] {
                continue;
            }
            let q = [lo[0] + i as f64 * h, lo[1] + j as f64 * h];
            if space.line_free(p, q) {
                out.push((k, (p[0] - q[0]).hypot(p[1] - q[1])));
            }
        }
    }
    out
}
