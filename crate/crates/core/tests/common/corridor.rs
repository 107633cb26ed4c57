//! Two-strategy effort oracle for the single-box corridor worlds: drive
//! around, or relocate the box into the drop zone and drive through.

use serde_json::Value;

use super::grid::{disc_hits, polys_touch, translate, Body, Field, Poly, Space, P};

/// Lattice pitch for motion, metres.
pub const H: f64 = 0.02;
/// Lattice pitch for box placements, metres.
pub const PLACE_H: f64 = 0.02;

#[derive(Debug, Clone, Copy)]
pub struct Strategies {
    pub detour_s: f64,
    pub relocation_s: f64,
}

impl Strategies {
    pub fn best(&self) -> f64 {
        self.detour_s.min(self.relocation_s)
    }

    pub fn relocation_wins(&self) -> bool {
        self.relocation_s < self.detour_s
    }
}

fn pt(v: &Value) -> P {
    [v[0].as_f64().unwrap(), v[1].as_f64().unwrap()]
}

fn poly(v: &Value) -> Poly {
    v.as_array().unwrap().iter().map(pt).collect()
}

fn wrap(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    (a + std::f64::consts::PI).rem_euclid(t) - std::f64::consts::PI
}

fn inside_all(shape: &Poly, region: &Poly) -> bool {
    let [lo, hi] = aabb(region);
    // regions here are axis-aligned rectangles
    shape.iter().all(|v| v[0] >= lo[0] && v[0] <= hi[0] && v[1] >= lo[1] && v[1] <= hi[1])
}

fn aabb(p: &Poly) -> [P; 2] {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for v in p {
        for k in 0..2 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    [lo, hi]
}

pub fn solve(world_json: &str) -> Strategies {
    let w: Value = serde_json::from_str(world_json).unwrap();
    let lo = pt(&w["bounds"][0]);
    let hi = pt(&w["bounds"][1]);
    let r = w["robot"]["radius"].as_f64().unwrap();
    let v = w["robot"]["speed_mps"].as_f64().unwrap();
    let ang = w["robot"]["ang_speed_rps"].as_f64().unwrap();
    let pick = w["robot"]["pick_time_s"].as_f64().unwrap();
    let place = w["robot"]["place_time_s"].as_f64().unwrap();
    let statics: Vec<Poly> = w["statics"].as_array().unwrap().iter().map(poly).collect();
    let bx = &w["movables"][0];
    let local = poly(&bx["footprint"]);
    let bpose = pt(&bx["pose"]);
    let box_shape = translate(&local, bpose);
    let surface = poly(&w["surfaces"][0]);
    let start = pt(&w["anchors"]["start"]);
    let th0 = w["anchors"]["start"][2].as_f64().unwrap();
    let goal = pt(&w["anchors"]["goal"]);
    let th_goal = w["anchors"]["goal"][2].as_f64().unwrap();
    let dz = poly(&w["anchors"]["dz"]);

    let disc = Body { radius: r, carried: None };
    let mut with_box = statics.clone();
    with_box.push(box_shape.clone());
    let blocked = Space { lo, hi, obstacles: with_box, body: disc.clone() };

    let from_start = Field::from(&blocked, H, start);
    let detour_s = from_start.to(goal) / v + wrap(th_goal - th0).abs() / ang;

    // approach poses on each face of the (axis-aligned) box
    let [blo, bhi] = aabb(&box_shape);
    let half = [(bhi[0] - blo[0]) / 2.0, (bhi[1] - blo[1]) / 2.0];
    let clearance = 0.05;
    let mut relocation_s = f64::INFINITY;
    for (d, th) in [([1.0, 0.0], 0.0), ([-1.0, 0.0], std::f64::consts::PI), ([0.0, 1.0], std::f64::consts::FRAC_PI_2), ([0.0, -1.0], -std::f64::consts::FRAC_PI_2)] {
        let ext = if d[0] != 0.0 { half[0] } else { half[1] };
        let a = [bpose[0] - d[0] * (r + ext + clearance), bpose[1] - d[1] * (r + ext + clearance)];
        if !blocked.free(a) {
            continue;
        }
        let reach = from_start.to(a);
        if !reach.is_finite() {
            continue;
        }
        let rel = [bpose[0] - a[0], bpose[1] - a[1]];
        let carried = translate(&local, rel);
        let carry = Space {
            lo,
            hi,
            obstacles: statics.clone(),
            body: Body { radius: r, carried: Some(carried) },
        };
        let from_a = Field::from(&carry, H, a);
        let [slo, shi] = aabb(&surface);
        let mut y = slo[1];
        while y <= shi[1] + 1e-9 {
            let mut x = slo[0];
            while x <= shi[0] + 1e-9 {
                let b = [x, y];
                x += PLACE_H;
                let placed = translate(&local, b);
                let in_dz = {
                    let [dlo, dhi] = aabb(&dz);
                    b[0] >= dlo[0] && b[0] <= dhi[0] && b[1] >= dlo[1] && b[1] <= dhi[1]
                };
                if !in_dz || !inside_all(&placed, &surface) || statics.iter().any(|s| polys_touch(&placed, s)) {
                    continue;
                }
                let p = [b[0] - rel[0], b[1] - rel[1]];
                if !carry.free(p) || statics.iter().any(|s| disc_hits(p, r, s)) {
                    continue;
                }
                let carry_m = from_a.to(p);
                if !carry_m.is_finite() {
                    continue;
                }
                let mut after = statics.clone();
                after.push(placed);
                let out = Space { lo, hi, obstacles: after, body: disc.clone() };
                let leave = Field::from(&out, H, goal).to(p);
                let turns = wrap(th - th0).abs() + wrap(th_goal - th).abs();
                let total = (reach + carry_m + leave) / v + turns / ang + pick + place;
                relocation_s = relocation_s.min(total);
            }
            y += PLACE_H;
        }
    }
    Strategies { detour_s, relocation_s }
}
