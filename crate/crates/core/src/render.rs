//! Deterministic SVG drawings of worlds and driven paths.
//!
//! Output depends only on the input: fixed number formatting, elements in
//! world order, ids derived from names.

use std::fmt::Write;

use crate::world::{Anchor, Config, Polygon, WorldState};

const PX_PER_M: f64 = 60.0;
const MARGIN_PX: f64 = 10.0;

struct Canvas {
    lo: [f64; 2],
    hi: [f64; 2],
    out: String,
}

impl Canvas {
    fn x(&self, x: f64) -> f64 {
        MARGIN_PX + (x - self.lo[0]) * PX_PER_M
    }

    // SVG y grows downward
    fn y(&self, y: f64) -> f64 {
        MARGIN_PX + (self.hi[1] - y) * PX_PER_M
    }

    fn points(&self, pts: impl Iterator<Item = [f64; 2]>) -> String {
        pts.map(|p| format!("{:.2},{:.2}", self.x(p[0]), self.y(p[1])))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn polygon(&mut self, id: &str, p: &Polygon, style: &str) {
        let pts = self.points(p.vertices().iter().copied());
        let _ = writeln!(self.out, r#"<polygon id="{id}" points="{pts}" {style}/>"#);
    }

    fn pose(&mut self, id: &str, c: &Config, r: f64, style: &str) {
        let (cx, cy) = (self.x(c.x), self.y(c.y));
        let tip = [c.x + r * c.theta.cos(), c.y + r * c.theta.sin()];
        let _ = writeln!(
            self.out,
            r#"<g id="{id}"><circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" {style}/><line x1="{cx:.2}" y1="{cy:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/></g>"#,
            r * PX_PER_M,
            self.x(tip[0]),
            self.y(tip[1]),
        );
    }
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '-' }).collect()
}

/// Draws `world` with the given paths overlaid, in order.
pub fn svg(world: &WorldState, paths: &[Vec<Config>]) -> String {
    let [lo, hi] = world.bounds;
    let w = (hi[0] - lo[0]) * PX_PER_M + 2.0 * MARGIN_PX;
    let h = (hi[1] - lo[1]) * PX_PER_M + 2.0 * MARGIN_PX;
    let mut c = Canvas {
        lo,
        hi,
        out: String::new(),
    };
    let _ = writeln!(
        c.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(
        c.out,
        r#"<rect id="bounds" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="black"/>"#,
        MARGIN_PX,
        MARGIN_PX,
        w - 2.0 * MARGIN_PX,
        h - 2.0 * MARGIN_PX
    );
    for (i, s) in world.surfaces.iter().enumerate() {
        c.polygon(&format!("surface-{i}"), s, r##"fill="#f2ead8" stroke="none""##);
    }
    for (name, a) in &world.anchors {
        let id = format!("anchor-{}", slug(name));
        match a {
            Anchor::Region(r) => c.polygon(&id, r, r##"fill="none" stroke="#3a7" stroke-dasharray="4 3""##),
            Anchor::Pose(p) => c.pose(&id, p, 0.08, r##"fill="none" stroke="#3a7""##),
        }
    }
    for (i, s) in world.statics.iter().enumerate() {
        c.polygon(&format!("static-{i}"), s, r##"fill="#555" stroke="none""##);
    }
    for m in &world.movables {
        let fill = if m.graspable { "#e8a040" } else { "#a05030" };
        c.polygon(&format!("movable-{}", slug(&m.id)), &m.shape(), &format!(r##"fill="{fill}" stroke="black""##));
    }
    for (i, p) in paths.iter().enumerate() {
        if p.is_empty() {
            continue;
        }
        let pts = c.points(p.iter().map(|q| [q.x, q.y]));
        let _ = writeln!(
            c.out,
            r##"<polyline id="path-{i}" points="{pts}" fill="none" stroke="#2060c0" stroke-width="2"/>"##
        );
    }
    let robot = world.robot.pose;
    c.pose("robot", &robot, world.robot.radius, r##"fill="#9cf" fill-opacity="0.6" stroke="#2060c0""##);
    c.out.push_str("</svg>\n");
    c.out
}
