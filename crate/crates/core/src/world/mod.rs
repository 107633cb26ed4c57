//! 2D world: disc robot in SE(2), polygonal statics and movables,
//! collision queries, grasps, placements and effort accounting.

mod geom;
mod path;

use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use geom::{dist_point_segment, segments_intersect, wrap_angle, Config, Point, Polygon};
pub use path::{effort, travel_time, ActionKind, MotionPath, TimedConfig, Validation};

/// Static id reported when the robot leaves the world bounds.
pub const BOUNDARY: usize = usize::MAX;

/// Default sweep resolution in metres.
pub const SWEEP_STEP: f64 = 0.01;

/// Default rejection-sampling budget.
pub const SAMPLE_TRIES: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("cannot read world file: {0}")]
    Io(String),
    #[error("malformed world file: {0}")]
    Format(String),
    #[error("invalid world: {0}")]
    Invalid(String),
    #[error("object `{0}` is not graspable")]
    NotGraspable(String),
    #[error("sampling exhausted after {0} tries")]
    Exhausted(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub pose: Config,
    pub radius: f64,
    pub speed_mps: f64,
    pub ang_speed_rps: f64,
    #[serde(default)]
    pub pick_time_s: f64,
    #[serde(default)]
    pub place_time_s: f64,
    #[serde(default)]
    pub arm_time_s: f64,
    #[serde(default = "default_gripper")]
    pub gripper_width: f64,
}

fn default_gripper() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovableObject {
    pub id: String,
    pub footprint: Polygon,
    pub pose: Config,
    #[serde(default = "yes")]
    pub graspable: bool,
    #[serde(default)]
    pub width: f64,
}

fn yes() -> bool {
    true
}

impl MovableObject {
    pub fn shape(&self) -> Polygon {
        self.footprint.transformed(&self.pose)
    }

    pub fn shape_at(&self, pose: &Config) -> Polygon {
        self.footprint.transformed(pose)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Anchor {
    Pose(Config),
    Region(Polygon),
}

impl Anchor {
    /// Representative configuration: the pose, or a region's centroid.
    pub fn config(&self) -> Config {
        match self {
            Anchor::Pose(c) => *c,
            Anchor::Region(p) => {
                let c = p.centroid();
                Config::new(c[0], c[1], 0.0)
            }
        }
    }
}

/// Object carried by the robot; `rel` is its pose in the robot frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Held {
    pub id: String,
    pub rel: Config,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Hit {
    Static(usize),
    Movable(String),
}

impl Hit {
    pub fn movable(&self) -> Option<&str> {
        match self {
            Hit::Movable(id) => Some(id),
            Hit::Static(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Collision {
    Clear,
    HitStatic(usize),
    HitMovable(String),
}

impl From<Option<Hit>> for Collision {
    fn from(h: Option<Hit>) -> Self {
        match h {
            None => Collision::Clear,
            Some(Hit::Static(i)) => Collision::HitStatic(i),
            Some(Hit::Movable(id)) => Collision::HitMovable(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SegmentStatus {
    Clear,
    FirstHit { hit: Hit, s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub bounds: [Point; 2],
    pub robot: Robot,
    pub statics: Vec<Polygon>,
    /// Sorted by id.
    pub movables: Vec<MovableObject>,
    pub surfaces: Vec<Polygon>,
    pub anchors: BTreeMap<String, Anchor>,
    pub held: Option<Held>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldFile {
    bounds: [Point; 2],
    robot: Robot,
    #[serde(default)]
    statics: Vec<Polygon>,
    #[serde(default)]
    movables: Vec<MovableObject>,
    #[serde(default)]
    surfaces: Vec<Polygon>,
    #[serde(default)]
    anchors: BTreeMap<String, Anchor>,
    #[serde(default)]
    held: Option<String>,
}

impl WorldState {
    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let f: WorldFile =
            serde_json::from_str(text).map_err(|e| WorldError::Format(e.to_string()))?;
        let mut w = WorldState {
            bounds: f.bounds,
            robot: f.robot,
            statics: f.statics,
            movables: f.movables,
            surfaces: f.surfaces,
            anchors: f.anchors,
            held: None,
        };
        w.movables.sort_by(|a, b| a.id.cmp(&b.id));
        for m in &mut w.movables {
            if m.width <= 0.0 {
                m.width = m.footprint.diameter();
            }
        }
        w.check()?;
        if let Some(id) = f.held {
            let o = w
                .movable(&id)
                .ok_or_else(|| WorldError::Invalid(format!("held object `{id}` is unknown")))?;
            let rel = w.robot.pose.inverse().compose(&o.pose);
            w.held = Some(Held { id, rel });
        }
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<Self, WorldError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WorldError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<(), WorldError> {
        let r = &self.robot;
        if !(r.radius > 0.0 && r.speed_mps > 0.0 && r.ang_speed_rps > 0.0) {
            return Err(WorldError::Invalid(
                "robot radius and speeds must be positive".into(),
            ));
        }
        if !r.pose.is_finite() {
            return Err(WorldError::Invalid("robot pose is not finite".into()));
        }
        let [lo, hi] = self.bounds;
        if !(lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(WorldError::Invalid("empty bounds".into()));
        }
        for w in self.movables.windows(2) {
            if w[0].id == w[1].id {
                return Err(WorldError::Invalid(format!("duplicate movable `{}`", w[0].id)));
            }
        }
        for m in &self.movables {
            if m.footprint.is_degenerate() {
                return Err(WorldError::Invalid(format!("degenerate footprint `{}`", m.id)));
            }
        }
        for (i, s) in self.statics.iter().enumerate() {
            if s.is_degenerate() {
                return Err(WorldError::Invalid(format!("degenerate static #{i}")));
            }
        }
        Ok(())
    }

    pub fn movable(&self, id: &str) -> Option<&MovableObject> {
        self.movables
            .binary_search_by(|m| m.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.movables[i])
    }

    fn movable_mut(&mut self, id: &str) -> Option<&mut MovableObject> {
        self.movables
            .binary_search_by(|m| m.id.as_str().cmp(id))
            .ok()
            .map(move |i| &mut self.movables[i])
    }

    pub fn held_id(&self) -> Option<&str> {
        self.held.as_ref().map(|h| h.id.as_str())
    }

    pub fn anchor(&self, symbol: &str) -> Option<&Anchor> {
        self.anchors.get(symbol)
    }

    /// Inserts or replaces a movable, keeping id order.
    pub fn put_movable(&mut self, m: MovableObject) {
        match self.movables.binary_search_by(|x| x.id.cmp(&m.id)) {
            Ok(i) => self.movables[i] = m,
            Err(i) => self.movables.insert(i, m),
        }
    }

    pub fn set_object_pose(&mut self, id: &str, pose: Config) -> bool {
        match self.movable_mut(id) {
            Some(m) => {
                m.pose = pose;
                true
            }
            None => false,
        }
    }

    /// Moves the robot; a held object rides along.
    pub fn set_robot(&mut self, c: Config) {
        self.robot.pose = c;
        if let Some(h) = self.held.clone() {
            self.set_object_pose(&h.id, c.compose(&h.rel));
        }
    }

    /// Attaches `id` at its current pose relative to the robot.
    pub fn grasp(&mut self, id: &str) -> bool {
        let Some(o) = self.movable(id) else {
            return false;
        };
        let rel = self.robot.pose.inverse().compose(&o.pose);
        self.held = Some(Held { id: id.into(), rel });
        true
    }

    pub fn release(&mut self) {
        if let Some(h) = self.held.take() {
            let pose = self.robot.pose.compose(&h.rel);
            self.set_object_pose(&h.id, pose);
        }
    }

    /// Stable content hash for caching.
    pub fn fingerprint(&self) -> u64 {
        let text = serde_json::to_string(self).expect("world serializes");
        let mut h = std::collections::hash_map::DefaultHasher::new();
        text.hash(&mut h);
        h.finish()
    }

    fn held_shape(&self, c: &Config) -> Option<Polygon> {
        let h = self.held.as_ref()?;
        let o = self.movable(&h.id)?;
        Some(o.shape_at(&c.compose(&h.rel)))
    }

    /// Distance from the robot centre to the farthest point of the carried body.
    pub fn body_reach(&self) -> f64 {
        let mut r = self.robot.radius;
        if let Some(h) = &self.held {
            if let Some(o) = self.movable(&h.id) {
                let shape = o.shape_at(&h.rel);
                r = r.max(shape.max_radius());
            }
        }
        r
    }

    fn in_bounds(&self, c: &Config, held: Option<&Polygon>, margin: f64) -> bool {
        let [lo, hi] = self.bounds;
        let r = self.robot.radius + margin;
        let disc = c.x - r >= lo[0] && c.x + r <= hi[0] && c.y - r >= lo[1] && c.y + r <= hi[1];
        let body = held.is_none_or(|p| {
            p.vertices().iter().all(|v| {
                v[0] - margin >= lo[0] && v[0] + margin <= hi[0] && v[1] - margin >= lo[1] && v[1] + margin <= hi[1]
            })
        });
        disc && body
    }

    /// First obstacle hit by the robot (and held object) at `c`: statics by
    /// index, then movables by id. `movables = false` ignores movables.
    pub fn first_hit(&self, c: &Config, movables: bool) -> Option<Hit> {
        self.first_hit_within(c, movables, 0.0)
    }

    /// As [`first_hit`](Self::first_hit), but anything closer than `margin`
    /// counts as a hit.
    pub fn first_hit_within(&self, c: &Config, movables: bool, margin: f64) -> Option<Hit> {
        let held = self.held_shape(c);
        if !self.in_bounds(c, held.as_ref(), margin) {
            return Some(Hit::Static(BOUNDARY));
        }
        let r = self.robot.radius + margin;
        let body_hits = |shape: &Polygon| {
            held.as_ref().is_some_and(|h| {
                if margin > 0.0 {
                    h.distance(shape) < margin
                } else {
                    h.intersects(shape)
                }
            })
        };
        for (i, s) in self.statics.iter().enumerate() {
            if s.hits_disc(c.xy(), r) || body_hits(s) {
                return Some(Hit::Static(i));
            }
        }
        if movables {
            let held_id = self.held_id();
            for m in &self.movables {
                if Some(m.id.as_str()) == held_id {
                    continue;
                }
                let shape = m.shape();
                if shape.hits_disc(c.xy(), r) || body_hits(&shape) {
                    return Some(Hit::Movable(m.id.clone()));
                }
            }
        }
        None
    }

    /// Every non-held movable touched by the robot body at `c`, by id.
    pub fn movables_hit(&self, c: &Config) -> Vec<&str> {
        let held = self.held_shape(c);
        let held_id = self.held_id();
        let r = self.robot.radius;
        self.movables
            .iter()
            .filter(|m| Some(m.id.as_str()) != held_id)
            .filter(|m| {
                let shape = m.shape();
                shape.hits_disc(c.xy(), r) || held.as_ref().is_some_and(|h| h.intersects(&shape))
            })
            .map(|m| m.id.as_str())
            .collect()
    }

    pub fn collision_free(&self, c: &Config) -> Collision {
        self.first_hit(c, true).into()
    }

    /// Number of interpolation intervals for a sweep at resolution `step`.
    pub fn sweep_intervals(&self, c1: &Config, c2: &Config, step: f64) -> usize {
        let travel = c1.dist(c2).max(c1.dtheta(c2).abs() * self.body_reach());
        ((travel / step).ceil() as usize).max(1)
    }

    pub fn segment_status_with(
        &self,
        c1: &Config,
        c2: &Config,
        step: f64,
        movables: bool,
    ) -> SegmentStatus {
        self.segment_status_within(c1, c2, step, movables, 0.0)
    }

    /// Sampled sweep with a clearance margin. With `margin >= step / 2` a
    /// clear result implies the continuous motion is collision-free, since
    /// no body point moves more than `step` between samples.
    pub fn segment_status_within(
        &self,
        c1: &Config,
        c2: &Config,
        step: f64,
        movables: bool,
        margin: f64,
    ) -> SegmentStatus {
        assert!(step > 0.0, "sweep step must be positive");
        let n = self.sweep_intervals(c1, c2, step);
        for i in 0..=n {
            let s = i as f64 / n as f64;
            if let Some(hit) = self.first_hit_within(&c1.lerp(c2, s), movables, margin) {
                return SegmentStatus::FirstHit { hit, s };
            }
        }
        SegmentStatus::Clear
    }

    pub fn segment_status(&self, c1: &Config, c2: &Config, step: f64) -> SegmentStatus {
        self.segment_status_with(c1, c2, step, true)
    }

    /// Footprint of `o` at `pose` is inside bounds and clear of statics and
    /// other (non-held) movables.
    pub fn placement_clear(&self, o: &MovableObject, pose: &Config) -> bool {
        let shape = o.shape_at(pose);
        let [lo, hi] = self.bounds;
        let inside = shape
            .vertices()
            .iter()
            .all(|v| v[0] >= lo[0] && v[0] <= hi[0] && v[1] >= lo[1] && v[1] <= hi[1]);
        inside
            && !self.statics.iter().any(|s| s.intersects(&shape))
            && !self
                .movables
                .iter()
                .any(|m| m.id != o.id && m.shape().intersects(&shape))
    }

    /// Footprint of `o` at `pose` rests entirely on some surface.
    pub fn on_surface(&self, o: &MovableObject, pose: &Config) -> bool {
        let shape = o.shape_at(pose);
        self.surfaces.iter().any(|s| s.encloses(&shape))
    }

    /// Rejection-samples a resting pose for `o` on a surface within `radius`
    /// of its pose, keeping its orientation. Centres are drawn uniformly
    /// from the surface boxes shrunk by the footprint and clipped to the
    /// radius. `accept` adds caller
    /// constraints.
    pub fn sample_placement_with<R: Rng>(
        &self,
        o: &MovableObject,
        rng: &mut R,
        radius: f64,
        tries: usize,
        accept: impl Fn(&Config) -> bool,
    ) -> Result<Config, WorldError> {
        let c = o.pose;
        // centres whose footprint box fits inside the surface box
        let [flo, fhi] = o.shape_at(&Config::new(0.0, 0.0, c.theta)).aabb();
        let boxes: Vec<([f64; 2], [f64; 2])> = self
            .surfaces
            .iter()
            .filter_map(|s| {
                let [lo, hi] = s.aabb();
                let lo = [(lo[0] - flo[0]).max(c.x - radius), (lo[1] - flo[1]).max(c.y - radius)];
                let hi = [(hi[0] - fhi[0]).min(c.x + radius), (hi[1] - fhi[1]).min(c.y + radius)];
                (hi[0] > lo[0] && hi[1] > lo[1]).then_some((lo, hi))
            })
            .collect();
        let areas: Vec<f64> = boxes.iter().map(|(l, h)| (h[0] - l[0]) * (h[1] - l[1])).collect();
        let total: f64 = areas.iter().sum();
        if boxes.is_empty() {
            return Err(WorldError::Exhausted(tries));
        }
        for _ in 0..tries {
            let mut u = rng.gen_range(0.0..total);
            let mut k = 0;
            while k + 1 < areas.len() && u >= areas[k] {
                u -= areas[k];
                k += 1;
            }
            let (lo, hi) = boxes[k];
            let pose = Config::new(rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1]), c.theta);
            if pose.dist(&c) > radius {
                continue;
            }
            if self.on_surface(o, &pose) && self.placement_clear(o, &pose) && accept(&pose) {
                return Ok(pose);
            }
        }
        Err(WorldError::Exhausted(tries))
    }

    pub fn sample_placement<R: Rng>(
        &self,
        o: &MovableObject,
        rng: &mut R,
        radius: f64,
    ) -> Result<Config, WorldError> {
        self.sample_placement_with(o, rng, radius, SAMPLE_TRIES, |_| true)
    }

    pub fn sample_free_pose<R: Rng>(&self, rng: &mut R) -> Result<Config, WorldError> {
        let [lo, hi] = self.bounds;
        for _ in 0..SAMPLE_TRIES {
            let c = Config::new(
                rng.gen_range(lo[0]..hi[0]),
                rng.gen_range(lo[1]..hi[1]),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            );
            if self.first_hit(&c, true).is_none() {
                return Ok(c);
            }
        }
        Err(WorldError::Exhausted(SAMPLE_TRIES))
    }
}

/// Two-finger antipodal grasp in the object frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grasp {
    /// Midpoint between the fingers.
    pub center: Point,
    /// Direction the fingers close along.
    pub axis: f64,
    /// Heading the gripper approaches with (perpendicular to `axis`).
    pub approach: f64,
    pub aperture: f64,
}

/// Maximum angle between antipodal contact edges.
pub const GRASP_PARALLEL_TOL: f64 = 10.0 * std::f64::consts::PI / 180.0;

/// Gap between the robot body and the object at the approach pose.
pub const APPROACH_CLEARANCE: f64 = 0.05;

pub fn find_grasps(o: &MovableObject, gripper_width: f64) -> Result<Vec<Grasp>, WorldError> {
    if !o.graspable {
        return Err(WorldError::NotGraspable(o.id.clone()));
    }
    let edges: Vec<(Point, Point)> = o.footprint.edges().collect();
    let mut out = Vec::new();
    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            let (a, b) = edges[i];
            let (c, d) = edges[j];
            let ui = [b[0] - a[0], b[1] - a[1]];
            let uj = [d[0] - c[0], d[1] - c[1]];
            let li = ui[0].hypot(ui[1]);
            let lj = uj[0].hypot(uj[1]);
            if li < 1e-12 || lj < 1e-12 {
                continue;
            }
            let u = [ui[0] / li, ui[1] / li];
            let v = [uj[0] / lj, uj[1] / lj];
            // antiparallel within tolerance
            let cosang = -(u[0] * v[0] + u[1] * v[1]);
            if cosang < GRASP_PARALLEL_TOL.cos() {
                continue;
            }
            let n = [-u[1], u[0]];
            let mid_j = [(c[0] + d[0]) / 2.0, (c[1] + d[1]) / 2.0];
            let sep = (mid_j[0] - a[0]) * n[0] + (mid_j[1] - a[1]) * n[1];
            if sep.abs() < 1e-9 || sep.abs() > gripper_width {
                continue;
            }
            let tc = (c[0] - a[0]) * u[0] + (c[1] - a[1]) * u[1];
            let td = (d[0] - a[0]) * u[0] + (d[1] - a[1]) * u[1];
            let lo = tc.min(td).max(0.0);
            let hi = tc.max(td).min(li);
            if hi - lo <= 1e-9 {
                continue;
            }
            let t = (lo + hi) / 2.0;
            let center = [
                a[0] + u[0] * t + n[0] * sep / 2.0,
                a[1] + u[1] * t + n[1] * sep / 2.0,
            ];
            let axis = wrap_angle(n[1].atan2(n[0]));
            for dir in [u, [-u[0], -u[1]]] {
                out.push(Grasp {
                    center,
                    axis,
                    approach: wrap_angle(dir[1].atan2(dir[0])),
                    aperture: sep.abs(),
                });
            }
        }
    }
    Ok(out)
}

impl Grasp {
    /// Robot base pose for this grasp of `o`, standing off along the approach.
    pub fn approach_config(&self, o: &MovableObject, robot_radius: f64) -> Config {
        let d = [self.approach.cos(), self.approach.sin()];
        let extent = o
            .footprint
            .vertices()
            .iter()
            .map(|p| (p[0] - self.center[0]) * d[0] + (p[1] - self.center[1]) * d[1])
            .fold(0.0f64, |m, x| m.max(-x));
        let standoff = robot_radius + extent + APPROACH_CLEARANCE;
        let local = Config::new(
            self.center[0] - d[0] * standoff,
            self.center[1] - d[1] * standoff,
            self.approach,
        );
        o.pose.compose(&local)
    }
}
