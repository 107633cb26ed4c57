//! Lazy KPIECE-style SE(2) motion planning.
//!
//! A tree grows over an (x, y) cell grid. New nodes are point-checked only;
//! edges are swept when a branch reaches the goal. A branch with an invalid
//! edge loses that edge's subtree and growth resumes. Eager mode sweeps
//! every edge as it is added instead.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::world::{
    Config, Hit, MotionPath, Polygon, SegmentStatus, Validation, WorldState, SWEEP_STEP,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    pub cell_m: f64,
    pub step_m: f64,
    pub goal_bias: f64,
    pub exterior_bias: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub pos_tol: f64,
    pub ang_tol: f64,
    pub sweep_m: f64,
    /// Post-validation shortcutting.
    pub shortcut: bool,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            cell_m: 0.25,
            step_m: 0.5,
            goal_bias: 0.05,
            exterior_bias: 0.7,
            max_iters: 5000,
            seed: 0,
            pos_tol: 0.05,
            ang_tol: 0.1,
            sweep_m: SWEEP_STEP,
            shortcut: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckCounts {
    pub point_checks: u64,
    pub segment_checks: u64,
    /// Total length swept, metres.
    pub sweep_m: f64,
}

impl CheckCounts {
    pub fn add(&mut self, o: &CheckCounts) {
        self.point_checks += o.point_checks;
        self.segment_checks += o.segment_checks;
        self.sweep_m += o.sweep_m;
    }
}

/// Where a motion may end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MotionGoal {
    /// Any of these configurations, within tolerance.
    Poses(Vec<Config>),
    /// Any heading with the centre inside the region.
    Region(Polygon),
}

impl MotionGoal {
    pub fn pose(c: Config) -> Self {
        MotionGoal::Poses(vec![c])
    }

    fn reached(&self, c: &Config, p: &PlannerParams) -> bool {
        match self {
            MotionGoal::Poses(v) => v.iter().any(|g| c.within(g, p.pos_tol, p.ang_tol)),
            MotionGoal::Region(r) => r.contains(c.xy()),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Option<Config> {
        match self {
            MotionGoal::Poses(v) if v.is_empty() => None,
            MotionGoal::Poses(v) => Some(v[rng.gen_range(0..v.len())]),
            MotionGoal::Region(r) => {
                let [lo, hi] = r.aabb();
                for _ in 0..100 {
                    let p = [rng.gen_range(lo[0]..=hi[0]), rng.gen_range(lo[1]..=hi[1])];
                    if r.contains(p) {
                        let th = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                        return Some(Config::new(p[0], p[1], th));
                    }
                }
                None
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum MotionError {
    #[error("start configuration is in collision")]
    StartInvalid,
    #[error("no path within the iteration budget")]
    NoPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PathCheck {
    Valid,
    FirstCollision { hit: Hit, segment: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge {
    Unchecked,
    Valid,
}

#[derive(Debug, Clone)]
struct Node {
    c: Config,
    parent: Option<usize>,
    edge: Edge,
    alive: bool,
    cell: (i64, i64),
}

#[derive(Debug, Clone)]
struct Cell {
    motions: Vec<usize>,
    /// Occupied 4-neighbours; four makes the cell interior.
    neighbours: u8,
    coverage: f64,
    selections: u64,
    score: f64,
}

/// Upper bound on waypoint-pulling passes during shortcutting.
const PARTIAL_SHORTCUTS: usize = 400;

/// Whether movables count as obstacles for this episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Obstacles {
    All,
    StaticOnly,
}

/// One planning episode: tree, grid and counters.
pub struct Episode<'w> {
    world: &'w WorldState,
    params: PlannerParams,
    eager: bool,
    movables: bool,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    cells: BTreeMap<(i64, i64), Cell>,
    pub counts: CheckCounts,
    iters: usize,
}

impl<'w> Episode<'w> {
    pub fn new(world: &'w WorldState, params: &PlannerParams, eager: bool, obstacles: Obstacles) -> Self {
        Self {
            world,
            params: params.clone(),
            eager,
            movables: obstacles == Obstacles::All,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            nodes: Vec::new(),
            cells: BTreeMap::new(),
            counts: CheckCounts::default(),
            iters: 0,
        }
    }

    /// Clearance kept by planned motions so that any re-sampling of them
    /// checks clear at nominal geometry.
    fn margin(&self) -> f64 {
        0.5 * self.params.sweep_m
    }

    fn point_ok(&mut self, c: &Config) -> bool {
        self.counts.point_checks += 1;
        self.world.first_hit_within(c, self.movables, self.margin()).is_none()
    }

    fn sweep(&mut self, a: &Config, b: &Config) -> SegmentStatus {
        self.counts.segment_checks += 1;
        self.counts.sweep_m += a.dist(b);
        let m = self.margin();
        // the start may sit inside the margin; sweeps leaving it are judged nominally
        let m = if self.nodes.first().is_some_and(|n| n.c.within(a, 1e-12, 1e-12)) { 0.0 } else { m };
        self.world.segment_status_within(a, b, self.params.sweep_m, self.movables, m)
    }

    fn cell_of(&self, c: &Config) -> (i64, i64) {
        let s = self.params.cell_m;
        ((c.x / s).floor() as i64, (c.y / s).floor() as i64)
    }

    const NEIGHBOURS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

    fn add_node(&mut self, c: Config, parent: Option<usize>, edge: Edge) -> usize {
        let id = self.nodes.len();
        let cell = self.cell_of(&c);
        let len = parent.map_or(0.0, |p| self.nodes[p].c.dist(&c));
        self.nodes.push(Node {
            c,
            parent,
            edge,
            alive: true,
            cell,
        });
        if !self.cells.contains_key(&cell) {
            let mut n = 0;
            for (dx, dy) in Self::NEIGHBOURS {
                if let Some(o) = self.cells.get_mut(&(cell.0 + dx, cell.1 + dy)) {
                    o.neighbours += 1;
                    n += 1;
                }
            }
            self.cells.insert(
                cell,
                Cell {
                    motions: Vec::new(),
                    neighbours: n,
                    coverage: 0.0,
                    selections: 0,
                    score: 1.0,
                },
            );
        }
        let e = self.cells.get_mut(&cell).expect("cell just ensured");
        e.motions.push(id);
        e.coverage += len;
        id
    }

    fn select_cell(&mut self) -> Option<(i64, i64)> {
        let want_exterior = self.rng.gen::<f64>() < self.params.exterior_bias;
        let mut best: [Option<((i64, i64), f64)>; 2] = [None, None];
        for (k, cell) in &self.cells {
            if cell.motions.is_empty() {
                continue;
            }
            let class = usize::from(cell.neighbours < 4);
            let imp = cell.score / ((1.0 + cell.selections as f64) * (1.0 + cell.coverage));
            if best[class].is_none_or(|(_, b)| imp > b) {
                best[class] = Some((*k, imp));
            }
        }
        let (first, second) = if want_exterior { (1, 0) } else { (0, 1) };
        best[first].or(best[second]).map(|(k, _)| k)
    }

    fn random_config(&mut self) -> Config {
        let [lo, hi] = self.world.bounds;
        Config::new(
            self.rng.gen_range(lo[0]..hi[0]),
            self.rng.gen_range(lo[1]..hi[1]),
            self.rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        )
    }

    fn nearest(&self, c: &Config) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.c.dist(c) + 0.1 * n.c.dtheta(c).abs();
            if n.alive && d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Detaches the subtree under `root`.
    fn prune(&mut self, root: usize) {
        let mut dead = vec![false; self.nodes.len()];
        dead[root] = true;
        // parents precede children in index order
        for i in root + 1..self.nodes.len() {
            if let Some(p) = self.nodes[i].parent {
                if dead[p] {
                    dead[i] = true;
                }
            }
        }
        for (i, d) in dead.iter().enumerate() {
            if *d && self.nodes[i].alive {
                self.nodes[i].alive = false;
                let k = self.nodes[i].cell;
                if let Some(cell) = self.cells.get_mut(&k) {
                    cell.motions.retain(|m| *m != i);
                }
            }
        }
    }

    fn branch(&self, leaf: usize) -> Vec<usize> {
        let mut out = vec![leaf];
        let mut at = leaf;
        while let Some(p) = self.nodes[at].parent {
            out.push(p);
            at = p;
        }
        out.reverse();
        out
    }

    /// Grows until some alive node reaches the goal; returns that node.
    fn grow(&mut self, goal: &MotionGoal) -> Option<usize> {
        if let Some(i) = self
            .nodes
            .iter()
            .position(|n| n.alive && goal.reached(&n.c, &self.params))
        {
            return Some(i);
        }
        while self.iters < self.params.max_iters {
            self.iters += 1;
            let k = self.select_cell()?;
            let cell = self.cells.get_mut(&k).expect("selected cell exists");
            cell.selections += 1;
            let pick = self.rng.gen_range(0..cell.motions.len());
            let mut from_id = cell.motions[pick];
            let mut from = self.nodes[from_id].c;

            let goal_sample = if self.rng.gen::<f64>() < self.params.goal_bias {
                goal.sample(&mut self.rng)
            } else {
                None
            };
            let target = match goal_sample {
                Some(g) => {
                    // goal steps leave from the nearest node
                    from_id = self.nearest(&g);
                    from = self.nodes[from_id].c;
                    g
                }
                None => self.random_config(),
            };
            let d = from.dist(&target);
            let len = self.rng.gen_range(0.0..=self.params.step_m).max(1e-3);
            let to = if d <= len {
                target
            } else {
                from.lerp(&target, len / d)
            };
            if from.within(&to, 1e-9, 1e-9) {
                continue;
            }
            let ok = self.point_ok(&to) && (!self.eager || self.sweep(&from, &to) == SegmentStatus::Clear);
            if !ok {
                let cell = self.cells.get_mut(&k).expect("selected cell exists");
                cell.score = (cell.score * 0.7).max(1e-3);
                continue;
            }
            let edge = if self.eager { Edge::Valid } else { Edge::Unchecked };
            let id = self.add_node(to, Some(from_id), edge);
            if goal.reached(&to, &self.params) {
                return Some(id);
            }
        }
        None
    }

    /// Sweeps unchecked edges along the branch; prunes at the first hit.
    fn check_branch(&mut self, ids: &[usize]) -> Result<(), (Hit, usize)> {
        for (seg, w) in ids.windows(2).enumerate() {
            if self.nodes[w[1]].edge == Edge::Valid {
                continue;
            }
            let (a, b) = (self.nodes[w[0]].c, self.nodes[w[1]].c);
            match self.sweep(&a, &b) {
                SegmentStatus::Clear => self.nodes[w[1]].edge = Edge::Valid,
                SegmentStatus::FirstHit { hit, .. } => {
                    self.prune(w[1]);
                    return Err((hit, seg));
                }
            }
        }
        Ok(())
    }

    fn start(&mut self, start: &Config) -> Result<(), MotionError> {
        if self.nodes.is_empty() {
            self.counts.point_checks += 1;
            if self.world.first_hit(start, self.movables).is_some() {
                return Err(MotionError::StartInvalid);
            }
            self.add_node(*start, None, Edge::Valid);
        }
        Ok(())
    }

    /// Candidate branch with unchecked edges.
    pub fn plan_lazy(&mut self, start: &Config, goal: &MotionGoal) -> Result<Vec<Config>, MotionError> {
        self.start(start)?;
        let leaf = self.grow(goal).ok_or(MotionError::NoPath)?;
        Ok(self.branch(leaf).iter().map(|i| self.nodes[*i].c).collect())
    }

    /// Grows and repairs until a branch validates, then shortcuts it.
    pub fn plan_valid(&mut self, start: &Config, goal: &MotionGoal) -> Result<Vec<Config>, MotionError> {
        self.start(start)?;
        if let MotionGoal::Poses(v) = goal {
            let any_free = v.iter().any(|g| self.point_ok(g));
            if !any_free {
                return Err(MotionError::NoPath);
            }
        }
        loop {
            let leaf = self.grow(goal).ok_or(MotionError::NoPath)?;
            let ids = self.branch(leaf);
            if self.check_branch(&ids).is_ok() {
                let path: Vec<Config> = ids.iter().map(|i| self.nodes[*i].c).collect();
                return Ok(if self.params.shortcut {
                    self.shortcut(path)
                } else {
                    path
                });
            }
        }
    }

    fn clear(&mut self, a: &Config, b: &Config) -> bool {
        self.sweep(a, b) == SegmentStatus::Clear
    }

    /// Travel time of a straight move.
    fn cost(&self, a: &Config, b: &Config) -> f64 {
        let r = &self.world.robot;
        a.dist(b) / r.speed_mps + a.dtheta(b).abs() / r.ang_speed_rps
    }

    /// Moves interior headings toward their neighbours' while that is
    /// cheaper and stays clear.
    fn relax_headings(&mut self, out: &mut [Config]) {
        for _ in 0..5 {
            let mut changed = false;
            for k in 1..out.len().saturating_sub(1) {
                let (a, b, c) = (out[k - 1], out[k], out[k + 1]);
                let (da, dc) = (a.dist(&b), b.dist(&c));
                let f = if da + dc > 0.0 { da / (da + dc) } else { 0.5 };
                let here = self.cost(&a, &b) + self.cost(&b, &c);
                let mut options: Vec<(f64, Config)> = [a.theta, c.theta, a.theta + a.dtheta(&c) * f]
                    .into_iter()
                    .map(|th| Config::new(b.x, b.y, th))
                    .map(|q| (self.cost(&a, &q) + self.cost(&q, &c), q))
                    .filter(|(cost, _)| *cost < here - 1e-6)
                    .collect();
                options.sort_by(|x, y| x.0.total_cmp(&y.0));
                for (_, q) in options {
                    if self.point_ok(&q) && self.clear(&a, &q) && self.clear(&q, &c) {
                        out[k] = q;
                        changed = true;
                        break;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Furthest-visible shortcutting, corner tightening, then a monotone
    /// heading profile when it stays valid. Input must be valid.
    pub fn shortcut(&mut self, path: Vec<Config>) -> Vec<Config> {
        if path.len() <= 2 {
            return path;
        }
        // furthest visible waypoint, scanning back from the end
        let mut out = vec![path[0]];
        let mut i = 0;
        while i + 1 < path.len() {
            let mut next = i + 1;
            for j in (i + 2..path.len()).rev() {
                if self.clear(&path[i], &path[j]) {
                    next = j;
                    break;
                }
            }
            out.push(path[next]);
            i = next;
        }
        // partial shortcuts between random points along the path
        for _ in 0..PARTIAL_SHORTCUTS {
            let total: f64 = out.windows(2).map(|w| w[0].dist(&w[1])).sum();
            if total < 1e-9 || out.len() < 3 {
                break;
            }
            let mut u = [self.rng.gen_range(0.0..total), self.rng.gen_range(0.0..total)];
            u.sort_by(f64::total_cmp);
            let (i, p) = locate(&out, u[0]);
            let (j, q) = locate(&out, u[1]);
            if j <= i {
                continue;
            }
            let saved = (i + 1..=j).map(|k| self.cost(&out[k - 1], &out[k])).sum::<f64>()
                - self.cost(&out[i], &p)
                + self.cost(&out[j], &q)
                - self.cost(&p, &q);
            if saved < 1e-4 || !self.clear(&p, &q) {
                continue;
            }
            let mut next = out[..=i].to_vec();
            for c in [p, q] {
                if next.last().is_some_and(|l| !l.within(&c, 1e-9, 1e-9)) {
                    next.push(c);
                }
            }
            let rest = out[j + 1..].iter().copied();
            next.extend(rest.skip_while(|c| c.within(&q, 1e-9, 1e-9)));
            out = next;
        }
        self.relax_headings(&mut out);
        // cut remaining corners with progressively shorter chords
        for _ in 0..4 {
            let mut cut = false;
            let mut k = 1;
            while k + 1 < out.len() {
                let (a, b, c) = (out[k - 1], out[k], out[k + 1]);
                for d in [0.4, 0.2, 0.1, 0.05, 0.02] {
                    let (da, dc) = (b.dist(&a), b.dist(&c));
                    if d > 0.5 * da.min(dc) {
                        continue;
                    }
                    let p = b.lerp(&a, d / da);
                    let q = b.lerp(&c, d / dc);
                    if (da + dc) - (da - d + p.dist(&q) + dc - d) > 1e-4 && self.clear(&p, &q) {
                        out.splice(k..=k, [p, q]);
                        cut = true;
                        k += 1;
                        break;
                    }
                }
                k += 1;
            }
            if !cut {
                break;
            }
        }
        // drop waypoints that became collinear-visible
        let mut tight = vec![out[0]];
        let mut i = 0;
        while i + 1 < out.len() {
            let mut next = i + 1;
            if i + 2 < out.len() && self.clear(&out[i], &out[i + 2]) {
                next = i + 2;
            }
            tight.push(out[next]);
            i = next;
        }
        let mut out = tight;
        self.relax_headings(&mut out);
        // headings: rotate once, spread by arc length
        let total: f64 = out.windows(2).map(|w| w[0].dist(&w[1])).sum();
        let first = out[0];
        let last = *out.last().expect("non-empty");
        let turn = first.dtheta(&last);
        let current_turn: f64 = out.windows(2).map(|w| w[0].dtheta(&w[1]).abs()).sum();
        if total > 0.0 && current_turn > turn.abs() + 1e-9 {
            let mut acc = 0.0;
            let mut prof = vec![first];
            for w in out.windows(2) {
                acc += w[0].dist(&w[1]);
                prof.push(Config::new(w[1].x, w[1].y, first.theta + turn * acc / total));
            }
            *prof.last_mut().expect("non-empty") = last;
            let ok = prof.windows(2).all(|w| self.clear(&w[0], &w[1]));
            if ok {
                return prof;
            }
        }
        out
    }
}

/// Segment index and point at arc length `u`, heading interpolated.
fn locate(path: &[Config], u: f64) -> (usize, Config) {
    let mut acc = 0.0;
    for (k, w) in path.windows(2).enumerate() {
        let d = w[0].dist(&w[1]);
        if acc + d >= u && d > 0.0 {
            return (k, w[0].lerp(&w[1], (u - acc) / d));
        }
        acc += d;
    }
    let last = path.len() - 1;
    (last.saturating_sub(1), path[last])
}

pub struct MotionResult {
    pub configs: Vec<Config>,
    pub counts: CheckCounts,
}

/// Lazy candidate (edges unchecked). Used to probe for movable collisions.
pub fn plan_motion(
    start: &Config,
    goal: &MotionGoal,
    w: &WorldState,
    params: &PlannerParams,
    obstacles: Obstacles,
) -> (Result<Vec<Config>, MotionError>, CheckCounts) {
    let mut ep = Episode::new(w, params, false, obstacles);
    let r = ep.plan_lazy(start, goal);
    (r, ep.counts)
}

/// Fully validated path; `eager` sweeps every tree edge on insertion.
pub fn plan_valid_motion(
    start: &Config,
    goal: &MotionGoal,
    w: &WorldState,
    params: &PlannerParams,
    eager: bool,
) -> (Result<Vec<Config>, MotionError>, CheckCounts) {
    let mut ep = Episode::new(w, params, eager, Obstacles::All);
    let r = ep.plan_valid(start, goal);
    (r, ep.counts)
}

/// Sweeps `configs` segment by segment against all obstacles.
pub fn check_configs(configs: &[Config], w: &WorldState, step: f64, counts: &mut CheckCounts) -> PathCheck {
    if configs.len() == 1 {
        counts.point_checks += 1;
        if let Some(hit) = w.first_hit(&configs[0], true) {
            return PathCheck::FirstCollision { hit, segment: 0 };
        }
    }
    for (k, s) in configs.windows(2).enumerate() {
        counts.segment_checks += 1;
        counts.sweep_m += s[0].dist(&s[1]);
        if let SegmentStatus::FirstHit { hit, .. } = w.segment_status(&s[0], &s[1], step) {
            return PathCheck::FirstCollision { hit, segment: k };
        }
    }
    PathCheck::Valid
}

/// Validates a lazy path and records the outcome on it.
pub fn validate(path: &mut MotionPath, w: &WorldState, step: f64, counts: &mut CheckCounts) -> PathCheck {
    let r = check_configs(&path.configs(), w, step, counts);
    path.validated = match &r {
        PathCheck::Valid => Validation::Valid,
        PathCheck::FirstCollision { hit, segment } => Validation::Invalid {
            hit: hit.clone(),
            segment: *segment,
        },
    };
    r
}
