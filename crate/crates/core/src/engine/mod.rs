//! Effort-minimizing task and motion search over the reachability graph.
//!
//! `tmp` plans symbolically, seeds the incumbent from the first plan, then
//! `traverse` explores the graph depth-first, pruning any branch whose
//! accumulated effort reaches the incumbent. A motion that runs into a movable
//! object not seen before triggers `generate_subtasks`, which splices
//! relocation plans for that object into the graph.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ff::{Plan, Planner, PlannerConfig};
use crate::motion::{
    check_configs, CheckCounts, Episode, MotionError, MotionGoal, Obstacles, PathCheck,
    PlannerParams,
};
use crate::pddl::{Goal, GroundTask, State};
use crate::rgraph::{NodeId, RGraph};
use crate::world::{ActionKind, Anchor, Config, MotionPath, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub max_attempts: usize,
    /// Placement samples per Place edge.
    pub placements: usize,
    pub place_radius_m: f64,
    /// Sweep every tree edge on insertion instead of lazily.
    pub eager: bool,
    /// Motion episodes plus planner calls allowed per attempt.
    pub work_per_attempt: usize,
    #[serde(skip)]
    pub planner: PlannerParams,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            max_attempts: 10,
            placements: 3,
            place_radius_m: 1.0,
            eager: false,
            work_per_attempt: 100,
            planner: PlannerParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub enum Failure {
    #[error("task is unsolvable")]
    UnsolvableTask,
    #[error("attempts exhausted")]
    AttemptsExhausted,
}

/// One executed graph edge with its motion.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub from: NodeId,
    pub to: NodeId,
    pub action: usize,
    pub kind: ActionKind,
    pub path: MotionPath,
    pub effort_s: f64,
    pub world_before: WorldState,
    pub world_after: WorldState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub steps: Vec<Step>,
    pub c_star: f64,
}

impl Incumbent {
    /// Graph path as node ids; empty plans hold just the entry node.
    pub fn nodes(&self, entry: NodeId) -> Vec<NodeId> {
        let mut v = vec![self.steps.first().map_or(entry, |s| s.from)];
        v.extend(self.steps.iter().map(|s| s.to));
        v
    }

    /// Concatenated trajectory; `None` for an empty plan.
    pub fn t_star(&self) -> Option<MotionPath> {
        let mut it = self.steps.iter();
        let first = it.next()?.path.clone();
        Some(it.fold(first, |acc, s| acc.concat(&s.path)))
    }

    pub fn uses(&self, kind: ActionKind) -> bool {
        self.steps.iter().any(|s| s.kind == kind)
    }

    pub fn final_world(&self) -> Option<&WorldState> {
        self.steps.last().map(|s| &s.world_after)
    }

    /// JSON lines, one per step, for dumps.
    pub fn to_jsonl(&self, task: &GroundTask) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let line = json!({
                "v": 1,
                "step": i,
                "from": s.from,
                "to": s.to,
                "action": task.actions[s.action].to_string(),
                "effort_s": s.effort_s,
                "waypoints": s.path.waypoints,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out.push_str(&json!({"v": 1, "c_star": self.c_star}).to_string());
        out.push('\n');
        out
    }
}

struct Outcome {
    path: MotionPath,
    world: WorldState,
}

fn hash_of<T: Hash>(x: &T) -> u64 {
    let mut h = DefaultHasher::new();
    x.hash(&mut h);
    h.finish()
}

fn config_bits(c: &Config) -> [u64; 3] {
    [c.x.to_bits(), c.y.to_bits(), c.theta.to_bits()]
}

fn goal_key(g: &MotionGoal) -> u64 {
    hash_of(&serde_json::to_string(g).expect("goal serializes"))
}

pub struct Engine {
    pub task: GroundTask,
    pub goal: Goal,
    pub cfg: EngineConfig,
    pub graph: RGraph,
    /// Movable `(id, pose)` pairs already handled, pose in millimetres/milliradians.
    pub obstacles: BTreeSet<(String, [i64; 3])>,
    pub counts: CheckCounts,
    /// Sweeps spent on the final re-validation gate (not part of `counts`).
    pub gate_counts: CheckCounts,
    pub tp_calls: usize,
    pub episodes: usize,
    /// Grasp approaches that failed at runtime; never offered again.
    pub blocked_approaches: Vec<Config>,
    attempts_left: usize,
    work_left: usize,
    best: Option<Incumbent>,
    trace: Vec<Value>,
    cache: HashMap<u64, Result<Vec<Config>, MotionError>>,
}

impl Engine {
    pub fn new(task: GroundTask, goal: Goal, cfg: EngineConfig) -> Self {
        let graph = RGraph::new(task.init.clone());
        Self {
            task,
            goal,
            graph,
            obstacles: BTreeSet::new(),
            counts: CheckCounts::default(),
            gate_counts: CheckCounts::default(),
            tp_calls: 0,
            episodes: 0,
            blocked_approaches: Vec::new(),
            attempts_left: cfg.max_attempts.max(1),
            work_left: 0,
            best: None,
            trace: Vec::new(),
            cache: HashMap::new(),
            cfg,
        }
    }

    fn log(&mut self, ev: &str, mut body: Value) {
        let t = self.trace.len();
        if let Value::Object(m) = &mut body {
            m.insert("v".into(), json!(1));
            m.insert("t".into(), json!(t));
            m.insert("ev".into(), json!(ev));
        }
        self.trace.push(body);
    }

    /// Appends a caller record to the engine trace.
    pub fn note(&mut self, ev: &str, body: Value) {
        self.log(ev, body);
    }

    /// Engine trace as JSON lines.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for v in &self.trace {
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }

    pub fn trace(&self) -> &[Value] {
        &self.trace
    }

    fn spend(&mut self) -> bool {
        if self.work_left == 0 {
            return false;
        }
        self.work_left -= 1;
        true
    }

    fn fail_attempt(&mut self, why: &str) {
        self.attempts_left = self.attempts_left.saturating_sub(1);
        let left = self.attempts_left;
        self.log("attempt_failed", json!({"reason": why, "attempts_left": left}));
    }

    fn exhausted(&self) -> bool {
        self.attempts_left == 0 || self.work_left == 0
    }

    fn tp(&mut self, s0: &State, goal: &Goal) -> Option<Plan> {
        if !self.spend() {
            return None;
        }
        self.tp_calls += 1;
        let r = Planner::new(&self.task, goal.clone(), PlannerConfig::default()).tp(s0);
        let len = r.as_ref().ok().map(|p| p.len());
        self.log("tp", json!({"from": self.task.describe(s0), "plan_len": len}));
        r.ok()
    }

    /// Plans from the initial state and world.
    pub fn tmp(&mut self, world: &WorldState) -> Result<Incumbent, Failure> {
        let root = self.graph.root();
        self.graph.node_mut(root).geom = Some(world.clone());
        self.solve_from(root, world)
    }

    /// Plans from `entry` in geometric context `ctx`; the graph, obstacle
    /// ledger and motion cache persist across calls.
    pub fn solve_from(&mut self, entry: NodeId, ctx: &WorldState) -> Result<Incumbent, Failure> {
        self.attempts_left = self.cfg.max_attempts.max(1);
        self.work_left = self.cfg.work_per_attempt * self.attempts_left;
        self.best = None;
        let s0 = self.graph.node(entry).state.clone();
        let goal = self.goal.clone();
        let Some(plan) = self.tp(&s0, &goal) else {
            self.log("failure", json!({"reason": "unsolvable_task"}));
            return Err(Failure::UnsolvableTask);
        };
        let ids = self
            .graph
            .insert_plan(&self.task, &plan)
            .expect("a fresh planner result replays and is simple");
        self.log("graph", json!({"nodes": self.graph.node_count(), "edges": self.graph.edge_count()}));
        self.seed(&ids, ctx);
        let mut stack = Vec::new();
        self.traverse(entry, ctx, 0.0, &mut stack);
        match self.best.take() {
            Some(inc) => {
                let ok = self.gate(&inc);
                self.log("final_gate", json!({"valid": ok, "c_star": inc.c_star}));
                if ok {
                    Ok(inc)
                } else {
                    Err(Failure::AttemptsExhausted)
                }
            }
            None => {
                self.log("failure", json!({"reason": "attempts_exhausted"}));
                Err(Failure::AttemptsExhausted)
            }
        }
    }

    /// Re-validates every step eagerly against the world it ran in.
    fn gate(&mut self, inc: &Incumbent) -> bool {
        let step = self.cfg.planner.sweep_m;
        let mut counts = CheckCounts::default();
        let mut bad = None;
        for (k, s) in inc.steps.iter().enumerate() {
            if let PathCheck::FirstCollision { hit, segment } =
                check_configs(&s.path.configs(), &s.world_before, step, &mut counts)
            {
                bad = Some((k, hit, segment));
                break;
            }
        }
        self.gate_counts.add(&counts);
        if let Some((k, hit, segment)) = &bad {
            self.log("gate_rejected", json!({"step": k, "hit": hit, "segment": segment}));
        }
        bad.is_none()
    }

    /// Incumbent from the first symbolic plan, edges taken in order.
    fn seed(&mut self, ids: &[NodeId], ctx: &WorldState) {
        let mut world = ctx.clone();
        let mut steps = Vec::new();
        let mut cost = 0.0;
        for w in ids.windows(2) {
            let mut outs = self.realize(w[0], w[1], &world, false);
            if outs.is_empty() {
                self.log("seed", json!({"complete": false}));
                return;
            }
            let o = outs.swap_remove(0);
            cost += o.path.effort_s;
            steps.push(self.step(w[0], w[1], o.path, world.clone(), o.world.clone()));
            world = o.world;
        }
        if self.goal.satisfied_by(&self.graph.node(*ids.last().expect("non-empty")).state) {
            self.log("incumbent", json!({"c_star": cost, "len": steps.len(), "seed": true}));
            self.best = Some(Incumbent { steps, c_star: cost });
        }
    }

    fn step(&self, from: NodeId, to: NodeId, path: MotionPath, before: WorldState, after: WorldState) -> Step {
        let action = self.graph.edge(from, to).expect("edge exists").action;
        Step {
            from,
            to,
            action,
            kind: ActionKind::from_schema(&self.task.actions[action].name),
            effort_s: path.effort_s,
            path,
            world_before: before,
            world_after: after,
        }
    }

    fn c_star(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.c_star)
    }

    fn traverse(&mut self, v: NodeId, ctx: &WorldState, cost: f64, stack: &mut Vec<Step>) {
        let mut tried: BTreeSet<NodeId> = BTreeSet::new();
        loop {
            if self.exhausted() {
                return;
            }
            let next = self
                .graph
                .children(v)
                .iter()
                .copied()
                .filter(|c| !tried.contains(c))
                .map(|c| (self.estimate(v, c, ctx), c))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            let Some((est, child)) = next else {
                return;
            };
            tried.insert(child);
            if cost + est >= self.c_star() {
                // estimates are lower bounds; nothing below can beat c*
                self.log("prune", json!({"node": v, "child": child, "bound": cost + est}));
                continue;
            }
            let outs = self.realize(v, child, ctx, true);
            for o in outs {
                let new_cost = cost + o.path.effort_s;
                if new_cost >= self.c_star() {
                    self.log("prune", json!({"node": v, "child": child, "cost": new_cost}));
                    continue;
                }
                stack.push(self.step(v, child, o.path, ctx.clone(), o.world.clone()));
                if self.goal.satisfied_by(&self.graph.node(child).state) {
                    self.log("incumbent", json!({"c_star": new_cost, "len": stack.len()}));
                    self.best = Some(Incumbent {
                        steps: stack.clone(),
                        c_star: new_cost,
                    });
                } else {
                    self.traverse(child, &o.world, new_cost, stack);
                }
                stack.pop();
            }
        }
    }

    /// Straight-line lower bound on an edge's effort.
    fn estimate(&self, v: NodeId, child: NodeId, ctx: &WorldState) -> f64 {
        let e = self.graph.edge(v, child).expect("edge exists");
        let act = &self.task.actions[e.action];
        let kind = ActionKind::from_schema(&act.name);
        let r = &ctx.robot;
        let here = r.pose;
        let tol = self.cfg.planner.pos_tol;
        let d = match kind {
            ActionKind::MoveBase => act.args.last().map_or(0.0, |t| {
                if let Some(m) = ctx.movable(t) {
                    // approach poses sit within this distance of the object origin
                    let reach = r.radius + 2.0 * m.footprint.max_radius() + crate::world::APPROACH_CLEARANCE;
                    (here.dist(&m.pose) - reach - tol).max(0.0)
                } else {
                    match ctx.anchor(t) {
                        Some(Anchor::Pose(c)) => (here.dist(c) - tol).max(0.0),
                        Some(Anchor::Region(p)) if !p.contains(here.xy()) => {
                            p.dist_to_boundary(here.xy())
                        }
                        _ => 0.0,
                    }
                }
            }),
            _ => 0.0,
        };
        d / r.speed_mps + kind.surcharge(r)
    }

    fn approaches(&self, ctx: &WorldState, id: &str) -> Vec<Config> {
        let Some(o) = ctx.movable(id) else {
            return Vec::new();
        };
        let Ok(gs) = crate::world::find_grasps(o, ctx.robot.gripper_width) else {
            return Vec::new();
        };
        let mut out: Vec<Config> = Vec::new();
        for g in gs {
            let c = g.approach_config(o, ctx.robot.radius);
            let mut probe = ctx.clone();
            probe.set_robot(c);
            let (tol, ang) = (self.cfg.planner.pos_tol, self.cfg.planner.ang_tol);
            let blocked = self.blocked_approaches.iter().any(|b| b.within(&c, tol, ang));
            if !blocked && probe.first_hit(&c, true).is_none() {
                out.push(c);
            }
        }
        out
    }

    /// Motion targets for an edge: one per geometric outcome.
    fn targets(&mut self, action: usize, ctx: &WorldState, seed: u64) -> Vec<MotionGoal> {
        let act = self.task.actions[action].clone();
        let kind = ActionKind::from_schema(&act.name);
        let here = ctx.robot.pose;
        let p = &self.cfg.planner;
        match kind {
            ActionKind::MoveBase => {
                let Some(t) = act.args.last() else {
                    return Vec::new();
                };
                if ctx.movable(t).is_some() {
                    let a = self.approaches(ctx, t);
                    return if a.is_empty() { Vec::new() } else { vec![MotionGoal::Poses(a)] };
                }
                match ctx.anchor(t) {
                    Some(Anchor::Pose(c)) => vec![MotionGoal::pose(*c)],
                    Some(Anchor::Region(r)) => vec![MotionGoal::Region(r.clone())],
                    None => Vec::new(),
                }
            }
            ActionKind::Pick => {
                if ctx.held.is_some() {
                    return Vec::new();
                }
                let Some(o) = act.args.iter().find(|a| ctx.movable(a).is_some()) else {
                    return Vec::new();
                };
                let a = self.approaches(ctx, o);
                if a.iter().any(|c| here.within(c, p.pos_tol, p.ang_tol)) {
                    vec![MotionGoal::pose(here)]
                } else if a.is_empty() {
                    Vec::new()
                } else {
                    vec![MotionGoal::Poses(a)]
                }
            }
            ActionKind::Place => {
                let Some(h) = ctx.held.clone() else {
                    return Vec::new();
                };
                if !act.args.contains(&h.id) {
                    return Vec::new();
                }
                let o = ctx.movable(&h.id).expect("held object exists").clone();
                let region = act.args.last().and_then(|t| ctx.anchor(t)).cloned();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let back = h.rel.inverse();
                let mut out = Vec::new();
                let mut picked: Vec<Config> = Vec::new();
                for _ in 0..self.cfg.placements {
                    let accept = |pose: &Config| {
                        let in_region = match &region {
                            Some(Anchor::Region(r)) => r.contains(pose.xy()),
                            Some(Anchor::Pose(c)) => pose.dist(c) <= 0.5,
                            None => true,
                        };
                        let r = pose.compose(&back);
                        let mut w = ctx.clone();
                        w.set_robot(r);
                        in_region
                            && !picked.iter().any(|q| q.dist(pose) < 1e-6)
                            && w.first_hit(&r, true).is_none()
                    };
                    match ctx.sample_placement_with(&o, &mut rng, self.cfg.place_radius_m, crate::world::SAMPLE_TRIES, accept) {
                        Ok(pose) => {
                            picked.push(pose);
                            out.push(MotionGoal::pose(pose.compose(&back)));
                        }
                        Err(_) => break,
                    }
                }
                out
            }
            ActionKind::MoveArm | ActionKind::Symbolic => vec![MotionGoal::pose(here)],
        }
    }

    fn motion(
        &mut self,
        key_edge: usize,
        start: &Config,
        goal: &MotionGoal,
        ctx: &WorldState,
        obstacles: Obstacles,
    ) -> Option<Result<Vec<Config>, MotionError>> {
        let eager = self.cfg.eager;
        let key = hash_of(&(
            key_edge,
            config_bits(start),
            goal_key(goal),
            ctx.fingerprint(),
            obstacles == Obstacles::All,
            eager,
        ));
        if let Some(r) = self.cache.get(&key) {
            return Some(r.clone());
        }
        if !self.spend() {
            return None;
        }
        self.episodes += 1;
        let mut params = self.cfg.planner.clone();
        params.seed ^= key;
        let mut ep = Episode::new(ctx, &params, eager, obstacles);
        let r = ep.plan_valid(start, goal);
        self.counts.add(&ep.counts);
        self.log(
            "motion",
            json!({
                "edge": key_edge,
                "probe": obstacles == Obstacles::StaticOnly,
                "ok": r.is_ok(),
                "point_checks": ep.counts.point_checks,
                "segment_checks": ep.counts.segment_checks,
            }),
        );
        self.cache.insert(key, r.clone());
        Some(r)
    }

    /// Movables touched anywhere along `configs`, in first-contact order.
    fn movable_contacts(&mut self, configs: &[Config], ctx: &WorldState) -> Vec<String> {
        let step = self.cfg.planner.sweep_m;
        let mut out: Vec<String> = Vec::new();
        let segs: Vec<(Config, Config)> = if configs.len() == 1 {
            vec![(configs[0], configs[0])]
        } else {
            configs.windows(2).map(|w| (w[0], w[1])).collect()
        };
        for (a, b) in segs {
            self.counts.segment_checks += 1;
            self.counts.sweep_m += a.dist(&b);
            let n = ctx.sweep_intervals(&a, &b, step);
            for i in 0..=n {
                for id in ctx.movables_hit(&a.lerp(&b, i as f64 / n as f64)) {
                    if !out.iter().any(|x| x == id) {
                        out.push(id.to_string());
                    }
                }
            }
        }
        out
    }

    fn realize(&mut self, v: NodeId, child: NodeId, ctx: &WorldState, explore: bool) -> Vec<Outcome> {
        let action = self.graph.edge(v, child).expect("edge exists").action;
        let edge_id = self.graph.edge_index(v, child).expect("edge exists");
        let kind = ActionKind::from_schema(&self.task.actions[action].name);
        let start = ctx.robot.pose;
        let seed = self.cfg.planner.seed ^ hash_of(&(edge_id, config_bits(&start), ctx.fingerprint()));
        let targets = self.targets(action, ctx, seed);
        if targets.is_empty() {
            self.fail_attempt("no_target");
            return Vec::new();
        }
        let surcharge = kind.surcharge(&ctx.robot);
        let mut outs = Vec::new();
        for goal in targets {
            if explore && ctx.movables.iter().any(|m| Some(m.id.as_str()) != ctx.held_id()) {
                if let Some(Ok(probe)) = self.motion(edge_id, &start, &goal, ctx, Obstacles::StaticOnly) {
                    for id in self.movable_contacts(&probe, ctx) {
                        let pose = ctx.movable(&id).expect("contact is a movable").pose;
                        let q = [
                            (pose.x * 1000.0).round() as i64,
                            (pose.y * 1000.0).round() as i64,
                            (pose.theta * 1000.0).round() as i64,
                        ];
                        if self.obstacles.insert((id.clone(), q)) {
                            self.log("collision", json!({"node": v, "child": child, "object": id, "pose": pose}));
                            self.generate_subtasks(v, child, &id, ctx);
                        }
                    }
                }
            }
            match self.motion(edge_id, &start, &goal, ctx, Obstacles::All) {
                Some(Ok(configs)) => {
                    let path = MotionPath::timed(action, &configs, &ctx.robot, surcharge);
                    let mut world = ctx.clone();
                    world.set_robot(path.end());
                    match kind {
                        ActionKind::Pick => {
                            let o = self.task.actions[action]
                                .args
                                .iter()
                                .find(|a| ctx.movable(a).is_some())
                                .expect("pick target resolved")
                                .clone();
                            world.grasp(&o);
                        }
                        ActionKind::Place => world.release(),
                        _ => {}
                    }
                    outs.push(Outcome { path, world });
                }
                Some(Err(_)) => self.fail_attempt("no_path"),
                None => return outs,
            }
        }
        outs
    }

    /// Splices relocation branches for `obj` between `v` and `child`.
    pub fn generate_subtasks(&mut self, v: NodeId, child: NodeId, obj: &str, ctx: &WorldState) {
        if self.task.object_type(obj).is_none() && !self.task.actions.iter().any(|a| a.args.iter().any(|x| x == obj)) {
            self.log("subtasks", json!({"object": obj, "branches": 0, "reason": "no_symbol"}));
            return;
        }
        if !ctx.movable(obj).is_some_and(|m| m.graspable) {
            self.log("subtasks", json!({"object": obj, "branches": 0, "reason": "not_graspable"}));
            return;
        }
        let vs = self.graph.node(v).state.clone();
        let cs = self.graph.node(child).state.clone();
        let child_goal = self.task.state_goal(&cs);
        let candidates: Vec<usize> = (0..self.task.actions.len())
            .filter(|a| self.task.actions[*a].args.iter().any(|x| x == obj))
            .collect();
        let mut effects: BTreeSet<State> = BTreeSet::new();
        let mut branches = 0;
        for a in candidates {
            if self.exhausted() {
                break;
            }
            let act = &self.task.actions[a];
            let pre = Goal::new(act.precon_pos.clone(), act.precon_neg.clone());
            let Some(reach) = self.tp(&vs, &pre) else {
                continue;
            };
            let Some(s) = self.task.apply(reach.last(), a) else {
                continue;
            };
            if s == vs || s == cs || !effects.insert(s.clone()) {
                continue;
            }
            let sg = self.task.state_goal(&s);
            let Some(before) = self.tp(&vs, &sg) else {
                self.fail_attempt("splice_unsolvable");
                continue;
            };
            let Some(after) = self.tp(&s, &child_goal) else {
                self.fail_attempt("splice_unsolvable");
                continue;
            };
            let mut trial = self.graph.clone();
            let ok = trial.splice(&self.task, &before).is_ok() && trial.splice(&self.task, &after).is_ok();
            if ok {
                self.graph = trial;
                branches += 1;
                let names = before.action_names(&self.task);
                let tail = after.action_names(&self.task);
                self.log("splice", json!({"object": obj, "before": names, "after": tail}));
            } else {
                self.log("splice_rejected", json!({"object": obj}));
            }
        }
        self.log("subtasks", json!({"object": obj, "branches": branches}));
    }
}
