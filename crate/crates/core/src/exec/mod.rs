//! Deterministic execution against a scripted event timeline, with
//! conditional dispatch and online replanning.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::engine::{Engine, Failure, Incumbent, Step};
use crate::motion::{check_configs, CheckCounts, PathCheck};
use crate::pddl::State;
use crate::rgraph::NodeId;
use crate::world::{ActionKind, Config, MotionPath, MovableObject, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// Simulated seconds since execution began.
    TimeS(f64),
    /// After this many actions have completed.
    AfterAction(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    ObstacleAppears { object: MovableObject },
    /// The `action`-th executed action (0-based) fails; its effects roll back.
    ActionFailure { action: usize },
    ObjectMoved { id: String, pose: Config },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub trigger: Trigger,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timeline {
    pub events: Vec<Event>,
}

impl Timeline {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let t: Timeline = serde_json::from_str(text).map_err(|e| e.to_string())?;
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<(), String> {
        let mut last_t = f64::NEG_INFINITY;
        let mut last_k = 0usize;
        for e in &self.events {
            match e.trigger {
                Trigger::TimeS(t) => {
                    if t.is_nan() || t < last_t {
                        return Err("time triggers must be nondecreasing".into());
                    }
                    last_t = t;
                }
                Trigger::AfterAction(k) => {
                    if k < last_k {
                        return Err("action triggers must be nondecreasing".into());
                    }
                    last_k = k;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "reason", rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure(Failure),
}

/// A stretch of motion as actually driven, with the world it ran in.
#[derive(Debug, Clone, PartialEq)]
pub struct Driven {
    pub path: MotionPath,
    pub world: WorldState,
}

#[derive(Debug, Clone)]
pub struct ExecutionTrace {
    pub entries: Vec<Value>,
    pub outcome: Outcome,
    pub effort_s: f64,
    pub replans: usize,
    pub driven: Vec<Driven>,
    pub final_state: State,
    pub final_world: WorldState,
}

impl ExecutionTrace {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }

    pub fn count(&self, ev: &str) -> usize {
        self.entries.iter().filter(|e| e["ev"] == ev).count()
    }

    /// Eagerly re-sweeps everything driven against the world it ran in.
    pub fn revalidate(&self, step: f64) -> bool {
        let mut counts = CheckCounts::default();
        self.driven
            .iter()
            .all(|d| check_configs(&d.path.configs(), &d.world, step, &mut counts) == PathCheck::Valid)
    }
}

/// A planned completion usable from some node.
#[derive(Debug, Clone)]
pub struct Entry {
    pub name: String,
    pub node: NodeId,
    pub plan: Incumbent,
}

struct Sim<'e> {
    engine: &'e mut Engine,
    entries: Vec<Value>,
    effort: f64,
    sim_t: f64,
    done_actions: usize,
    replans: usize,
    driven: Vec<Driven>,
    fired: Vec<bool>,
}

impl Sim<'_> {
    fn log(&mut self, ev: &str, mut body: Value) {
        let t = self.entries.len();
        if let Value::Object(m) = &mut body {
            m.insert("v".into(), json!(1));
            m.insert("t".into(), json!(t));
            m.insert("ev".into(), json!(ev));
            m.insert("sim_s".into(), json!(self.sim_t));
            m.insert("effort_s".into(), json!(self.effort));
        }
        self.entries.push(body);
    }
}

/// Candidate completions starting at `node` that fit the runtime state and
/// current geometry, cheapest remaining effort first.
pub fn dispatch<'a>(
    node: NodeId,
    runtime: &State,
    world: &WorldState,
    plans: &'a [Incumbent],
    engine: &Engine,
) -> Option<(&'a Incumbent, usize)> {
    let tol = engine.cfg.planner.pos_tol;
    let mut best: Option<(f64, &Incumbent, usize)> = None;
    for p in plans {
        for (k, s) in p.steps.iter().enumerate() {
            if s.from != node || !engine.task.applicable(runtime, s.action) {
                continue;
            }
            let here = world.robot.pose;
            let fits = s.world_before.robot.pose.within(&here, tol, engine.cfg.planner.ang_tol)
                && s.world_before.held_id() == world.held_id();
            if !fits {
                continue;
            }
            let rest: f64 = p.steps[k..].iter().map(|s| s.effort_s).sum();
            if best.as_ref().is_none_or(|(b, _, _)| rest < *b) {
                best = Some((rest, p, k));
            }
        }
    }
    best.map(|(_, p, k)| (p, k))
}

fn apply_event(world: &mut WorldState, kind: &EventKind) {
    match kind {
        EventKind::ObstacleAppears { object } => world.put_movable(object.clone()),
        EventKind::ObjectMoved { id, pose } => {
            world.set_object_pose(id, *pose);
        }
        EventKind::ActionFailure { .. } => {}
    }
}

fn event_name(kind: &EventKind) -> &'static str {
    match kind {
        EventKind::ObstacleAppears { .. } => "obstacle_appears",
        EventKind::ActionFailure { .. } => "action_failure",
        EventKind::ObjectMoved { .. } => "object_moved",
    }
}

/// Trajectory prefix of `path` up to elapsed time `t`.
fn prefix(path: &MotionPath, t: f64) -> MotionPath {
    let t0 = path.waypoints[0].t;
    let mut wps: Vec<_> = path.waypoints.iter().copied().filter(|w| w.t - t0 < t).collect();
    let cut = path.config_at(t);
    if t > 0.0 {
        wps.push(crate::world::TimedConfig { t: t0 + t, c: cut });
    }
    if wps.is_empty() {
        wps.push(path.waypoints[0]);
    }
    let mut p = MotionPath {
        action: path.action,
        waypoints: wps,
        validated: path.validated.clone(),
        effort_s: 0.0,
    };
    p.effort_s = p.duration();
    p
}

/// Remaining configurations of `path` from elapsed time `t`.
fn suffix_configs(path: &MotionPath, t: f64) -> Vec<Config> {
    let t0 = path.waypoints[0].t;
    let mut out = vec![path.config_at(t)];
    out.extend(path.waypoints.iter().filter(|w| w.t - t0 > t).map(|w| w.c));
    out
}

/// Executes from `entries` (the entry whose node matches `start_state` is
/// used) against `timeline`.
pub fn execute(
    engine: &mut Engine,
    plans: Vec<Entry>,
    start_state: &State,
    start_world: &WorldState,
    timeline: &Timeline,
) -> ExecutionTrace {
    let max_attempts = engine.cfg.max_attempts.max(1);
    let sweep = engine.cfg.planner.sweep_m;
    let mut sim = Sim {
        engine,
        entries: Vec::new(),
        effort: 0.0,
        sim_t: 0.0,
        done_actions: 0,
        replans: 0,
        driven: Vec::new(),
        fired: vec![false; timeline.events.len()],
    };
    let mut world = start_world.clone();
    let mut incumbents: Vec<Incumbent> = plans.iter().map(|e| e.plan.clone()).collect();
    let Some(mut node) = sim.engine.graph.find(start_state) else {
        sim.log("outcome", json!({"outcome": "failure", "reason": "unknown_start_state"}));
        return finish(sim, Outcome::Failure(Failure::UnsolvableTask), start_state.clone(), world);
    };
    if let Some(e) = plans.iter().find(|e| e.node == node) {
        let name = e.name.clone();
        sim.log("branch_chosen", json!({"node": node, "condition": name}));
    }

    let outcome = 'run: loop {
        let state = sim.engine.graph.node(node).state.clone();
        if sim.engine.goal.satisfied_by(&state) {
            let clear = world.first_hit(&world.robot.pose, true).is_none();
            break if clear { Outcome::Success } else { Outcome::Failure(Failure::AttemptsExhausted) };
        }
        // events due between actions
        if let Some(ev) = due_after_action(timeline, &sim.fired, sim.done_actions, sim.sim_t) {
            sim.fired[ev] = true;
            let kind = timeline.events[ev].kind.clone();
            apply_event(&mut world, &kind);
            let blocked = remaining_blocked(&incumbents, node, &world, None, sweep, sim.engine);
            sim.log("event", json!({"kind": event_name(&kind), "blocks_plan": blocked}));
            if blocked {
                match replan(&mut sim, node, &world, "event", max_attempts) {
                    Some(inc) => incumbents = vec![inc],
                    None => break 'run Outcome::Failure(Failure::AttemptsExhausted),
                }
            }
            continue;
        }
        let Some((plan, k)) = dispatch(node, &state, &world, &incumbents, sim.engine) else {
            sim.log("no_applicable_branch", json!({"node": node}));
            match replan(&mut sim, node, &world, "no_branch", max_attempts) {
                Some(inc) => {
                    incumbents = vec![inc];
                    continue;
                }
                None => break 'run Outcome::Failure(Failure::AttemptsExhausted),
            }
        };
        let step: Step = plan.steps[k].clone();
        let options = sim.engine.graph.children(node).len();
        if options > 1 {
            let name = sim.engine.task.actions[step.action].to_string();
            sim.log("branch_chosen", json!({"node": node, "action": name, "options": options}));
        }
        let name = sim.engine.task.actions[step.action].to_string();
        sim.log("action_started", json!({"action": name, "node": node}));

        // a timed event may interrupt this action
        let dur = step.path.duration();
        let interrupt = timeline.events.iter().enumerate().find(|(i, e)| {
            !sim.fired[*i]
                && matches!(e.trigger, Trigger::TimeS(t) if t < sim.sim_t + dur)
                && !matches!(e.kind, EventKind::ActionFailure { .. })
        });
        if let Some((i, e)) = interrupt {
            let Trigger::TimeS(at) = e.trigger else { unreachable!() };
            let tau = (at - sim.sim_t).max(0.0);
            let kind = e.kind.clone();
            sim.fired[i] = true;
            // drive up to the event
            let part = prefix(&step.path, tau);
            sim.driven.push(Driven {
                path: part.clone(),
                world: world.clone(),
            });
            sim.sim_t += tau;
            sim.effort += part.effort_s;
            world.set_robot(part.end());
            apply_event(&mut world, &kind);
            let rest = suffix_configs(&step.path, tau);
            let blocked = remaining_blocked(&incumbents, node, &world, Some(&rest), sweep, sim.engine)
                || world.first_hit(&world.robot.pose, true).is_some();
            sim.log("event", json!({"kind": event_name(&kind), "during": name, "blocks_plan": blocked}));
            if blocked {
                sim.log("action_interrupted", json!({"action": name}));
                match replan(&mut sim, node, &world, "event", max_attempts) {
                    Some(inc) => incumbents = vec![inc],
                    None => break 'run Outcome::Failure(Failure::AttemptsExhausted),
                }
                continue;
            }
            // finish the action along the original path
            let mut tail = step.path.clone();
            let t0 = tail.waypoints[0].t;
            tail.waypoints.retain(|w| w.t - t0 > tau);
            tail.waypoints.insert(0, crate::world::TimedConfig { t: t0 + tau, c: rest[0] });
            tail.effort_s = tail.duration();
            sim.driven.push(Driven {
                path: tail.clone(),
                world: world.clone(),
            });
            sim.sim_t += tail.effort_s;
            sim.effort += tail.effort_s;
            let mut after = step.world_after.clone();
            if let EventKind::ObstacleAppears { object } = &kind {
                after.put_movable(object.clone());
            } else if let EventKind::ObjectMoved { id, pose } = &kind {
                after.set_object_pose(id, *pose);
            }
            world = after;
        } else {
            sim.driven.push(Driven {
                path: step.path.clone(),
                world: world.clone(),
            });
            sim.sim_t += dur;
            sim.effort += step.path.effort_s;
            let failed = timeline.events.iter().enumerate().find(|(i, e)| {
                !sim.fired[*i] && matches!(e.kind, EventKind::ActionFailure { action } if action == sim.done_actions)
            });
            if let Some((i, _)) = failed {
                sim.fired[i] = true;
                // effects roll back: the robot moved, nothing else changed
                world.set_robot(step.path.end());
                if step.kind == ActionKind::Pick {
                    sim.engine.blocked_approaches.push(step.path.end());
                }
                sim.done_actions += 1;
                sim.log("action_failed", json!({"action": name}));
                match replan(&mut sim, node, &world, "action_failure", max_attempts) {
                    Some(inc) => incumbents = vec![inc],
                    None => break 'run Outcome::Failure(Failure::AttemptsExhausted),
                }
                continue;
            }
            world = merge_world(&step.world_after, &world, &step.world_before);
        }
        sim.done_actions += 1;
        node = step.to;
        sim.log("action_finished", json!({"action": name, "node": node}));
    };
    let state = sim.engine.graph.node(node).state.clone();
    let tag = match outcome {
        Outcome::Success => json!({"outcome": "success"}),
        Outcome::Failure(f) => json!({"outcome": "failure", "reason": f}),
    };
    sim.log("outcome", tag);
    finish(sim, outcome, state, world)
}

/// World after a step, keeping objects that appeared since it was planned.
fn merge_world(after: &WorldState, now: &WorldState, planned_before: &WorldState) -> WorldState {
    let mut w = after.clone();
    for m in &now.movables {
        let before = planned_before.movable(&m.id);
        if before != Some(m) && Some(m.id.as_str()) != after.held_id() {
            // an event touched it; planned effects on it are not expected
            if after.movable(&m.id) == before {
                w.put_movable(m.clone());
            }
        }
    }
    w
}

fn finish(sim: Sim<'_>, outcome: Outcome, final_state: State, final_world: WorldState) -> ExecutionTrace {
    ExecutionTrace {
        entries: sim.entries,
        outcome,
        effort_s: sim.effort,
        replans: sim.replans,
        driven: sim.driven,
        final_state,
        final_world,
    }
}

fn due_after_action(tl: &Timeline, fired: &[bool], done: usize, now: f64) -> Option<usize> {
    tl.events.iter().enumerate().position(|(i, e)| {
        !fired[i]
            && !matches!(e.kind, EventKind::ActionFailure { .. })
            && match e.trigger {
                Trigger::AfterAction(k) => k <= done,
                Trigger::TimeS(t) => t <= now,
            }
    })
}

/// Does the world change invalidate the cheapest remaining completion?
fn remaining_blocked(
    plans: &[Incumbent],
    node: NodeId,
    world: &WorldState,
    current_rest: Option<&[Config]>,
    sweep: f64,
    engine: &Engine,
) -> bool {
    let mut counts = CheckCounts::default();
    if let Some(rest) = current_rest {
        if check_configs(rest, world, sweep, &mut counts) != PathCheck::Valid {
            return true;
        }
    }
    let state = engine.graph.node(node).state.clone();
    let Some((p, k)) = dispatch(node, &state, world, plans, engine).or_else(|| {
        // mid-action: the robot has left the step's start pose
        plans.iter().find_map(|p| p.steps.iter().position(|s| s.from == node).map(|k| (p, k)))
    }) else {
        return true;
    };
    let skip = usize::from(current_rest.is_some());
    for s in p.steps[k + skip..].iter() {
        let mut w = s.world_before.clone();
        for m in &world.movables {
            if w.movable(&m.id).is_none() {
                w.put_movable(m.clone());
            }
        }
        if check_configs(&s.path.configs(), &w, sweep, &mut counts) != PathCheck::Valid {
            return true;
        }
    }
    false
}

fn replan(sim: &mut Sim<'_>, node: NodeId, world: &WorldState, reason: &str, max_attempts: usize) -> Option<Incumbent> {
    let base_seed = sim.engine.cfg.planner.seed;
    while sim.replans < max_attempts {
        sim.replans += 1;
        let attempt = sim.replans;
        sim.engine.cfg.planner.seed = base_seed.wrapping_add(attempt as u64);
        let r = sim.engine.solve_from(node, world);
        sim.engine.cfg.planner.seed = base_seed;
        match r {
            Ok(inc) => {
                sim.log("replan", json!({"attempt": attempt, "reason": reason, "ok": true, "c_star": inc.c_star}));
                return Some(inc);
            }
            Err(f) => {
                sim.log("replan", json!({"attempt": attempt, "reason": reason, "ok": false, "failure": f}));
            }
        }
    }
    None
}
