mod common;

use tamp_core::engine::{Engine, Failure, Incumbent};
use tamp_core::motion::{check_configs, CheckCounts, PathCheck};
use tamp_core::scenario::Scenario;
use tamp_core::world::{wrap_angle, ActionKind, Config, MovableObject, Polygon, WorldState};

fn scenario(name: &str) -> Scenario {
    Scenario::load(&common::fixture(name)).unwrap()
}

fn engine(sc: &Scenario) -> Engine {
    Engine::new(sc.task.clone(), sc.task.goal.clone(), sc.engine.clone())
}

/// The fetch world with the crate already standing in the corridor.
fn fetch_with_crate(graspable: bool) -> (Scenario, WorldState) {
    let sc = scenario("fetch_obstacle.json");
    let mut w = sc.world.clone();
    w.put_movable(MovableObject {
        id: "crate".into(),
        footprint: Polygon::rect(-0.25, -0.25, 0.25, 0.25),
        pose: Config::new(4.5, 3.0, 0.0),
        graspable,
        width: 0.5,
    });
    (sc, w)
}

/// Effort recomputed from waypoints: translation plus rotation time plus
/// the action's fixed surcharge.
fn effort_oracle(configs: &[Config], kind: ActionKind, w: &WorldState) -> f64 {
    let r = &w.robot;
    let mut t = 0.0;
    for s in configs.windows(2) {
        let d = (s[1].x - s[0].x).hypot(s[1].y - s[0].y);
        let th = wrap_angle(s[1].theta - s[0].theta).abs();
        t += d / r.speed_mps + th / r.ang_speed_rps;
    }
    t + match kind {
        ActionKind::Pick => r.pick_time_s,
        ActionKind::Place => r.place_time_s,
        ActionKind::MoveArm => r.arm_time_s,
        _ => 0.0,
    }
}

fn check_incumbent(e: &Engine, inc: &Incumbent, entry: usize, world: &WorldState) {
    let mut node = entry;
    let mut total = 0.0;
    let mut pose = world.robot.pose;
    for (k, s) in inc.steps.iter().enumerate() {
        assert_eq!(s.from, node, "step {k} does not continue the chain");
        let edge = e.graph.edge(s.from, s.to).expect("step follows a graph edge");
        assert_eq!(edge.action, s.action);
        assert!(s.path.start().within(&pose, 1e-9, 1e-9), "step {k} starts where the last ended");
        let configs = s.path.configs();
        let oracle = effort_oracle(&configs, s.kind, &s.world_before);
        assert!((s.effort_s - oracle).abs() < 1e-9, "step {k}: {} vs {oracle}", s.effort_s);
        let mut counts = CheckCounts::default();
        assert_eq!(check_configs(&configs, &s.world_before, 0.01, &mut counts), PathCheck::Valid);
        total += s.effort_s;
        pose = s.world_after.robot.pose;
        node = s.to;
    }
    assert!(e.goal.satisfied_by(&e.graph.node(node).state));
    assert!((inc.c_star - total).abs() < 1e-9, "c* {} vs sum {total}", inc.c_star);
}

fn incumbent_costs(e: &Engine) -> Vec<f64> {
    e.trace()
        .iter()
        .filter(|v| v["ev"] == "incumbent")
        .map(|v| v["c_star"].as_f64().unwrap())
        .collect()
}

#[test]
fn goal_at_init_costs_nothing() {
    let sc = scenario("stay.json");
    let mut e = engine(&sc);
    let inc = e.tmp(&sc.world).unwrap();
    assert_eq!(inc.c_star, 0.0);
    assert!(inc.steps.is_empty());
}

#[test]
fn symbolically_unsolvable_task() {
    let sc = scenario("out_of_reach.json");
    let mut e = engine(&sc);
    assert_eq!(e.tmp(&sc.world).unwrap_err(), Failure::UnsolvableTask);
}

#[test]
fn open_fetch_incumbent_is_consistent() {
    let sc = scenario("fetch_obstacle.json");
    let mut e = engine(&sc);
    let inc = e.tmp(&sc.world).unwrap();
    check_incumbent(&e, &inc, e.graph.root(), &sc.world);
    assert!(inc.uses(ActionKind::Pick));
    // no obstacle in the way: straight drive to the approach pose, then pick
    let target = sc.world.movable("target").unwrap().pose;
    let reach = sc.world.robot.radius + 0.2 * 2f64.sqrt();
    let lower = (sc.world.robot.pose.dist(&target) - reach - 0.05) / sc.world.robot.speed_mps + sc.world.robot.pick_time_s;
    assert!(inc.c_star >= lower, "{} below straight-line bound {lower}", inc.c_star);
    e.graph.check(&e.task).unwrap();
}

#[test]
fn graspable_blocker_gets_relocation_branches() {
    let (sc, w) = fetch_with_crate(true);
    let mut e = engine(&sc);
    let plain_edges = {
        let mut p = engine(&sc);
        p.tmp(&sc.world).unwrap();
        p.graph.edge_count()
    };
    let inc = e.tmp(&w).unwrap();
    check_incumbent(&e, &inc, e.graph.root(), &w);
    let subtasks: Vec<_> = e.trace().iter().filter(|v| v["ev"] == "subtasks").collect();
    assert!(!subtasks.is_empty());
    let branches: u64 = subtasks.iter().map(|v| v["branches"].as_u64().unwrap()).sum();
    let splices = e.trace().iter().filter(|v| v["ev"] == "splice").count() as u64;
    assert!(branches > 0);
    assert_eq!(branches, splices);
    assert!(e.graph.edge_count() > plain_edges);
    // every edge still replays, nothing closes a cycle, states are unique
    e.graph.check(&e.task).unwrap();
    let crate_edges = e
        .graph
        .edges()
        .filter(|(_, _, g)| e.task.actions[g.action].args.iter().any(|a| a == "crate"))
        .count();
    assert!(crate_edges > 0);
}

#[test]
fn non_graspable_blocker_gets_no_branches() {
    let (sc, w) = fetch_with_crate(false);
    let mut e = engine(&sc);
    let inc = e.tmp(&w).unwrap();
    check_incumbent(&e, &inc, e.graph.root(), &w);
    assert!(!inc.steps.iter().any(|s| e.task.actions[s.action].args.iter().any(|a| a == "crate")));
    let subtasks: Vec<_> = e.trace().iter().filter(|v| v["ev"] == "subtasks").collect();
    assert!(!subtasks.is_empty());
    for v in subtasks {
        assert_eq!(v["branches"], 0);
        assert_eq!(v["reason"], "not_graspable");
    }
    assert_eq!(e.trace().iter().filter(|v| v["ev"] == "splice").count(), 0);
}

#[test]
fn incumbent_cost_only_decreases() {
    for seed in 0..5 {
        let (mut sc, w) = fetch_with_crate(true);
        sc.set_seed(seed);
        let mut e = engine(&sc);
        let inc = e.tmp(&w).unwrap();
        let costs = incumbent_costs(&e);
        assert!(!costs.is_empty());
        for pair in costs.windows(2) {
            assert!(pair[1] < pair[0], "seed {seed}: {costs:?}");
        }
        assert_eq!(*costs.last().unwrap(), inc.c_star);
    }
}

#[test]
fn planning_is_deterministic() {
    let (sc, w) = fetch_with_crate(true);
    let mut a = engine(&sc);
    let mut b = engine(&sc);
    let ia = a.tmp(&w).unwrap();
    let ib = b.tmp(&w).unwrap();
    assert_eq!(ia, ib);
    assert_eq!(a.trace_jsonl(), b.trace_jsonl());
    assert_eq!(a.graph, b.graph);
}

#[test]
fn eager_and_lazy_agree_on_validity() {
    let (sc, w) = fetch_with_crate(true);
    for eager in [false, true] {
        let mut cfg = sc.engine.clone();
        cfg.eager = eager;
        let mut e = Engine::new(sc.task.clone(), sc.task.goal.clone(), cfg);
        let inc = e.tmp(&w).unwrap();
        check_incumbent(&e, &inc, e.graph.root(), &w);
    }
}
