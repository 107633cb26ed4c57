mod common;

use tamp_core::engine::Failure;
use tamp_core::exec::{ExecutionTrace, Outcome, Timeline};
use tamp_core::pipeline::{self, Planned};
use tamp_core::scenario::Scenario;

fn scenario(name: &str) -> Scenario {
    Scenario::load(&common::fixture(name)).unwrap()
}

fn run(sc: &Scenario) -> (Planned, ExecutionTrace) {
    pipeline::run(sc).unwrap()
}

/// Time actually driven, summed over every stretch, surcharges included.
fn driven_effort(t: &ExecutionTrace) -> f64 {
    t.driven.iter().map(|d| d.path.effort_s).sum()
}

fn events<'a>(t: &'a ExecutionTrace, ev: &str) -> Vec<&'a serde_json::Value> {
    t.entries.iter().filter(|e| e["ev"] == ev).collect()
}

#[test]
fn quiet_timeline_costs_exactly_c_star() {
    for name in ["fetch_obstacle.json", "stay.json", "corridor_fast.json"] {
        let mut sc = scenario(name);
        sc.timeline = Timeline::default();
        let (planned, t) = run(&sc);
        assert_eq!(t.outcome, Outcome::Success, "{name}");
        assert_eq!(t.replans, 0);
        assert!((t.effort_s - planned.incumbent.c_star).abs() < 1e-9, "{name}: {} vs {}", t.effort_s, planned.incumbent.c_star);
        assert!((driven_effort(&t) - t.effort_s).abs() < 1e-9);
        assert!(t.revalidate(0.01));
        assert!(sc.task.goal.satisfied_by(&t.final_state));
    }
}

#[test]
fn obstacle_mid_drive_triggers_one_replan() {
    for seed in 0..3 {
        let mut sc = scenario("fetch_obstacle.json");
        sc.set_seed(seed);
        let (_, t) = run(&sc);
        assert_eq!(t.outcome, Outcome::Success, "seed {seed}");
        assert_eq!(t.count("replan"), 1, "seed {seed}");
        assert_eq!(t.replans, 1);
        let ev = events(&t, "event");
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0]["kind"], "obstacle_appears");
        assert_eq!(ev[0]["blocks_plan"], true);
        assert_eq!(ev[0]["sim_s"], 3.0);
        assert_eq!(t.count("action_interrupted"), 1);
        assert!(t.revalidate(0.01));
        assert!((driven_effort(&t) - t.effort_s).abs() < 1e-9);
        assert!(sc.task.goal.satisfied_by(&t.final_state));
        assert_eq!(t.final_world.held_id(), Some("target"));
    }
}

#[test]
fn failed_pick_regrasps() {
    let (_, t) = run(&scenario("fetch_regrasp.json"));
    assert_eq!(t.outcome, Outcome::Success);
    assert_eq!(t.count("action_failed"), 1);
    assert_eq!(t.count("replan"), 1);
    assert!(t.revalidate(0.01));
    assert_eq!(t.final_world.held_id(), Some("target"));
}

#[test]
fn runtime_conditions_dispatch_without_replanning() {
    for (name, cond) in [("two_cups_empty.json", "gripper_empty"), ("two_cups_holding.json", "gripper_holding")] {
        let sc = scenario(name);
        let (planned, t) = run(&sc);
        assert_eq!(t.outcome, Outcome::Success, "{name}");
        assert_eq!(t.replans, 0, "{name}");
        assert_eq!(t.count("replan"), 0);
        let first = events(&t, "branch_chosen")[0];
        assert_eq!(first["condition"], cond);
        // both conditions were planned ahead, as distinct graph nodes
        assert_eq!(planned.entries.len(), 3);
        let nodes: std::collections::BTreeSet<_> = planned.entries.iter().map(|e| e.node).collect();
        assert_eq!(nodes.len(), 2);
        assert!(t.revalidate(0.01));
    }
}

#[test]
fn holding_the_wrong_cup_puts_it_down_first() {
    let sc = scenario("two_cups_holding.json");
    let (_, t) = run(&sc);
    let started: Vec<String> = events(&t, "action_started")
        .iter()
        .map(|e| e["action"].as_str().unwrap().to_string())
        .collect();
    let place = started.iter().position(|a| a.starts_with("(place mug")).expect("mug is placed");
    let pick = started.iter().position(|a| a.starts_with("(pick cup")).expect("cup is picked");
    assert!(place < pick, "{started:?}");
}

#[test]
fn blocked_goal_exhausts_attempts() {
    let sc = scenario("blocked_goal.json");
    let (_, t) = run(&sc);
    assert_eq!(t.outcome, Outcome::Failure(Failure::AttemptsExhausted));
    assert_eq!(t.count("replan"), sc.engine.max_attempts);
    assert!(events(&t, "replan").iter().all(|e| e["ok"] == false));
    let last = t.entries.last().unwrap();
    assert_eq!(last["ev"], "outcome");
    assert!(t.revalidate(0.01));
}

#[test]
fn traces_repeat_exactly() {
    for name in ["fetch_obstacle.json", "fetch_regrasp.json", "two_cups_holding.json", "blocked_goal.json"] {
        let sc = scenario(name);
        let (pa, a) = run(&sc);
        let (pb, b) = run(&sc);
        assert_eq!(a.to_jsonl(), b.to_jsonl(), "{name}");
        assert_eq!(pa.engine.trace_jsonl(), pb.engine.trace_jsonl(), "{name}");
    }
}

#[test]
fn timeline_rejects_out_of_order_triggers() {
    let bad = r#"[{"trigger":{"time_s":3.0},"kind":"action_failure","action":0},
                  {"trigger":{"time_s":1.0},"kind":"action_failure","action":1}]"#;
    assert!(Timeline::from_json(bad).is_err());
    let good = r#"[{"trigger":{"after_action":1},"kind":"object_moved","id":"target","pose":[1,2,0]}]"#;
    assert_eq!(Timeline::from_json(good).unwrap().events.len(), 1);
}
