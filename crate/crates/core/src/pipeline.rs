//! Plan and run a loaded scenario end to end.

use serde_json::json;

use crate::engine::{Engine, Failure, Incumbent};
use crate::exec::{execute, Entry, ExecutionTrace};
use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Input(#[from] ScenarioError),
    #[error("{0}")]
    Plan(Failure),
}

/// Engine state after planning, with one completion per start condition.
pub struct Planned {
    pub engine: Engine,
    pub incumbent: Incumbent,
    pub entries: Vec<Entry>,
}

/// Plans from the initial state, then pre-plans a completion for every
/// declared condition so execution can dispatch without replanning.
pub fn plan(sc: &Scenario) -> Result<Planned, RunError> {
    let mut engine = Engine::new(sc.task.clone(), sc.task.goal.clone(), sc.engine.clone());
    let incumbent = engine.tmp(&sc.world).map_err(RunError::Plan)?;
    let root = engine.graph.root();
    let mut entries = vec![Entry {
        name: "init".into(),
        node: root,
        plan: incumbent.clone(),
    }];
    for c in &sc.conditions {
        let (state, world) = sc.condition(&c.name)?;
        let node = engine.graph.ensure_node(&state);
        if node == root && world == sc.world {
            entries.push(Entry {
                name: c.name.clone(),
                node,
                plan: incumbent.clone(),
            });
            continue;
        }
        engine.graph.node_mut(node).geom = Some(world.clone());
        match engine.solve_from(node, &world) {
            Ok(plan) => entries.push(Entry {
                name: c.name.clone(),
                node,
                plan,
            }),
            Err(f) => engine.note("condition_unplanned", json!({"condition": c.name, "reason": f})),
        }
    }
    Ok(Planned {
        engine,
        incumbent,
        entries,
    })
}

/// Plans, then executes against the scenario timeline from its runtime
/// condition (or the initial state).
pub fn run(sc: &Scenario) -> Result<(Planned, ExecutionTrace), RunError> {
    let mut planned = plan(sc)?;
    let (state, world) = match &sc.runtime_condition {
        Some(name) => sc.condition(name)?,
        None => (sc.task.init.clone(), sc.world.clone()),
    };
    // the entry for the condition that holds is reported first
    let mut entries = planned.entries.clone();
    if let Some(name) = &sc.runtime_condition {
        entries.sort_by_key(|e| &e.name != name);
    }
    let trace = execute(
        &mut planned.engine,
        entries,
        &state,
        &world,
        &sc.timeline,
    );
    Ok((planned, trace))
}
