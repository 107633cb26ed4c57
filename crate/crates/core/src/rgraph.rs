//! Reachability graph: symbolic states as nodes, ground actions as edges
//! annotated with motion paths and efforts.

use std::collections::{BTreeSet, HashMap};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::ff::Plan;
use crate::pddl::{GroundTask, State};
use crate::world::{MotionPath, WorldState};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("plan does not replay at step {0}")]
    InvalidPlan(usize),
    #[error("plan starts at a state outside the graph")]
    DisconnectedPlan,
    #[error("plans do not share the initial state")]
    MixedRoots,
    #[error("edge {0} -> {1} would close a cycle")]
    Cycle(NodeId, NodeId),
    #[error("no edge {0} -> {1}")]
    UnknownEdge(NodeId, NodeId),
    #[error("no plans")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GNode {
    pub state: State,
    pub geom: Option<WorldState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GEdge {
    pub action: usize,
    pub path: Option<MotionPath>,
    pub effort_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RGraph {
    nodes: Vec<GNode>,
    index: HashMap<State, NodeId>,
    edges: IndexMap<(NodeId, NodeId), GEdge>,
    children: Vec<Vec<NodeId>>,
    root: NodeId,
}

/// Order-free structural summary: node states and labelled transitions.
pub type Signature = (BTreeSet<State>, BTreeSet<(State, usize, State)>);

impl RGraph {
    pub fn new(s0: State) -> Self {
        let mut g = RGraph {
            nodes: Vec::new(),
            index: HashMap::new(),
            edges: IndexMap::new(),
            children: Vec::new(),
            root: 0,
        };
        g.root = g.node_for(&s0);
        g
    }

    /// Builds from plans sharing their first state.
    pub fn build(task: &GroundTask, plans: &[Plan]) -> Result<Self, GraphError> {
        let first = plans.first().ok_or(GraphError::Empty)?;
        let mut g = RGraph::new(first.first().clone());
        for p in plans {
            if p.first() != first.first() {
                return Err(GraphError::MixedRoots);
            }
            g.insert_plan(task, p)?;
        }
        Ok(g)
    }

    /// Copy-on-update splice; `p` must start at an existing node.
    pub fn update(&self, task: &GroundTask, p: &Plan) -> Result<Self, GraphError> {
        let mut g = self.clone();
        g.splice(task, p)?;
        Ok(g)
    }

    /// In-place splice; leaves the graph unchanged on error.
    pub fn splice(&mut self, task: &GroundTask, p: &Plan) -> Result<Vec<NodeId>, GraphError> {
        if !self.index.contains_key(p.first()) {
            return Err(GraphError::DisconnectedPlan);
        }
        self.insert_plan(task, p)
    }

    /// Adds a plan anywhere (e.g. a conditional entry state); atomic.
    pub fn insert_plan(&mut self, task: &GroundTask, p: &Plan) -> Result<Vec<NodeId>, GraphError> {
        for (i, (s, a, t)) in p.steps().enumerate() {
            if task.apply(s, a).as_ref() != Some(t) {
                return Err(GraphError::InvalidPlan(i));
            }
        }
        let mut g = self.clone();
        let mut ids = vec![g.node_for(p.first())];
        for (_, a, t) in p.steps() {
            let from = *ids.last().expect("non-empty");
            let to = g.node_for(t);
            g.add_edge(from, to, a)?;
            ids.push(to);
        }
        *self = g;
        Ok(ids)
    }

    /// Node for `s`, created unattached if absent.
    pub fn ensure_node(&mut self, s: &State) -> NodeId {
        self.node_for(s)
    }

    fn node_for(&mut self, s: &State) -> NodeId {
        if let Some(id) = self.index.get(s) {
            return *id;
        }
        let id = self.nodes.len();
        self.nodes.push(GNode {
            state: s.clone(),
            geom: None,
        });
        self.children.push(Vec::new());
        self.index.insert(s.clone(), id);
        id
    }

    fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; self.nodes.len()];
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if std::mem::replace(&mut seen[n], true) {
                continue;
            }
            stack.extend(self.children[n].iter().copied());
        }
        false
    }

    fn add_edge(&mut self, from: NodeId, to: NodeId, action: usize) -> Result<(), GraphError> {
        if self.edges.contains_key(&(from, to)) {
            return Ok(());
        }
        if self.reaches(to, from) {
            return Err(GraphError::Cycle(from, to));
        }
        self.edges.insert(
            (from, to),
            GEdge {
                action,
                path: None,
                effort_s: None,
            },
        );
        self.children[from].push(to);
        Ok(())
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.children[n]
    }

    pub fn node(&self, n: NodeId) -> &GNode {
        &self.nodes[n]
    }

    pub fn node_mut(&mut self, n: NodeId) -> &mut GNode {
        &mut self.nodes[n]
    }

    pub fn find(&self, s: &State) -> Option<NodeId> {
        self.index.get(s).copied()
    }

    pub fn edge(&self, from: NodeId, to: NodeId) -> Option<&GEdge> {
        self.edges.get(&(from, to))
    }

    /// Stable edge index (insertion order), used to derive seeds.
    pub fn edge_index(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.edges.get_index_of(&(from, to))
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, &GEdge)> {
        self.edges.iter().map(|((a, b), e)| (*a, *b, e))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Records a motion and effort unless an equal or better one is stored.
    pub fn annotate(
        &mut self,
        from: NodeId,
        to: NodeId,
        path: MotionPath,
        effort_s: f64,
    ) -> Result<bool, GraphError> {
        let e = self
            .edges
            .get_mut(&(from, to))
            .ok_or(GraphError::UnknownEdge(from, to))?;
        if e.effort_s.is_some_and(|old| old <= effort_s) {
            return Ok(false);
        }
        e.path = Some(path);
        e.effort_s = Some(effort_s);
        Ok(true)
    }

    pub fn signature(&self) -> Signature {
        let nodes = self.nodes.iter().map(|n| n.state.clone()).collect();
        let edges = self
            .edges
            .iter()
            .map(|((a, b), e)| (self.nodes[*a].state.clone(), e.action, self.nodes[*b].state.clone()))
            .collect();
        (nodes, edges)
    }

    /// Checks every structural invariant against `task`.
    pub fn check(&self, task: &GroundTask) -> Result<(), String> {
        if self.index.len() != self.nodes.len() {
            return Err("duplicate node states".into());
        }
        for ((a, b), e) in &self.edges {
            let s = &self.nodes[*a].state;
            if task.apply(s, e.action).as_ref() != Some(&self.nodes[*b].state) {
                return Err(format!("edge {a} -> {b} does not replay"));
            }
            if self.reaches(*b, *a) {
                return Err(format!("edge {a} -> {b} lies on a cycle"));
            }
        }
        Ok(())
    }

    /// One JSON object per node, then per edge.
    pub fn to_jsonl(&self, task: &GroundTask) -> String {
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let line = json!({
                "type": "node",
                "id": i,
                "root": i == self.root,
                "atoms": task.describe(&n.state),
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        for ((a, b), e) in &self.edges {
            let line = json!({
                "type": "edge",
                "parent": a,
                "child": b,
                "action": task.actions[e.action].to_string(),
                "effort_s": e.effort_s,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ff::tp;
    use crate::pddl::{Goal, GroundAction, GroundAtom};

    fn act(name: &str, pre: &[u32], add: &[u32], del: &[u32]) -> GroundAction {
        GroundAction {
            name: name.into(),
            args: vec![],
            schema: 0,
            precon_pos: pre.to_vec(),
            precon_neg: vec![],
            add: add.to_vec(),
            del: del.to_vec(),
        }
    }

    /// 0 -> 1 -> 2 line, plus a 0 -> 3 -> 2 detour.
    fn task() -> GroundTask {
        let atoms = (0..4).map(|i| GroundAtom::new(&format!("at{i}"), &[])).collect();
        GroundTask::from_parts(
            atoms,
            vec![
                act("a01", &[0], &[1], &[0]),
                act("a12", &[1], &[2], &[1]),
                act("a03", &[0], &[3], &[0]),
                act("a32", &[3], &[2], &[3]),
                act("a20", &[2], &[0], &[2]),
            ],
            State::new(vec![0]),
            Goal::new(vec![2], vec![]),
        )
    }

    fn plan(t: &GroundTask, acts: &[usize]) -> Plan {
        let mut p = Plan::empty(t.init.clone());
        for a in acts {
            let s = t.apply(p.last(), *a).unwrap();
            p.actions.push(*a);
            p.states.push(s);
        }
        p
    }

    #[test]
    fn linear_plan_is_a_path() {
        let t = task();
        let p = tp(&t.init, &t.goal, &t).unwrap();
        let g = RGraph::build(&t, std::slice::from_ref(&p)).unwrap();
        assert_eq!(g.node_count(), p.len() + 1);
        assert_eq!(g.node(g.root()).state, t.init);
    }

    #[test]
    fn branches_remerge() {
        let t = task();
        let g = RGraph::build(&t, &[plan(&t, &[0, 1]), plan(&t, &[2, 3])]).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.children(g.root()), &[1, 3]);
        g.check(&t).unwrap();
    }

    #[test]
    fn cycle_rejected_atomically() {
        let t = task();
        let mut g = RGraph::build(&t, &[plan(&t, &[0, 1])]).unwrap();
        let before = g.clone();
        let mut p = plan(&t, &[0, 1]);
        let s = t.apply(p.last(), 4).unwrap();
        p.actions.push(4);
        p.states.push(s);
        assert!(matches!(g.splice(&t, &p), Err(GraphError::Cycle(_, _))));
        assert_eq!(g, before);
    }

    #[test]
    fn update_idempotent_and_annotate_keeps_lower() {
        let t = task();
        let p = plan(&t, &[0, 1]);
        let g = RGraph::build(&t, std::slice::from_ref(&p)).unwrap();
        let mut g2 = g.update(&t, &p).unwrap();
        assert_eq!(g, g2);
        let path = MotionPath::timed(0, &[crate::world::Config::default()], &test_robot(), 1.0);
        assert!(g2.annotate(0, 1, path.clone(), 5.0).unwrap());
        assert!(!g2.annotate(0, 1, path.clone(), 6.0).unwrap());
        assert_eq!(g2.edge(0, 1).unwrap().effort_s, Some(5.0));
        assert_eq!(g2.annotate(1, 0, path, 1.0), Err(GraphError::UnknownEdge(1, 0)));
    }

    #[test]
    fn disconnected_splice() {
        let t = task();
        let mut g = RGraph::build(&t, &[plan(&t, &[0])]).unwrap();
        let mut far = Plan::empty(State::new(vec![3]));
        far.actions.push(3);
        far.states.push(State::new(vec![2]));
        assert_eq!(g.splice(&t, &far), Err(GraphError::DisconnectedPlan));
    }

    fn test_robot() -> crate::world::Robot {
        crate::world::Robot {
            pose: Default::default(),
            radius: 0.2,
            speed_mps: 1.0,
            ang_speed_rps: 1.0,
            pick_time_s: 0.0,
            place_time_s: 0.0,
            arm_time_s: 0.0,
            gripper_width: 0.1,
        }
    }
}
