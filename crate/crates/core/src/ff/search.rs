use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::rpg::{evaluate, Evaluation};
use crate::pddl::{Goal, GroundTask, State};

/// `⟨s_0, a_0, …, a_{N-1}, s_N⟩` stored as `N+1` states and `N` action indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Plan {
    pub states: Vec<State>,
    pub actions: Vec<usize>,
}

impl Plan {
    pub fn empty(s0: State) -> Self {
        Plan {
            states: vec![s0],
            actions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn first(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("plan has at least one state")
    }

    /// `(s_i, a_i, s_{i+1})` triples.
    pub fn steps(&self) -> impl Iterator<Item = (&State, usize, &State)> {
        self.actions
            .iter()
            .enumerate()
            .map(move |(i, a)| (&self.states[i], *a, &self.states[i + 1]))
    }

    /// Replays the plan and checks it ends in a goal state.
    pub fn validate(&self, task: &GroundTask, goal: &Goal) -> bool {
        if self.states.len() != self.actions.len() + 1 {
            return false;
        }
        let chain_ok = self
            .steps()
            .all(|(s, a, t)| task.apply(s, a).as_ref() == Some(t));
        chain_ok && goal.satisfied_by(self.last())
    }

    pub fn action_names(&self, task: &GroundTask) -> Vec<String> {
        self.actions
            .iter()
            .map(|a| task.actions[*a].to_string())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("enforced hill-climbing hit a dead end")]
pub struct DeadEnd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("task is unsolvable")]
pub struct Unsolvable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerConfig {
    /// States one EHC breadth-first phase may visit before giving up.
    pub ehc_frontier_cap: usize,
    /// Keep every heuristic evaluation for inspection.
    pub record: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            ehc_frontier_cap: 50_000,
            record: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub evaluated: usize,
    pub expanded: usize,
    pub ehc_dead_ends: usize,
}

/// One search context over a fixed task and goal. Evaluations are memoised.
pub struct Planner<'t> {
    task: &'t GroundTask,
    goal: Goal,
    cfg: PlannerConfig,
    cache: HashMap<State, Evaluation>,
    pub stats: SearchStats,
    /// Expanded states with their evaluations, when `cfg.record` is set.
    pub expanded: Vec<(State, Evaluation)>,
}

impl<'t> Planner<'t> {
    pub fn new(task: &'t GroundTask, goal: Goal, cfg: PlannerConfig) -> Self {
        Self {
            task,
            goal,
            cfg,
            cache: HashMap::new(),
            stats: SearchStats::default(),
            expanded: Vec::new(),
        }
    }

    fn eval(&mut self, s: &State) -> Evaluation {
        if let Some(e) = self.cache.get(s) {
            return e.clone();
        }
        self.stats.evaluated += 1;
        let e = evaluate(s, &self.goal, self.task);
        self.cache.insert(s.clone(), e.clone());
        e
    }

    fn expand(&mut self, s: &State, e: &Evaluation) {
        self.stats.expanded += 1;
        if self.cfg.record {
            self.expanded.push((s.clone(), e.clone()));
        }
    }

    pub fn ehc(&mut self, s0: &State) -> Result<Plan, DeadEnd> {
        let mut plan = Plan::empty(s0.clone());
        let mut cur = s0.clone();
        let mut cur_e = self.eval(&cur);
        let Some(mut h) = cur_e.h_ff else {
            self.stats.ehc_dead_ends += 1;
            return Err(DeadEnd);
        };
        while h > 0 {
            // breadth-first over helpful successors until h strictly drops
            let mut queue: VecDeque<(State, Evaluation, Vec<usize>)> = VecDeque::new();
            let mut seen: HashSet<State> = HashSet::new();
            seen.insert(cur.clone());
            queue.push_back((cur.clone(), cur_e.clone(), Vec::new()));
            let mut better = None;
            'bfs: while let Some((s, e, path)) = queue.pop_front() {
                self.expand(&s, &e);
                for &a in &e.helpful {
                    let t = self.task.apply(&s, a).expect("helpful actions are applicable");
                    if !seen.insert(t.clone()) {
                        continue;
                    }
                    if seen.len() > self.cfg.ehc_frontier_cap {
                        break 'bfs;
                    }
                    let te = self.eval(&t);
                    let Some(th) = te.h_ff else { continue };
                    let mut tp = path.clone();
                    tp.push(a);
                    if th < h {
                        better = Some((t, te, tp));
                        break 'bfs;
                    }
                    queue.push_back((t, te, tp));
                }
            }
            let Some((t, te, path)) = better else {
                self.stats.ehc_dead_ends += 1;
                return Err(DeadEnd);
            };
            for a in path {
                let next = self.task.apply(plan.last(), a).expect("path replays");
                plan.actions.push(a);
                plan.states.push(next);
            }
            h = te.h_ff.expect("improving state is finite");
            cur = t;
            cur_e = te;
        }
        Ok(plan)
    }

    /// Greedy best-first on `h_FF` over all applicable actions.
    pub fn best_first(&mut self, s0: &State) -> Result<Plan, Unsolvable> {
        struct Node {
            state: State,
            parent: Option<(usize, usize)>,
        }
        let mut nodes: Vec<Node> = Vec::new();
        let mut open = BinaryHeap::new();
        let mut seen: HashSet<State> = HashSet::new();

        let e0 = self.eval(s0);
        let Some(h0) = e0.h_ff else {
            return Err(Unsolvable);
        };
        nodes.push(Node {
            state: s0.clone(),
            parent: None,
        });
        seen.insert(s0.clone());
        open.push(Reverse((h0, 0usize)));

        while let Some(Reverse((_, id))) = open.pop() {
            let s = nodes[id].state.clone();
            let e = self.eval(&s);
            self.expand(&s, &e);
            if self.goal.satisfied_by(&s) {
                let mut actions = Vec::new();
                let mut states = vec![s];
                let mut at = id;
                while let Some((p, a)) = nodes[at].parent {
                    actions.push(a);
                    states.push(nodes[p].state.clone());
                    at = p;
                }
                actions.reverse();
                states.reverse();
                return Ok(Plan { states, actions });
            }
            for a in 0..self.task.actions.len() {
                let Some(t) = self.task.apply(&s, a) else {
                    continue;
                };
                if seen.contains(&t) {
                    continue;
                }
                seen.insert(t.clone());
                let Some(th) = self.eval(&t).h_ff else {
                    continue;
                };
                nodes.push(Node {
                    state: t,
                    parent: Some((id, a)),
                });
                open.push(Reverse((th, nodes.len() - 1)));
            }
        }
        Err(Unsolvable)
    }

    /// EHC with best-first fallback.
    pub fn tp(&mut self, s0: &State) -> Result<Plan, Unsolvable> {
        match self.ehc(s0) {
            Ok(p) => Ok(p),
            Err(DeadEnd) => self.best_first(s0),
        }
    }
}

pub fn ehc(task: &GroundTask) -> Result<Plan, DeadEnd> {
    Planner::new(task, task.goal.clone(), PlannerConfig::default()).ehc(&task.init)
}

pub fn best_first(task: &GroundTask) -> Result<Plan, Unsolvable> {
    Planner::new(task, task.goal.clone(), PlannerConfig::default()).best_first(&task.init)
}

/// `TP(s0, goal, A)`.
pub fn tp(s0: &State, goal: &Goal, task: &GroundTask) -> Result<Plan, Unsolvable> {
    Planner::new(task, goal.clone(), PlannerConfig::default()).tp(s0)
}
