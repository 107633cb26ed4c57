//! Delete-relaxed planning graph and relaxed-plan extraction.
//!
//! Negative preconditions are ignored by the relaxation. Negative goal
//! literals are treated as pseudo-facts achieved by any action deleting
//! the atom, so `h = 0` exactly on goal states.

use std::collections::BTreeSet;

use crate::pddl::{AtomId, Goal, GroundTask, State};

const UNREACHED: u32 = u32::MAX;

/// Layered delete-relaxed reachability from one state.
#[derive(Debug, Clone)]
pub struct Rpg {
    /// First fact layer of each atom.
    pub fact_level: Vec<u32>,
    /// First fact layer at which each atom can be false.
    pub neg_level: Vec<u32>,
    /// First action layer of each action.
    pub action_level: Vec<u32>,
    /// Number of action layers needed to reach the goal.
    pub layers: u32,
}

#[derive(Debug, Clone)]
pub enum RpgOutcome {
    Reached(Rpg),
    GoalUnreachable,
}

impl RpgOutcome {
    pub fn reached(self) -> Option<Rpg> {
        match self {
            RpgOutcome::Reached(r) => Some(r),
            RpgOutcome::GoalUnreachable => None,
        }
    }
}

impl Rpg {
    fn goal_level(&self, goal: &Goal) -> u32 {
        let p = goal.pos.iter().map(|a| self.fact_level[*a as usize]);
        let n = goal.neg.iter().map(|a| self.neg_level[*a as usize]);
        p.chain(n).max().unwrap_or(0)
    }

    /// Largest layer index of any goal literal: the unit-cost `h_max`.
    pub fn h_max(&self, goal: &Goal) -> u32 {
        self.goal_level(goal)
    }
}

pub fn build_rpg(s: &State, goal: &Goal, task: &GroundTask) -> RpgOutcome {
    let n = task.atoms.len();
    let mut fact_level = vec![UNREACHED; n];
    let mut neg_level = vec![0u32; n];
    for a in s.atoms() {
        fact_level[*a as usize] = 0;
        neg_level[*a as usize] = UNREACHED;
    }
    let mut action_level = vec![UNREACHED; task.actions.len()];
    let mut rpg_k = 0u32;
    loop {
        let done = goal.pos.iter().all(|a| fact_level[*a as usize] <= rpg_k)
            && goal.neg.iter().all(|a| neg_level[*a as usize] <= rpg_k);
        if done {
            return RpgOutcome::Reached(Rpg {
                fact_level,
                neg_level,
                action_level,
                layers: rpg_k,
            });
        }
        let fresh: Vec<usize> = task
            .actions
            .iter()
            .enumerate()
            .filter(|(i, a)| {
                action_level[*i] == UNREACHED
                    && a.precon_pos.iter().all(|p| fact_level[*p as usize] <= rpg_k)
            })
            .map(|(i, _)| i)
            .collect();
        if fresh.is_empty() {
            return RpgOutcome::GoalUnreachable;
        }
        for i in fresh {
            action_level[i] = rpg_k;
            let a = &task.actions[i];
            for p in &a.add {
                if fact_level[*p as usize] == UNREACHED {
                    fact_level[*p as usize] = rpg_k + 1;
                }
            }
            for p in &a.del {
                if neg_level[*p as usize] == UNREACHED {
                    neg_level[*p as usize] = rpg_k + 1;
                }
            }
        }
        rpg_k += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Lit {
    Pos(AtomId),
    Neg(AtomId),
}

/// A delete-relaxed plan extracted backwards from the goal layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelaxedPlan {
    /// Chosen actions per action layer, layer 0 first.
    pub layers: Vec<Vec<usize>>,
    pub h_value: u32,
    /// Actions applicable in the evaluated state achieving a layer-1 subgoal.
    pub helpful: Vec<usize>,
}

pub fn extract_relaxed_plan(rpg: &Rpg, goal: &Goal, s: &State, task: &GroundTask) -> RelaxedPlan {
    let top = rpg.layers as usize;
    let mut goals: Vec<BTreeSet<Lit>> = vec![BTreeSet::new(); top + 1];
    let level = |l: Lit| match l {
        Lit::Pos(a) => rpg.fact_level[a as usize],
        Lit::Neg(a) => rpg.neg_level[a as usize],
    };
    // a goal sits at its first layer: persisting beats re-achieving
    for a in &goal.pos {
        goals[level(Lit::Pos(*a)) as usize].insert(Lit::Pos(*a));
    }
    for a in &goal.neg {
        goals[level(Lit::Neg(*a)) as usize].insert(Lit::Neg(*a));
    }
    let g1: BTreeSet<Lit> = goals.get(1).cloned().unwrap_or_default();

    let mut marked: Vec<BTreeSet<Lit>> = vec![BTreeSet::new(); top + 1];
    let mut layers: Vec<Vec<usize>> = vec![Vec::new(); top];
    for k in (1..=top).rev() {
        let current: Vec<Lit> = goals[k].iter().copied().collect();
        for g in current {
            if marked[k].contains(&g) {
                continue;
            }
            let achiever = task
                .actions
                .iter()
                .enumerate()
                .find(|(i, a)| {
                    rpg.action_level[*i] == (k - 1) as u32
                        && match g {
                            Lit::Pos(x) => a.add.contains(&x),
                            Lit::Neg(x) => a.del.contains(&x),
                        }
                })
                .map(|(i, _)| i)
                .expect("goal layer implies an achiever one layer below");
            layers[k - 1].push(achiever);
            let act = &task.actions[achiever];
            for p in &act.precon_pos {
                let l = Lit::Pos(*p);
                let lv = level(l) as usize;
                if lv > 0 {
                    goals[lv].insert(l);
                }
            }
            // effects hold from layer k on; marking them at k - 1 as well
            // would let an action supply its own preconditions
            for x in &act.add {
                marked[k].insert(Lit::Pos(*x));
            }
            for x in &act.del {
                marked[k].insert(Lit::Neg(*x));
            }
        }
    }
    for l in &mut layers {
        l.sort_unstable();
        l.dedup();
    }
    let h_value = layers.iter().map(|l| l.len() as u32).sum();

    let subgoals: BTreeSet<Lit> = if top >= 1 {
        g1.union(&goals[1]).copied().collect()
    } else {
        BTreeSet::new()
    };
    let helpful = task
        .actions
        .iter()
        .enumerate()
        .filter(|(i, a)| {
            task.applicable(s, *i)
                && (a.add.iter().any(|x| subgoals.contains(&Lit::Pos(*x)))
                    || a.del.iter().any(|x| subgoals.contains(&Lit::Neg(*x))))
        })
        .map(|(i, _)| i)
        .collect();
    RelaxedPlan {
        layers,
        h_value,
        helpful,
    }
}

/// `helpful_actions(rp, s)`: the helpful set computed during extraction.
pub fn helpful_actions(rp: &RelaxedPlan) -> &[usize] {
    &rp.helpful
}

/// Heuristic evaluation of one state.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub h_ff: Option<u32>,
    pub h_max: Option<u32>,
    pub helpful: Vec<usize>,
}

pub fn evaluate(s: &State, goal: &Goal, task: &GroundTask) -> Evaluation {
    match build_rpg(s, goal, task) {
        RpgOutcome::GoalUnreachable => Evaluation {
            h_ff: None,
            h_max: None,
            helpful: Vec::new(),
        },
        RpgOutcome::Reached(rpg) => {
            let rp = extract_relaxed_plan(&rpg, goal, s, task);
            Evaluation {
                h_ff: Some(rp.h_value),
                h_max: Some(rpg.h_max(goal)),
                helpful: rp.helpful,
            }
        }
    }
}
