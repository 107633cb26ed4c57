use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::state::{AtomId, State};
use super::{DomainDef, GroundAtom, Literal, PddlError, ProblemDef, Typed};

#[derive(Debug, Clone, Copy)]
pub struct GroundOptions {
    /// Drop bindings whose static preconditions cannot hold.
    pub static_pruning: bool,
    pub max_actions: usize,
}

impl Default for GroundOptions {
    fn default() -> Self {
        Self {
            static_pruning: true,
            max_actions: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
    pub schema: usize,
    pub precon_pos: Vec<AtomId>,
    pub precon_neg: Vec<AtomId>,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// Conjunctive goal over atom indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Goal {
    pub pos: Vec<AtomId>,
    pub neg: Vec<AtomId>,
}

impl Goal {
    pub fn new(mut pos: Vec<AtomId>, mut neg: Vec<AtomId>) -> Self {
        pos.sort_unstable();
        pos.dedup();
        neg.sort_unstable();
        neg.dedup();
        Self { pos, neg }
    }

    pub fn satisfied_by(&self, s: &State) -> bool {
        s.contains_all(&self.pos) && s.contains_none(&self.neg)
    }
}

/// Propositional STRIPS task.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTask {
    pub atoms: Vec<GroundAtom>,
    pub actions: Vec<GroundAction>,
    pub init: State,
    pub goal: Goal,
    pub objects: Vec<Typed>,
    /// `(type, parent)` pairs from the domain.
    pub types: Vec<(String, String)>,
    index: HashMap<GroundAtom, AtomId>,
}

impl GroundTask {
    /// Builds a task directly from propositional parts; atoms are taken as given.
    pub fn from_parts(
        atoms: Vec<GroundAtom>,
        actions: Vec<GroundAction>,
        init: State,
        goal: Goal,
    ) -> Self {
        let index = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i as AtomId))
            .collect();
        Self {
            atoms,
            actions,
            init,
            goal,
            objects: Vec::new(),
            types: Vec::new(),
            index,
        }
    }

    pub fn atom_id(&self, atom: &GroundAtom) -> Option<AtomId> {
        self.index.get(atom).copied()
    }

    pub fn atom(&self, id: AtomId) -> &GroundAtom {
        &self.atoms[id as usize]
    }

    pub fn applicable(&self, s: &State, a: usize) -> bool {
        let a = &self.actions[a];
        s.contains_all(&a.precon_pos) && s.contains_none(&a.precon_neg)
    }

    /// Successor state; `None` when `a` is not applicable.
    pub fn apply(&self, s: &State, a: usize) -> Option<State> {
        if !self.applicable(s, a) {
            return None;
        }
        let act = &self.actions[a];
        Some(s.successor(&act.del, &act.add))
    }

    pub fn is_goal(&self, s: &State) -> bool {
        self.goal.satisfied_by(s)
    }

    pub fn object_type(&self, name: &str) -> Option<&str> {
        self.objects
            .iter()
            .find(|o| o.name == name)
            .map(|o| o.ty.as_str())
    }

    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        let mut cur = sub;
        for _ in 0..=self.types.len() + 1 {
            if cur == sup {
                return true;
            }
            match self.types.iter().find(|(t, _)| t == cur) {
                Some((_, parent)) if parent != cur => cur = parent,
                _ => return sup == "object",
            }
        }
        false
    }

    /// Goal requiring exactly the atoms of `s` that could ever change.
    pub fn state_goal(&self, s: &State) -> Goal {
        let mut fluent = BTreeSet::new();
        for a in &self.actions {
            fluent.extend(a.add.iter().copied());
            fluent.extend(a.del.iter().copied());
        }
        let neg = fluent.into_iter().filter(|a| !s.contains(*a)).collect();
        Goal::new(s.atoms().to_vec(), neg)
    }

    pub fn state_from_atoms<'a>(
        &self,
        atoms: impl IntoIterator<Item = &'a GroundAtom>,
    ) -> Option<State> {
        atoms
            .into_iter()
            .map(|a| self.atom_id(a))
            .collect::<Option<Vec<_>>>()
            .map(State::new)
    }

    pub fn describe(&self, s: &State) -> Vec<String> {
        s.atoms().iter().map(|a| self.atom(*a).to_string()).collect()
    }

    /// Finds the ground action `(name args...)`.
    pub fn find_action(&self, name: &str, args: &[&str]) -> Option<usize> {
        self.actions
            .iter()
            .position(|a| a.name == name && a.args.iter().map(String::as_str).eq(args.iter().copied()))
    }
}

fn instantiate(lit: &Literal, binding: &BTreeMap<&str, &str>) -> GroundAtom {
    GroundAtom {
        pred: lit.pred.clone(),
        args: lit
            .args
            .iter()
            .map(|a| binding.get(a.as_str()).map(|s| s.to_string()).unwrap_or_else(|| a.clone()))
            .collect(),
    }
}

pub fn ground(
    domain: &DomainDef,
    problem: &ProblemDef,
    opts: GroundOptions,
) -> Result<GroundTask, PddlError> {
    let statics: BTreeSet<&str> = domain
        .predicates
        .iter()
        .map(|p| p.name.as_str())
        .filter(|p| {
            !domain
                .actions
                .iter()
                .any(|a| a.add.iter().chain(&a.del).any(|l| l.pred == *p))
        })
        .collect();
    let init: BTreeSet<&GroundAtom> = problem.init.iter().collect();

    let mut objects: Vec<&Typed> = problem.objects.iter().collect();
    objects.sort_by(|a, b| a.name.cmp(&b.name));

    // (schema index, binding values, instantiated literal sets)
    let mut raw: Vec<(usize, Vec<String>, [Vec<GroundAtom>; 4])> = Vec::new();
    let mut produced = 0usize;
    for (si, schema) in domain.actions.iter().enumerate() {
        let domains: Vec<Vec<&str>> = schema
            .params
            .iter()
            .map(|p| {
                objects
                    .iter()
                    .filter(|o| domain.is_subtype(&o.ty, &p.ty))
                    .map(|o| o.name.as_str())
                    .collect()
            })
            .collect();
        let count = domains
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(d.len()))
            .unwrap_or(usize::MAX);
        if produced.saturating_add(count) > opts.max_actions {
            return Err(PddlError::GroundingExplosion {
                cap: opts.max_actions,
            });
        }
        produced += count;
        if count == 0 {
            continue;
        }
        let mut idx = vec![0usize; domains.len()];
        'bindings: loop {
            let values: Vec<&str> = idx.iter().zip(&domains).map(|(i, d)| d[*i]).collect();
            let binding: BTreeMap<&str, &str> = schema
                .params
                .iter()
                .map(|p| p.name.as_str())
                .zip(values.iter().copied())
                .collect();
            let inst = |ls: &[Literal]| ls.iter().map(|l| instantiate(l, &binding)).collect::<Vec<_>>();
            let sets = [
                inst(&schema.precon_pos),
                inst(&schema.precon_neg),
                inst(&schema.add),
                inst(&schema.del),
            ];
            let pruned = opts.static_pruning
                && (sets[0]
                    .iter()
                    .any(|g| statics.contains(g.pred.as_str()) && !init.contains(g))
                    || sets[1]
                        .iter()
                        .any(|g| statics.contains(g.pred.as_str()) && init.contains(g)));
            if !pruned {
                raw.push((si, values.iter().map(|s| s.to_string()).collect(), sets));
            }
            // odometer increment
            let mut k = domains.len();
            loop {
                if k == 0 {
                    break 'bindings;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < domains[k].len() {
                    continue 'bindings;
                }
                idx[k] = 0;
            }
        }
    }

    let mut universe: BTreeSet<GroundAtom> = BTreeSet::new();
    universe.extend(problem.init.iter().cloned());
    universe.extend(problem.goal_pos.iter().cloned());
    universe.extend(problem.goal_neg.iter().cloned());
    for (_, _, sets) in &raw {
        for s in sets {
            universe.extend(s.iter().cloned());
        }
    }
    let atoms: Vec<GroundAtom> = universe.into_iter().collect();
    let index: HashMap<GroundAtom, AtomId> = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i as AtomId))
        .collect();
    let ids = |xs: &[GroundAtom]| {
        let mut v: Vec<AtomId> = xs.iter().map(|a| index[a]).collect();
        v.sort_unstable();
        v.dedup();
        v
    };

    let mut actions: Vec<GroundAction> = raw
        .iter()
        .map(|(si, args, sets)| GroundAction {
            name: domain.actions[*si].name.clone(),
            args: args.clone(),
            schema: *si,
            precon_pos: ids(&sets[0]),
            precon_neg: ids(&sets[1]),
            add: ids(&sets[2]),
            del: ids(&sets[3]),
        })
        .collect();
    actions.sort_by(|a, b| a.name.cmp(&b.name).then_with(|| a.args.cmp(&b.args)));

    let init = State::new(ids(&problem.init));
    let goal = Goal::new(ids(&problem.goal_pos), ids(&problem.goal_neg));
    Ok(GroundTask {
        atoms,
        actions,
        init,
        goal,
        objects: problem.objects.clone(),
        types: domain.types.clone(),
        index,
    })
}
