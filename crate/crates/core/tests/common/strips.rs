//! Set-semantics STRIPS oracles, independent of the crate's search code.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tamp_core::pddl::{Goal, GroundAction, GroundAtom, GroundTask, State};

pub type Set = BTreeSet<u32>;

pub fn set(s: &State) -> Set {
    s.atoms().iter().copied().collect()
}

pub fn applicable(s: &Set, a: &GroundAction) -> bool {
    a.precon_pos.iter().all(|p| s.contains(p)) && a.precon_neg.iter().all(|p| !s.contains(p))
}

pub fn successor(s: &Set, a: &GroundAction) -> Set {
    let mut t: Set = s.iter().copied().filter(|p| !a.del.contains(p)).collect();
    t.extend(a.add.iter().copied());
    t
}

pub fn goal_holds(s: &Set, g: &Goal) -> bool {
    g.pos.iter().all(|p| s.contains(p)) && g.neg.iter().all(|p| !s.contains(p))
}

/// Shortest plan by breadth-first search over full states, as action indices.
pub fn bfs(task: &GroundTask, s0: &Set, goal: &Goal) -> Option<Vec<usize>> {
    let mut parent: HashMap<Set, Option<(Set, usize)>> = HashMap::new();
    parent.insert(s0.clone(), None);
    let mut q = VecDeque::from([s0.clone()]);
    while let Some(s) = q.pop_front() {
        if goal_holds(&s, goal) {
            let mut out = Vec::new();
            let mut cur = s;
            while let Some(Some((p, a))) = parent.get(&cur).cloned() {
                out.push(a);
                cur = p;
            }
            out.reverse();
            return Some(out);
        }
        for (i, a) in task.actions.iter().enumerate() {
            if applicable(&s, a) {
                let t = successor(&s, a);
                if !parent.contains_key(&t) {
                    parent.insert(t.clone(), Some((s.clone(), i)));
                    q.push_back(t);
                }
            }
        }
    }
    None
}

pub fn reachable(task: &GroundTask, s0: &Set) -> Vec<Set> {
    let mut seen: BTreeSet<Set> = BTreeSet::from([s0.clone()]);
    let mut q = VecDeque::from([s0.clone()]);
    let mut out = Vec::new();
    while let Some(s) = q.pop_front() {
        for a in &task.actions {
            if applicable(&s, a) {
                let t = successor(&s, a);
                if seen.insert(t.clone()) {
                    q.push_back(t);
                }
            }
        }
        out.push(s);
    }
    out
}

/// Unit-cost h_max under the delete relaxation (negative preconditions
/// dropped), by cost fixpoint; `None` when some goal atom is unreachable.
pub fn h_max(task: &GroundTask, s: &Set, goal: &Goal) -> Option<u32> {
    let n = task.atoms.len();
    let mut cost = vec![u32::MAX; n];
    for p in s {
        cost[*p as usize] = 0;
    }
    loop {
        let mut changed = false;
        for a in &task.actions {
            let pre = a.precon_pos.iter().map(|p| cost[*p as usize]).max().unwrap_or(0);
            if pre == u32::MAX {
                continue;
            }
            for q in &a.add {
                if pre + 1 < cost[*q as usize] {
                    cost[*q as usize] = pre + 1;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let m = goal.pos.iter().map(|p| cost[*p as usize]).max().unwrap_or(0);
    (m != u32::MAX).then_some(m)
}

/// Replays `actions` from `s0`; `None` if a step is inapplicable.
pub fn replay(task: &GroundTask, s0: &Set, actions: &[usize]) -> Option<Set> {
    let mut s = s0.clone();
    for a in actions {
        let act = &task.actions[*a];
        if !applicable(&s, act) {
            return None;
        }
        s = successor(&s, act);
    }
    Some(s)
}

/// `lo..=hi` distinct atoms below `n`, sorted.
fn pick(rng: &mut ChaCha8Rng, n: u32, lo: usize, hi: usize) -> Vec<u32> {
    let k = rng.gen_range(lo..=hi);
    let mut v: Vec<u32> = Vec::new();
    while v.len() < k.min(n as usize) {
        let x = rng.gen_range(0..n);
        if !v.contains(&x) {
            v.push(x);
        }
    }
    v.sort_unstable();
    v
}

/// Random propositional task with at most 12 atoms whose goal is the
/// projection of a reachable state; solvability holds by construction
/// and is re-checked by `bfs`.
pub fn micro_task(seed: u64) -> GroundTask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n: u32 = rng.gen_range(4..=12);
        let m = rng.gen_range(3..=16);
        let atoms: Vec<GroundAtom> = (0..n).map(|i| GroundAtom::new(&format!("p{i}"), &[])).collect();
        let mut actions = Vec::new();
        for j in 0..m {
            let pre = pick(&mut rng, n, 0, 2);
            let add = pick(&mut rng, n, 1, 2);
            let del: Vec<u32> = pick(&mut rng, n, 0, 2)
                .into_iter()
                .filter(|d| !add.contains(d))
                .collect();
            let neg: Vec<u32> = if rng.gen_bool(0.2) {
                pick(&mut rng, n, 1, 1).into_iter().filter(|x| !pre.contains(x)).collect()
            } else {
                Vec::new()
            };
            actions.push(GroundAction {
                name: format!("a{j}"),
                args: vec![],
                schema: 0,
                precon_pos: pre,
                precon_neg: neg,
                add,
                del,
            });
        }
        let init = pick(&mut rng, n, 1, 3);
        let s0: Set = init.iter().copied().collect();
        let proto = GroundTask::from_parts(atoms.clone(), actions.clone(), State::new(init.clone()), Goal::default());
        let states = reachable(&proto, &s0);
        if states.len() < 3 {
            continue;
        }
        let target = &states[rng.gen_range(1..states.len())];
        let pos: Vec<u32> = target.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
        let goal = Goal::new(pos, Vec::new());
        if goal_holds(&s0, &goal) {
            continue;
        }
        return GroundTask::from_parts(atoms, actions, State::new(init), goal);
    }
}
