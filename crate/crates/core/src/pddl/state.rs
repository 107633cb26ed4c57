use std::fmt;

use serde::{Deserialize, Serialize};

pub type AtomId = u32;

/// Closed-world symbolic state: the sorted set of true atom indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(Vec<AtomId>);

impl State {
    pub fn new(mut atoms: Vec<AtomId>) -> Self {
        atoms.sort_unstable();
        atoms.dedup();
        State(atoms)
    }

    pub fn contains(&self, atom: AtomId) -> bool {
        self.0.binary_search(&atom).is_ok()
    }

    pub fn contains_all(&self, atoms: &[AtomId]) -> bool {
        atoms.iter().all(|a| self.contains(*a))
    }

    pub fn contains_none(&self, atoms: &[AtomId]) -> bool {
        !atoms.iter().any(|a| self.contains(*a))
    }

    pub fn atoms(&self) -> &[AtomId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(self \ del) ∪ add`; both inputs must be sorted.
    pub(crate) fn successor(&self, del: &[AtomId], add: &[AtomId]) -> State {
        let kept = self.0.iter().copied().filter(|a| del.binary_search(a).is_err());
        let mut out: Vec<AtomId> = kept.chain(add.iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        State(out)
    }
}

impl FromIterator<AtomId> for State {
    fn from_iter<I: IntoIterator<Item = AtomId>>(iter: I) -> Self {
        State::new(iter.into_iter().collect())
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}
