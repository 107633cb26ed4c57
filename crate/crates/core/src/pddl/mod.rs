//! STRIPS subset of PDDL: parsing, grounding and state-transition semantics.
//!
//! Supported requirements are `:strips`, `:typing` and
//! `:negative-preconditions`. Identifiers are case-insensitive and stored
//! lowercased.

mod ground;
mod parse;
mod print;
pub mod sexpr;
mod state;

use thiserror::Error;

pub use ground::{ground, Goal, GroundAction, GroundOptions, GroundTask};
pub use parse::{parse_domain, parse_problem};
pub use sexpr::Pos;
pub use state::{AtomId, State};

pub const SUPPORTED_REQUIREMENTS: [&str; 3] = [":strips", ":typing", ":negative-preconditions"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PddlError {
    #[error("{msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("unsupported requirement {req}")]
    UnsupportedRequirement { pos: Pos, req: String },
    #[error("undeclared {kind} '{symbol}'")]
    UndeclaredSymbol {
        pos: Pos,
        kind: &'static str,
        symbol: String,
    },
    #[error("{msg}")]
    TypeMismatch { pos: Pos, msg: String },
    #[error("{msg}")]
    Invalid { pos: Pos, msg: String },
    #[error("grounding produced more than {cap} actions")]
    GroundingExplosion { cap: usize },
}

impl PddlError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            PddlError::Syntax { pos, .. }
            | PddlError::UnsupportedRequirement { pos, .. }
            | PddlError::UndeclaredSymbol { pos, .. }
            | PddlError::TypeMismatch { pos, .. }
            | PddlError::Invalid { pos, .. } => Some(*pos),
            PddlError::GroundingExplosion { .. } => None,
        }
    }

    /// Formats as `file:line:col: error: message`.
    pub fn diagnostic(&self, file: &str) -> String {
        let pos = self.pos().unwrap_or(Pos { line: 0, col: 0 });
        format!("{file}:{}:{}: error: {self}", pos.line, pos.col)
    }
}

/// A `?var - type` or `object - type` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Typed {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDef {
    pub name: String,
    pub params: Vec<Typed>,
}

/// Predicate applied to variables or constants.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub pred: String,
    pub args: Vec<String>,
}

impl Literal {
    pub fn new(pred: &str, args: &[&str]) -> Self {
        Self {
            pred: pred.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Typed>,
    pub precon_pos: Vec<Literal>,
    pub precon_neg: Vec<Literal>,
    pub add: Vec<Literal>,
    pub del: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainDef {
    pub name: String,
    pub requirements: Vec<String>,
    /// `(type, parent)`; `object` is implicit and never listed.
    pub types: Vec<(String, String)>,
    pub constants: Vec<Typed>,
    pub predicates: Vec<PredicateDef>,
    pub actions: Vec<ActionSchema>,
}

impl DomainDef {
    pub fn has_type(&self, ty: &str) -> bool {
        ty == "object" || self.types.iter().any(|(t, _)| t == ty)
    }

    /// True when `sub` equals `sup` or descends from it.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        let mut cur = sub.to_string();
        // bounded walk guards against cyclic type declarations
        for _ in 0..=self.types.len() + 1 {
            if cur == sup {
                return true;
            }
            match self.types.iter().find(|(t, _)| *t == cur) {
                Some((_, parent)) if *parent != cur => cur = parent.clone(),
                _ => return sup == "object",
            }
        }
        false
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDef> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }
}

/// Variable-free atom, `(pred arg...)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub pred: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(pred: &str, args: &[&str]) -> Self {
        Self {
            pred: pred.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Parses `(pred a b)` or `pred a b`.
    pub fn parse(text: &str) -> Option<Self> {
        let t = text.trim().trim_start_matches('(').trim_end_matches(')');
        let mut it = t.split_whitespace().map(|s| s.to_ascii_lowercase());
        let pred = it.next()?;
        Some(Self {
            pred,
            args: it.collect(),
        })
    }
}

impl std::fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}", self.pred)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemDef {
    pub name: String,
    pub domain: String,
    pub objects: Vec<Typed>,
    pub init: Vec<GroundAtom>,
    pub goal_pos: Vec<GroundAtom>,
    pub goal_neg: Vec<GroundAtom>,
}

impl ProblemDef {
    pub fn object_type(&self, name: &str) -> Option<&str> {
        self.objects
            .iter()
            .find(|o| o.name == name)
            .map(|o| o.ty.as_str())
    }
}
