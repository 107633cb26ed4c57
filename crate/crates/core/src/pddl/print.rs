//! PDDL pretty-printing; output reparses to an equal definition.

use std::fmt::{self, Display, Formatter};

use super::{DomainDef, GroundAtom, Literal, ProblemDef, Typed};

fn typed(f: &mut Formatter<'_>, items: &[Typed]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{} - {}", t.name, t.ty)?;
    }
    Ok(())
}

fn lit(f: &mut Formatter<'_>, l: &Literal, neg: bool) -> fmt::Result {
    if neg {
        write!(f, "(not ")?;
    }
    write!(f, "({}", l.pred)?;
    for a in &l.args {
        write!(f, " {a}")?;
    }
    write!(f, ")")?;
    if neg {
        write!(f, ")")?;
    }
    Ok(())
}

fn conj(f: &mut Formatter<'_>, pos: &[Literal], neg: &[Literal]) -> fmt::Result {
    write!(f, "(and")?;
    for l in pos {
        write!(f, " ")?;
        lit(f, l, false)?;
    }
    for l in neg {
        write!(f, " ")?;
        lit(f, l, true)?;
    }
    write!(f, ")")
}

impl Display for DomainDef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            write!(f, "  (:types")?;
            for (t, p) in &self.types {
                write!(f, " {t} - {p}")?;
            }
            writeln!(f, ")")?;
        }
        if !self.constants.is_empty() {
            write!(f, "  (:constants ")?;
            typed(f, &self.constants)?;
            writeln!(f, ")")?;
        }
        write!(f, "  (:predicates")?;
        for p in &self.predicates {
            write!(f, " ({}", p.name)?;
            if !p.params.is_empty() {
                write!(f, " ")?;
                typed(f, &p.params)?;
            }
            write!(f, ")")?;
        }
        writeln!(f, ")")?;
        for a in &self.actions {
            writeln!(f, "  (:action {}", a.name)?;
            write!(f, "    :parameters (")?;
            typed(f, &a.params)?;
            writeln!(f, ")")?;
            write!(f, "    :precondition ")?;
            conj(f, &a.precon_pos, &a.precon_neg)?;
            writeln!(f)?;
            write!(f, "    :effect ")?;
            conj(f, &a.add, &a.del)?;
            writeln!(f, ")")?;
        }
        writeln!(f, ")")
    }
}

impl Display for ProblemDef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        fn atoms(f: &mut Formatter<'_>, xs: &[GroundAtom], neg: bool) -> fmt::Result {
            for a in xs {
                write!(f, " ")?;
                if neg {
                    write!(f, "(not {a})")?;
                } else {
                    write!(f, "{a}")?;
                }
            }
            Ok(())
        }
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        write!(f, "  (:objects ")?;
        typed(f, &self.objects)?;
        writeln!(f, ")")?;
        write!(f, "  (:init")?;
        atoms(f, &self.init, false)?;
        writeln!(f, ")")?;
        write!(f, "  (:goal (and")?;
        atoms(f, &self.goal_pos, false)?;
        atoms(f, &self.goal_neg, true)?;
        writeln!(f, ")))")
    }
}
