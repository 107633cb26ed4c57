use super::sexpr::{self, Pos, SExpr};
use super::{
    ActionSchema, DomainDef, GroundAtom, Literal, PddlError, PredicateDef, ProblemDef, Typed,
    SUPPORTED_REQUIREMENTS,
};

fn syntax(pos: Pos, msg: impl Into<String>) -> PddlError {
    PddlError::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn lower(s: &str) -> String {
    s.to_ascii_lowercase()
}

/// Splits `(define (kind name) sections...)` into its name and sections.
fn define_header<'a>(root: &'a SExpr, kind: &str) -> Result<(String, &'a [SExpr]), PddlError> {
    let items = root.expect_list("(define ...)")?;
    match items.first().and_then(|h| h.as_atom()) {
        Some(h) if h.eq_ignore_ascii_case("define") => {}
        _ => return Err(syntax(root.pos(), "expected 'define'")),
    }
    let header = items
        .get(1)
        .ok_or_else(|| syntax(root.pos(), format!("missing ({kind} <name>)")))?;
    let h = header.expect_list(&format!("({kind} <name>)"))?;
    match (h.first().and_then(|x| x.as_atom()), h.get(1)) {
        (Some(k), Some(name)) if k.eq_ignore_ascii_case(kind) && h.len() == 2 => {
            Ok((lower(name.expect_atom("name")?), &items[2..]))
        }
        _ => Err(syntax(header.pos(), format!("expected ({kind} <name>)"))),
    }
}

/// Parses `a b - t c - u d` into typed names; untyped entries default to `object`.
fn typed_list(items: &[SExpr], vars: bool) -> Result<Vec<(Typed, Pos)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let tok = items[i].expect_atom("name")?;
        if tok == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| syntax(items[i].pos(), "type expected after '-'"))?;
            if ty.head().as_deref() == Some("either") {
                return Err(PddlError::UnsupportedRequirement {
                    pos: ty.pos(),
                    req: "either-types".into(),
                });
            }
            let ty = lower(ty.expect_atom("type name")?);
            if pending.is_empty() {
                return Err(syntax(items[i].pos(), "'-' without preceding names"));
            }
            for (name, pos) in pending.drain(..) {
                out.push((
                    Typed {
                        name,
                        ty: ty.clone(),
                    },
                    pos,
                ));
            }
            i += 2;
            continue;
        }
        if vars != tok.starts_with('?') {
            let msg = if vars {
                format!("expected variable, found '{tok}'")
            } else {
                format!("unexpected variable '{tok}'")
            };
            return Err(syntax(items[i].pos(), msg));
        }
        pending.push((lower(tok), items[i].pos()));
        i += 1;
    }
    for (name, pos) in pending {
        out.push((
            Typed {
                name,
                ty: "object".into(),
            },
            pos,
        ));
    }
    Ok(out)
}

fn check_requirements(items: &[SExpr]) -> Result<Vec<String>, PddlError> {
    let mut reqs = Vec::new();
    for r in items {
        let name = lower(r.expect_atom("requirement")?);
        if !SUPPORTED_REQUIREMENTS.contains(&name.as_str()) {
            return Err(PddlError::UnsupportedRequirement {
                pos: r.pos(),
                req: name,
            });
        }
        reqs.push(name);
    }
    Ok(reqs)
}

/// Literal list from `(and l...)`, a single literal, or `()`.
/// Returns `(positive, negative)` with positions.
#[allow(clippy::type_complexity)]
fn literal_conj(expr: &SExpr) -> Result<(Vec<(Literal, Pos)>, Vec<(Literal, Pos)>), PddlError> {
    let items = expr.expect_list("literal conjunction")?;
    let mut pos_lits = Vec::new();
    let mut neg_lits = Vec::new();
    let conj: &[SExpr] = match expr.head().as_deref() {
        None => return Ok((pos_lits, neg_lits)),
        Some("and") => &items[1..],
        _ => std::slice::from_ref(expr),
    };
    for lit in conj {
        match lit.head().as_deref() {
            Some("not") => {
                let inner = lit.expect_list("(not ...)")?;
                if inner.len() != 2 {
                    return Err(syntax(lit.pos(), "(not ...) takes exactly one literal"));
                }
                neg_lits.push((atom_literal(&inner[1])?, inner[1].pos()));
            }
            Some("or") | Some("imply") | Some("forall") | Some("exists") | Some("when") => {
                return Err(PddlError::UnsupportedRequirement {
                    pos: lit.pos(),
                    req: format!("({} ...)", lit.head().unwrap_or_default()),
                })
            }
            Some("and") => return Err(syntax(lit.pos(), "nested (and ...) not supported")),
            _ => pos_lits.push((atom_literal(lit)?, lit.pos())),
        }
    }
    Ok((pos_lits, neg_lits))
}

fn atom_literal(expr: &SExpr) -> Result<Literal, PddlError> {
    let items = expr.expect_list("literal")?;
    let (head, args) = items
        .split_first()
        .ok_or_else(|| syntax(expr.pos(), "empty literal"))?;
    let pred = lower(head.expect_atom("predicate name")?);
    if pred == "=" {
        return Err(PddlError::UnsupportedRequirement {
            pos: expr.pos(),
            req: ":equality".into(),
        });
    }
    let args = args
        .iter()
        .map(|a| a.expect_atom("argument").map(lower))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Literal { pred, args })
}

pub fn parse_domain(text: &str) -> Result<DomainDef, PddlError> {
    let root = sexpr::parse(text)?;
    let (name, sections) = define_header(&root, "domain")?;
    let mut dom = DomainDef {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    // actions are validated after all declarations are known
    let mut raw_actions: Vec<&SExpr> = Vec::new();
    let mut type_pos = Vec::new();

    for sec in sections {
        let items = sec.expect_list("domain section")?;
        let head = sec
            .head()
            .ok_or_else(|| syntax(sec.pos(), "expected section keyword"))?;
        match head.as_str() {
            ":requirements" => dom.requirements = check_requirements(&items[1..])?,
            ":types" => {
                for (t, pos) in typed_list(&items[1..], false)? {
                    if t.name == "object" {
                        continue;
                    }
                    type_pos.push((t.ty.clone(), pos));
                    dom.types.push((t.name, t.ty));
                }
            }
            ":constants" => {
                for (t, _) in typed_list(&items[1..], false)? {
                    dom.constants.push(t);
                }
            }
            ":predicates" => {
                for p in &items[1..] {
                    let pi = p.expect_list("predicate declaration")?;
                    let (h, params) = pi
                        .split_first()
                        .ok_or_else(|| syntax(p.pos(), "empty predicate declaration"))?;
                    let pname = lower(h.expect_atom("predicate name")?);
                    if dom.predicate(&pname).is_some() {
                        return Err(PddlError::Invalid {
                            pos: p.pos(),
                            msg: format!("predicate '{pname}' declared twice"),
                        });
                    }
                    let params = typed_list(params, true)?;
                    for (t, pos) in &params {
                        type_pos.push((t.ty.clone(), *pos));
                    }
                    dom.predicates.push(PredicateDef {
                        name: pname,
                        params: params.into_iter().map(|(t, _)| t).collect(),
                    });
                }
            }
            ":action" => raw_actions.push(sec),
            other => {
                return Err(PddlError::UnsupportedRequirement {
                    pos: sec.pos(),
                    req: other.to_string(),
                })
            }
        }
    }

    for (ty, pos) in &type_pos {
        if !dom.has_type(ty) {
            return Err(PddlError::UndeclaredSymbol {
                pos: *pos,
                kind: "type",
                symbol: ty.clone(),
            });
        }
    }
    for c in &dom.constants {
        if !dom.has_type(&c.ty) {
            return Err(PddlError::UndeclaredSymbol {
                pos: root.pos(),
                kind: "type",
                symbol: c.ty.clone(),
            });
        }
    }

    for sec in raw_actions {
        let a = parse_action(sec, &dom)?;
        if dom.action(&a.name).is_some() {
            return Err(PddlError::Invalid {
                pos: sec.pos(),
                msg: format!("action '{}' declared twice", a.name),
            });
        }
        dom.actions.push(a);
    }
    Ok(dom)
}

fn parse_action(sec: &SExpr, dom: &DomainDef) -> Result<ActionSchema, PddlError> {
    let items = sec.expect_list("action")?;
    let name = lower(
        items
            .get(1)
            .ok_or_else(|| syntax(sec.pos(), "action name expected"))?
            .expect_atom("action name")?,
    );
    let mut params = Vec::new();
    let mut pre = (Vec::new(), Vec::new());
    let mut eff = (Vec::new(), Vec::new());
    let mut i = 2;
    while i < items.len() {
        let key = lower(items[i].expect_atom("action keyword")?);
        let val = items
            .get(i + 1)
            .ok_or_else(|| syntax(items[i].pos(), format!("value expected after {key}")))?;
        match key.as_str() {
            ":parameters" => {
                for (t, pos) in typed_list(val.expect_list("parameter list")?, true)? {
                    if !dom.has_type(&t.ty) {
                        return Err(PddlError::UndeclaredSymbol {
                            pos,
                            kind: "type",
                            symbol: t.ty,
                        });
                    }
                    params.push(t);
                }
            }
            ":precondition" => pre = literal_conj(val)?,
            ":effect" => eff = literal_conj(val)?,
            other => return Err(syntax(items[i].pos(), format!("unknown action key {other}"))),
        }
        i += 2;
    }

    let check = |lits: &[(Literal, Pos)]| -> Result<Vec<Literal>, PddlError> {
        lits.iter()
            .map(|(l, pos)| check_literal(l, *pos, &params, dom).map(|_| l.clone()))
            .collect()
    };
    let precon_pos = check(&pre.0)?;
    let precon_neg = check(&pre.1)?;
    let add = check(&eff.0)?;
    let del = check(&eff.1)?;
    if let Some(l) = add.iter().find(|l| del.contains(l)) {
        return Err(PddlError::Invalid {
            pos: sec.pos(),
            msg: format!("action '{name}' both adds and deletes ({} ...)", l.pred),
        });
    }
    Ok(ActionSchema {
        name,
        params,
        precon_pos,
        precon_neg,
        add,
        del,
    })
}

fn check_literal(
    lit: &Literal,
    pos: Pos,
    params: &[Typed],
    dom: &DomainDef,
) -> Result<(), PddlError> {
    let pred = dom
        .predicate(&lit.pred)
        .ok_or_else(|| PddlError::UndeclaredSymbol {
            pos,
            kind: "predicate",
            symbol: lit.pred.clone(),
        })?;
    if pred.params.len() != lit.args.len() {
        return Err(PddlError::TypeMismatch {
            pos,
            msg: format!(
                "predicate '{}' takes {} arguments, {} given",
                pred.name,
                pred.params.len(),
                lit.args.len()
            ),
        });
    }
    for (arg, formal) in lit.args.iter().zip(&pred.params) {
        let ty = if arg.starts_with('?') {
            params
                .iter()
                .find(|p| p.name == *arg)
                .map(|p| p.ty.as_str())
                .ok_or_else(|| PddlError::UndeclaredSymbol {
                    pos,
                    kind: "variable",
                    symbol: arg.clone(),
                })?
        } else {
            dom.constants
                .iter()
                .find(|c| c.name == *arg)
                .map(|c| c.ty.as_str())
                .ok_or_else(|| PddlError::UndeclaredSymbol {
                    pos,
                    kind: "constant",
                    symbol: arg.clone(),
                })?
        };
        if !dom.is_subtype(ty, &formal.ty) {
            return Err(PddlError::TypeMismatch {
                pos,
                msg: format!(
                    "argument {arg} of type {ty} does not fit parameter of type {} in '{}'",
                    formal.ty, pred.name
                ),
            });
        }
    }
    Ok(())
}

pub fn parse_problem(text: &str, domain: &DomainDef) -> Result<ProblemDef, PddlError> {
    let root = sexpr::parse(text)?;
    let (name, sections) = define_header(&root, "problem")?;
    let mut prob = ProblemDef {
        name,
        domain: String::new(),
        objects: domain.constants.clone(),
        init: Vec::new(),
        goal_pos: Vec::new(),
        goal_neg: Vec::new(),
    };
    for sec in sections {
        let items = sec.expect_list("problem section")?;
        let head = sec
            .head()
            .ok_or_else(|| syntax(sec.pos(), "expected section keyword"))?;
        match head.as_str() {
            ":domain" => {
                let d = lower(
                    items
                        .get(1)
                        .ok_or_else(|| syntax(sec.pos(), "domain name expected"))?
                        .expect_atom("domain name")?,
                );
                if d != domain.name {
                    return Err(PddlError::UndeclaredSymbol {
                        pos: items[1].pos(),
                        kind: "domain",
                        symbol: d,
                    });
                }
                prob.domain = d;
            }
            ":requirements" => {
                check_requirements(&items[1..])?;
            }
            ":objects" => {
                for (t, pos) in typed_list(&items[1..], false)? {
                    if !domain.has_type(&t.ty) {
                        return Err(PddlError::TypeMismatch {
                            pos,
                            msg: format!("object '{}' has undeclared type '{}'", t.name, t.ty),
                        });
                    }
                    if domain.constants.contains(&t) {
                        continue;
                    }
                    if prob.object_type(&t.name).is_some() {
                        return Err(PddlError::Invalid {
                            pos,
                            msg: format!("object '{}' declared twice", t.name),
                        });
                    }
                    prob.objects.push(t);
                }
            }
            ":init" => {
                for a in &items[1..] {
                    if a.head().as_deref() == Some("not") {
                        return Err(syntax(a.pos(), "negative literals are not allowed in :init"));
                    }
                    let lit = atom_literal(a)?;
                    let g = check_ground(&lit, a.pos(), domain, &prob)?;
                    if !prob.init.contains(&g) {
                        prob.init.push(g);
                    }
                }
            }
            ":goal" => {
                let g = items
                    .get(1)
                    .ok_or_else(|| syntax(sec.pos(), "goal expected"))?;
                let (p, n) = literal_conj(g)?;
                for (l, pos) in p {
                    prob.goal_pos.push(check_ground(&l, pos, domain, &prob)?);
                }
                for (l, pos) in n {
                    prob.goal_neg.push(check_ground(&l, pos, domain, &prob)?);
                }
            }
            other => {
                return Err(PddlError::UnsupportedRequirement {
                    pos: sec.pos(),
                    req: other.to_string(),
                })
            }
        }
    }
    Ok(prob)
}

fn check_ground(
    lit: &Literal,
    pos: Pos,
    dom: &DomainDef,
    prob: &ProblemDef,
) -> Result<GroundAtom, PddlError> {
    let pred = dom
        .predicate(&lit.pred)
        .ok_or_else(|| PddlError::UndeclaredSymbol {
            pos,
            kind: "predicate",
            symbol: lit.pred.clone(),
        })?;
    if pred.params.len() != lit.args.len() {
        return Err(PddlError::TypeMismatch {
            pos,
            msg: format!(
                "predicate '{}' takes {} arguments, {} given",
                pred.name,
                pred.params.len(),
                lit.args.len()
            ),
        });
    }
    for (arg, formal) in lit.args.iter().zip(&pred.params) {
        let ty = prob
            .object_type(arg)
            .ok_or_else(|| PddlError::UndeclaredSymbol {
                pos,
                kind: "object",
                symbol: arg.clone(),
            })?;
        if !dom.is_subtype(ty, &formal.ty) {
            return Err(PddlError::TypeMismatch {
                pos,
                msg: format!(
                    "object {arg} of type {ty} does not fit parameter of type {} in '{}'",
                    formal.ty, pred.name
                ),
            });
        }
    }
    Ok(GroundAtom {
        pred: lit.pred.clone(),
        args: lit.args.clone(),
    })
}
