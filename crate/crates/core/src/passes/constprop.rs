//! Constant propagation over a single version.

use std::collections::{BTreeMap, HashMap, VecDeque};

use super::*;
use crate::interp::{apply_binop, apply_unop, Environment, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AbstractValue {
    Unknown,
    Const(Value),
    /// Known to differ from this literal.
    NotConst(Literal),
}

/// Facts about the variables in scope. A variable missing from the map is
/// not in scope.
pub type AbstractEnv = BTreeMap<Var, AbstractValue>;

fn join(a: &AbstractEnv, b: &AbstractEnv) -> AbstractEnv {
    a.iter()
        .filter_map(|(k, va)| {
            let vb = b.get(k)?;
            Some((k.clone(), if va == vb { va.clone() } else { AbstractValue::Unknown }))
        })
        .collect()
}

fn simple_value(env: &AbstractEnv, s: &SimpleExpr) -> Option<Value> {
    match s {
        SimpleExpr::Lit(l) => Some(Value::from(*l)),
        SimpleExpr::FunRef(f) => Some(Value::Fun(f.clone())),
        SimpleExpr::Var(v) => match env.get(v) {
            Some(AbstractValue::Const(c)) => Some(c.clone()),
            _ => None,
        },
    }
}

/// The value `e` is guaranteed to evaluate to under `env`, if any. Expressions
/// that would fail at run time are never folded.
pub fn abstract_eval(env: &AbstractEnv, e: &Expr) -> Option<Value> {
    match e {
        Expr::Simple(s) => simple_value(env, s),
        Expr::ArrayRead(..) | Expr::Length(_) => None,
        Expr::Unary(op, a) => apply_unop(*op, &simple_value(env, a)?).ok(),
        Expr::Binary(op, a, b) => {
            if let (Some(x), Some(y)) = (simple_value(env, a), simple_value(env, b)) {
                return apply_binop(*op, &x, &y).ok();
            }
            if matches!(op, BinOp::Eq | BinOp::Neq) {
                let excluded = |var: &SimpleExpr, other: &SimpleExpr| -> bool {
                    let SimpleExpr::Var(v) = var else { return false };
                    let Some(AbstractValue::NotConst(l)) = env.get(v) else {
                        return false;
                    };
                    simple_value(env, other) == Some(Value::from(*l))
                };
                if excluded(a, b) || excluded(b, a) {
                    return Some(Value::Bool(*op == BinOp::Neq));
                }
            }
            None
        }
    }
}

/// Facts established by an assume's predicates on its fall-through edge.
fn assume_facts(preds: &[Expr], env: &mut AbstractEnv) {
    for p in preds {
        match p {
            Expr::Simple(SimpleExpr::Var(x)) if env.contains_key(x) => {
                env.insert(x.clone(), AbstractValue::Const(Value::Bool(true)));
            }
            Expr::Binary(op @ (BinOp::Eq | BinOp::Neq), a, b) => {
                let (x, other) = match (a, b) {
                    (SimpleExpr::Var(x), o @ (SimpleExpr::Lit(_) | SimpleExpr::FunRef(_))) => (x, o),
                    (o @ (SimpleExpr::Lit(_) | SimpleExpr::FunRef(_)), SimpleExpr::Var(x)) => (x, o),
                    _ => continue,
                };
                if !env.contains_key(x) {
                    continue;
                }
                match (op, other) {
                    (BinOp::Eq, SimpleExpr::Lit(l)) => {
                        env.insert(x.clone(), AbstractValue::Const(Value::from(*l)));
                    }
                    (BinOp::Eq, SimpleExpr::FunRef(g)) => {
                        env.insert(x.clone(), AbstractValue::Const(Value::Fun(g.clone())));
                    }
                    (BinOp::Neq, SimpleExpr::Lit(l)) if !matches!(env.get(x), Some(AbstractValue::Const(_))) => {
                        env.insert(x.clone(), AbstractValue::NotConst(*l));
                    }
                    _ => {}
                }
            }
            _ => {}
        }
    }
}

fn transfer(ins: &Instruction, env: &AbstractEnv) -> AbstractEnv {
    let mut out = env.clone();
    let value_of = |e: &Expr| match abstract_eval(env, e) {
        Some(v) => AbstractValue::Const(v),
        None => AbstractValue::Unknown,
    };
    match ins {
        Instruction::VarDecl(x, e) | Instruction::Assign(x, e) => {
            out.insert(x.clone(), value_of(e));
        }
        Instruction::Drop(x) => {
            out.remove(x);
        }
        Instruction::ArrayAlloc(x, _)
        | Instruction::ArrayLit(x, _)
        | Instruction::Read(x)
        | Instruction::Call(x, _, _) => {
            out.insert(x.clone(), AbstractValue::Unknown);
        }
        Instruction::Assume { preds, .. } => assume_facts(preds, &mut out),
        Instruction::ArrayStore(..)
        | Instruction::Branch(..)
        | Instruction::Goto(_)
        | Instruction::Print(_)
        | Instruction::Return(_)
        | Instruction::Stop => {}
    }
    out
}

/// Facts holding on entry to every reachable label of `v`.
pub fn analyze_constants(params: &[Var], body: &InstructionStream) -> HashMap<Label, AbstractEnv> {
    let mut facts: HashMap<Label, AbstractEnv> = HashMap::new();
    let Some(entry) = body.entry() else { return facts };
    let index: HashMap<&Label, usize> = body.labels().enumerate().map(|(i, l)| (l, i)).collect();
    facts.insert(
        entry.clone(),
        params.iter().map(|p| (p.clone(), AbstractValue::Unknown)).collect(),
    );
    let mut work = VecDeque::from([0usize]);
    let mut queued = vec![false; body.len()];
    queued[0] = true;
    while let Some(i) = work.pop_front() {
        queued[i] = false;
        let (label, ins) = &body.instrs[i];
        let out = transfer(ins, &facts[label]);
        for s in body.successors_at(i) {
            let Some(&j) = index.get(&s) else { continue };
            let new = match facts.get(&s) {
                None => out.clone(),
                Some(old) => {
                    let joined = join(old, &out);
                    if &joined == old {
                        continue;
                    }
                    joined
                }
            };
            facts.insert(s, new);
            if !queued[j] {
                queued[j] = true;
                work.push_back(j);
            }
        }
    }
    facts
}

fn rewrite_expr(e: &mut Expr, env: &AbstractEnv) -> bool {
    if matches!(e, Expr::Simple(SimpleExpr::Lit(_) | SimpleExpr::FunRef(_))) {
        return false;
    }
    if let Some(s) = abstract_eval(env, e).and_then(|v| v.as_simple_expr()) {
        *e = Expr::Simple(s);
        return true;
    }
    let mut changed = false;
    for op in e.operands_mut() {
        if let SimpleExpr::Var(v) = op {
            if let Some(AbstractValue::Const(c)) = env.get(v) {
                if let Some(s) = c.as_simple_expr() {
                    *op = s;
                    changed = true;
                }
            }
        }
    }
    changed
}

/// Replaces every expression, including varmap and frame entries, by its
/// constant value where one is known, substitutes known operands, and drops
/// literal `true` predicates from assumes.
pub fn constant_propagate(p: &Program, f: &FunName, v: &VersionName) -> PassResult {
    let (func, ver) = version(p, f, v)?;
    let facts = analyze_constants(&func.params, &ver.body);
    let mut body = ver.body.clone();
    let mut rewrites = 0;
    for (l, ins) in &mut body.instrs {
        let Some(env) = facts.get(l) else { continue };
        for e in ins.exprs_mut() {
            if rewrite_expr(e, env) {
                rewrites += 1;
            }
        }
        if let Instruction::Assume { preds, .. } = ins {
            let before = preds.len();
            preds.retain(|e| !e.is_true());
            rewrites += before - preds.len();
        }
    }
    Ok((
        replace_body(p, f, v, body),
        PassReport::new("constant-propagate", rewrites),
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactViolation {
    pub var: Var,
    pub fact: AbstractValue,
    pub actual: Option<Value>,
}

/// Checks a concrete environment against the facts for its label.
pub fn check_facts(env: &Environment, facts: &AbstractEnv) -> Vec<FactViolation> {
    let mut out = Vec::new();
    for (x, fact) in facts {
        let actual = env.get(x);
        let ok = match (fact, actual) {
            (AbstractValue::Unknown, Some(_)) => true,
            (AbstractValue::Const(c), Some(a)) => c == a,
            (AbstractValue::NotConst(l), Some(a)) => *a != Value::from(*l),
            (_, None) => false,
        };
        if !ok {
            out.push(FactViolation {
                var: x.clone(),
                fact: fact.clone(),
                actual: actual.cloned(),
            });
        }
    }
    out
}
