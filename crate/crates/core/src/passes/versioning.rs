//! Creating versions and adding, strengthening and removing assumes.

use super::*;
use crate::wellformed::Scope;

fn identity_assume(f: &FunName, v: &VersionName, l: &Label, scope: &Scope, preds: Vec<Expr>) -> Instruction {
    Instruction::Assume {
        preds,
        target: DeoptTarget {
            func: f.clone(),
            version: v.clone(),
            label: l.clone(),
            varmap: Varmap::identity(scope),
        },
        frames: Vec::new(),
    }
}

/// Copies the active version of `f` into a new active version `new_name`.
/// Every copied assume deoptimizes to the old version at its own label with
/// an identity varmap. Each label in `seeds` gets an `assume true` in front
/// of its instruction.
pub fn create_version(p: &Program, f: &FunName, new_name: &VersionName, seeds: &[Label]) -> PassResult {
    let func = function(p, f)?;
    if func.version(new_name).is_some() {
        return Err(PassError::VersionExists(f.clone(), new_name.clone()));
    }
    let old = func
        .active()
        .ok_or_else(|| PassError::UnknownVersion(f.clone(), new_name.clone()))?;
    let scope = scopes(func, old)?;
    let mut body = old.body.clone();
    let mut rewrites = 0;
    let mut used = function_labels(func);
    for (l, ins) in &mut body.instrs {
        if let Instruction::Assume { preds, .. } = ins {
            if let Some(s) = scope.get(l) {
                *ins = identity_assume(f, &old.name, l, s, preds.clone());
                rewrites += 1;
            }
        }
    }
    for seed in seeds {
        let s = scope
            .get(seed)
            .ok_or_else(|| PassError::UnknownLabel(loc(func, old, seed)))?;
        let a = identity_assume(f, &old.name, seed, s, vec![Expr::lit(Literal::Bool(true))]);
        insert_before_taking_label(&mut body, seed, a, &mut used);
        rewrites += 1;
    }
    let mut out = p.clone();
    out.function_mut(f).expect("checked").versions.insert(
        0,
        Version {
            name: new_name.clone(),
            body,
        },
    );
    let report = PassReport {
        pass: "create-version".into(),
        changed: true,
        rewrites,
        notes: vec![format!("{f}.{new_name} deoptimizes to {f}.{}", old.name)],
    };
    Ok((out, report))
}

/// Inserts `assume true else f.prev.at [identity]` in `f.v` at `at`; the
/// instruction previously at `at` moves to a fresh label. `prev` is the
/// version listed right after `v`.
pub fn insert_assume(p: &Program, f: &FunName, v: &VersionName, at: &Label) -> PassResult {
    let (func, ver) = version(p, f, v)?;
    let prev = previous_version(func, v)?;
    let here = scopes(func, ver)?;
    let there = scopes(func, prev)?;
    let local = here
        .get(at)
        .ok_or_else(|| PassError::UnknownLabel(loc(func, ver, at)))?;
    let target = there
        .get(at)
        .ok_or_else(|| PassError::UnknownLabel(loc(func, prev, at)))?;
    if let Some(x) = target.difference(local).next() {
        return Err(PassError::OutOfScope(loc(func, ver, at), x.clone()));
    }
    let mut body = ver.body.clone();
    let a = identity_assume(f, &prev.name, at, target, vec![Expr::lit(Literal::Bool(true))]);
    let moved = insert_before_taking_label(&mut body, at, a, &mut function_labels(func));
    let report = PassReport::new("insert-assume", 1).note(format!("instruction moved to {moved}"));
    Ok((replace_body(p, f, v, body), report))
}

/// Appends `pred` to the predicate list of the assume at `at`.
pub fn inject_predicate(p: &Program, f: &FunName, v: &VersionName, at: &Label, pred: &Expr) -> PassResult {
    let (func, ver) = version(p, f, v)?;
    let l = loc(func, ver, at);
    match ver.body.get(at) {
        Some(Instruction::Assume { .. }) => {}
        Some(_) => return Err(PassError::NotAnAssume(l)),
        None => return Err(PassError::UnknownLabel(l)),
    }
    let scope = scopes(func, ver)?;
    let s = scope.get(at).ok_or_else(|| PassError::UnknownLabel(l.clone()))?;
    if let Some(x) = pred.vars().find(|x| !s.contains(*x)) {
        return Err(PassError::OutOfScope(l, x.clone()));
    }
    let mut body = ver.body.clone();
    if let Some(Instruction::Assume { preds, .. }) = body.get_mut(at) {
        preds.push(pred.clone());
    }
    Ok((replace_body(p, f, v, body), PassReport::new("inject-predicate", 1)))
}

/// Deletes an assume whose predicates are all literally `true`.
pub fn remove_trivial_assume(p: &Program, f: &FunName, v: &VersionName, at: &Label) -> PassResult {
    let (func, ver) = version(p, f, v)?;
    let l = loc(func, ver, at);
    match ver.body.get(at) {
        Some(Instruction::Assume { preds, .. }) => {
            if !preds.iter().all(Expr::is_true) {
                return Err(PassError::NotTrivial(l));
            }
        }
        Some(_) => return Err(PassError::NotAnAssume(l)),
        None => return Err(PassError::UnknownLabel(l)),
    }
    if externally_targeted(p, f, v).contains(at) {
        return Err(PassError::ExternallyTargeted(l));
    }
    let mut body = ver.body.clone();
    body.remove_instr(at);
    Ok((replace_body(p, f, v, body), PassReport::new("remove-trivial-assume", 1)))
}
