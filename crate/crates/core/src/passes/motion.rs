//! Moving assumes forward and snapshotting variables they depend on.

use super::*;

/// Moves the assume at `at` past the next instruction. The next instruction
/// must only be reachable from the assume, must not write or drop anything
/// the assume mentions, and must not have effects. It may fault only when
/// every predicate of the assume is literally `true`. A `goto` moves the assume
/// to its target; a `branch` whose arms are only reachable from it copies
/// the assume into both arms. The deoptimization target is unchanged. The
/// assume keeps label `at` (the copy in the second arm gets a fresh label).
pub fn move_assume(p: &Program, f: &FunName, v: &VersionName, at: &Label) -> PassResult {
    let (func, ver) = version(p, f, v)?;
    let here = loc(func, ver, at);
    let assume = match ver.body.get(at) {
        Some(a @ Instruction::Assume { .. }) => a.clone(),
        Some(_) => return Err(PassError::NotAnAssume(here)),
        None => return Err(PassError::UnknownLabel(here)),
    };
    let violated = |why: &str| PassError::MoveConditionViolated(here.clone(), why.to_string());
    let m = ver
        .body
        .next_label(at)
        .cloned()
        .ok_or_else(|| violated("no next instruction"))?;
    let preds = ver.body.predecessor_map();
    let only_from = |l: &Label, from: &Label| preds.get(l).is_some_and(|ps| ps.len() == 1 && &ps[0] == from);
    if !only_from(&m, at) {
        return Err(violated("next instruction has other predecessors"));
    }
    let next = ver.body.get(&m).expect("label exists").clone();
    // An instruction that can fault may only run ahead of an assume that
    // never fails on its own; otherwise it could run where it was guarded.
    let trivial = matches!(&assume, Instruction::Assume { preds, .. } if preds.iter().all(Expr::is_true));
    if !trivial && may_fault(&next) {
        return Err(violated("next instruction may fail and the assume is not trivial"));
    }
    let mentioned = assume_mentions(&assume);
    let mut body = ver.body.clone();
    let i = body.position(at).expect("checked");
    match &next {
        Instruction::VarDecl(x, _) | Instruction::Assign(x, _) | Instruction::Drop(x) => {
            if mentioned.contains(x) {
                return Err(violated(&format!("next instruction changes `{x}`")));
            }
            body.redirect_jumps(at, &m);
            body.instrs.swap(i, i + 1);
        }
        Instruction::Goto(t) => {
            if t == at || !only_from(t, &m) {
                return Err(violated("goto target has other predecessors"));
            }
            let t = t.clone();
            body.redirect_jumps(at, &m);
            let (_, a) = body.instrs.remove(i);
            let j = body.position(&t).expect("goto target exists");
            body.instrs.insert(j, (at.clone(), a));
            *body.get_mut(&m).expect("exists") = Instruction::Goto(at.clone());
        }
        Instruction::Branch(c, t1, t2) => {
            if t1 == t2 || t1 == at || t2 == at || !only_from(t1, &m) || !only_from(t2, &m) {
                return Err(violated("branch arms have other predecessors"));
            }
            let (c, t1, t2) = (c.clone(), t1.clone(), t2.clone());
            let copy_label = fresh_label(at, &function_labels(func));
            body.redirect_jumps(at, &m);
            let (_, a) = body.instrs.remove(i);
            let j = body.position(&t1).expect("arm exists");
            body.instrs.insert(j, (at.clone(), a.clone()));
            let k = body.position(&t2).expect("arm exists");
            body.instrs.insert(k, (copy_label.clone(), a));
            *body.get_mut(&m).expect("exists") = Instruction::Branch(c, at.clone(), copy_label);
        }
        _ => return Err(violated("next instruction has effects")),
    }
    Ok((replace_body(p, f, v, body), PassReport::new("move-assume", 1)))
}

fn may_fault(ins: &Instruction) -> bool {
    match ins {
        Instruction::VarDecl(_, e) | Instruction::Assign(_, e) => !e.is_total(),
        Instruction::Branch(c, _, _) => !matches!(
            c,
            Expr::Simple(SimpleExpr::Lit(Literal::Bool(_))) | Expr::Binary(BinOp::Eq | BinOp::Neq, _, _)
        ),
        _ => false,
    }
}

/// Inserts `var x0 = x` before the assume at `at` (`x0` fresh) and makes
/// the assume's varmap and extra frames read `x0` instead of `x`. The
/// predicates are unchanged.
pub fn snapshot_var(p: &Program, f: &FunName, v: &VersionName, at: &Label, x: &Var) -> PassResult {
    let (func, ver) = version(p, f, v)?;
    let here = loc(func, ver, at);
    match ver.body.get(at) {
        Some(Instruction::Assume { .. }) => {}
        Some(_) => return Err(PassError::NotAnAssume(here)),
        None => return Err(PassError::UnknownLabel(here)),
    }
    let scope = scopes(func, ver)?;
    if !scope.get(at).is_some_and(|s| s.contains(x)) {
        return Err(PassError::OutOfScope(here, x.clone()));
    }
    let x0 = fresh_var(&Var::new(format!("{x}0")), &used_names(func, &ver.body));
    let mut body = ver.body.clone();
    let mut rewrites = 0;
    if let Some(Instruction::Assume { target, frames, .. }) = body.get_mut(at) {
        let vms = std::iter::once(&mut target.varmap).chain(frames.iter_mut().map(|fr| &mut fr.varmap));
        for vm in vms {
            for e in vm.exprs_mut() {
                for op in e.operands_mut() {
                    if matches!(op, SimpleExpr::Var(y) if y == x) {
                        *op = SimpleExpr::Var(x0.clone());
                        rewrites += 1;
                    }
                }
            }
        }
    }
    let snap_label = fresh_label(&Label::new(format!("{at}_snap")), &function_labels(func));
    body.redirect_jumps(at, &snap_label);
    let i = body.position(at).expect("checked");
    body.instrs.insert(
        i,
        (
            snap_label,
            Instruction::VarDecl(x0.clone(), Expr::Simple(SimpleExpr::Var(x.clone()))),
        ),
    );
    // The snapshot stays in scope to the end of the version, so it must not
    // reach a join, a loop header or a label another assume deoptimizes to.
    let after = scope_at(&func.params, &body).map_err(|_| PassError::SnapshotScope(here.clone(), x0.clone()))?;
    let targeted = externally_targeted(p, f, v);
    if after.iter().any(|(l, s)| s.contains(&x0) && targeted.contains(l)) {
        return Err(PassError::SnapshotScope(here, x0));
    }
    let report = PassReport::new("snapshot-var", rewrites + 1).note(format!("`{x}` saved in `{x0}`"));
    Ok((replace_body(p, f, v, body), report))
}
