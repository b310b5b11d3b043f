//! Hoisting a predicate to an earlier assume.

use std::collections::HashMap;

use super::*;

fn kills(ins: &Instruction, e: &Expr) -> bool {
    if let Some(x) = ins.writes() {
        if e.mentions(x) {
            return true;
        }
    }
    e.reads_heap() && matches!(ins, Instruction::ArrayStore(..) | Instruction::Call(..))
}

fn generates(ins: &Instruction, e: &Expr) -> bool {
    matches!(ins, Instruction::Assume { preds, .. } if preds.contains(e))
}

/// Whether `e` has been checked by an assume on every path to `at` with no
/// intervening write to the variables (or heap) it reads.
pub fn available_at(body: &InstructionStream, e: &Expr, at: &Label) -> bool {
    if body.is_empty() {
        return false;
    }
    let index: HashMap<&Label, usize> = body.labels().enumerate().map(|(i, l)| (l, i)).collect();
    let n = body.len();
    let mut avail_in = vec![true; n];
    avail_in[0] = false;
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            let ins = &body.instrs[i].1;
            let out = if generates(ins, e) {
                true
            } else if kills(ins, e) {
                false
            } else {
                avail_in[i]
            };
            for s in body.successors_at(i) {
                let Some(&j) = index.get(&s) else { continue };
                if j != 0 && avail_in[j] && !out {
                    avail_in[j] = false;
                    changed = true;
                }
            }
        }
    }
    // Labels that are never reached keep the optimistic value; they are not
    // interesting here because `at` is always reachable when asked.
    index.get(at).is_some_and(|&i| avail_in[i])
}

/// Copies predicate `index` of the assume at `from` to the end of the
/// assume at `to`. When the predicate is then known to hold at `from` it is
/// removed there; otherwise the program is returned unchanged.
pub fn hoist_predicate(
    p: &Program,
    f: &FunName,
    v: &VersionName,
    from: &Label,
    index: usize,
    to: &Label,
) -> PassResult {
    let (func, ver) = version(p, f, v)?;
    let lfrom = loc(func, ver, from);
    let lto = loc(func, ver, to);
    let pred = match ver.body.get(from) {
        Some(Instruction::Assume { preds, .. }) => preds
            .get(index)
            .cloned()
            .ok_or_else(|| PassError::PredIndexOutOfRange(lfrom.clone(), index))?,
        Some(_) => return Err(PassError::NotAnAssume(lfrom)),
        None => return Err(PassError::UnknownLabel(lfrom)),
    };
    match ver.body.get(to) {
        Some(Instruction::Assume { .. }) => {}
        Some(_) => return Err(PassError::NotAnAssume(lto)),
        None => return Err(PassError::UnknownLabel(lto)),
    }
    let scope = scopes(func, ver)?;
    let s = scope.get(to).ok_or_else(|| PassError::UnknownLabel(lto.clone()))?;
    if let Some(x) = pred.vars().find(|x| !s.contains(*x)) {
        return Err(PassError::OutOfScope(lto, x.clone()));
    }
    if !pred.is_total() {
        return Err(PassError::PredicateMayFault(lfrom));
    }
    let mut body = ver.body.clone();
    if let Some(Instruction::Assume { preds, .. }) = body.get_mut(to) {
        preds.push(pred.clone());
    }
    let folds_true = analyze_constants(&func.params, &body)
        .get(from)
        .and_then(|env| abstract_eval(env, &pred))
        == Some(crate::interp::Value::Bool(true));
    if !(folds_true || available_at(&body, &pred, from)) {
        let report =
            PassReport::new("hoist-predicate", 0).note("predicate not known at the original site; rolled back");
        return Ok((p.clone(), report));
    }
    if let Some(Instruction::Assume { preds, .. }) = body.get_mut(from) {
        preds.remove(index);
    }
    Ok((replace_body(p, f, v, body), PassReport::new("hoist-predicate", 2)))
}
