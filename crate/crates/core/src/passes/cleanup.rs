//! Branch folding, unreachable code elimination and dead variable removal.

use std::collections::HashSet;

use super::*;

/// Turns `branch true L1 L2` into `goto L1` and `branch false L1 L2` into
/// `goto L2`.
pub fn fold_branches(p: &Program, f: &FunName, v: &VersionName) -> PassResult {
    let (_, ver) = version(p, f, v)?;
    let mut body = ver.body.clone();
    let mut rewrites = 0;
    for (_, ins) in &mut body.instrs {
        if let Instruction::Branch(Expr::Simple(SimpleExpr::Lit(Literal::Bool(b))), l1, l2) = ins {
            let t = if *b { l1.clone() } else { l2.clone() };
            *ins = Instruction::Goto(t);
            rewrites += 1;
        }
    }
    Ok((replace_body(p, f, v, body), PassReport::new("fold-branches", rewrites)))
}

/// Labels reachable from the entry or from a label some assume deoptimizes to.
fn reachable(body: &InstructionStream, external: &HashSet<Label>) -> HashSet<Label> {
    let mut seen = HashSet::new();
    let mut stack: Vec<Label> = body.entry().cloned().into_iter().collect();
    stack.extend(external.iter().filter(|l| body.get(l).is_some()).cloned());
    while let Some(l) = stack.pop() {
        if seen.insert(l.clone()) {
            stack.extend(body.successors(&l));
        }
    }
    seen
}

/// Deletes instructions unreachable from the version entry and from every
/// deoptimization landing point, then deletes each `goto L` whose target is
/// the next instruction anyway. The final `stop` of a `main` version is kept
/// even when only deoptimization would reach it.
pub fn remove_unreachable(p: &Program, f: &FunName, v: &VersionName) -> PassResult {
    let (_, ver) = version(p, f, v)?;
    let external = externally_targeted(p, f, v);
    let mut body = ver.body.clone();
    let mut live = reachable(&body, &external);
    if *f == main_name() {
        if let Some((l, Instruction::Stop)) = body.instrs.last() {
            live.insert(l.clone());
        }
    }
    let before = body.len();
    body.instrs.retain(|(l, _)| live.contains(l));
    let mut rewrites = before - body.len();
    let mut gotos = 0;
    loop {
        let found = (0..body.len()).find(|&i| {
            let (l, ins) = &body.instrs[i];
            match (ins, body.instrs.get(i + 1)) {
                (Instruction::Goto(t), Some((next, _))) => t == next && !external.contains(l),
                _ => false,
            }
        });
        let Some(i) = found else { break };
        let l = body.instrs[i].0.clone();
        body.remove_instr(&l);
        gotos += 1;
    }
    rewrites += gotos;
    let mut report = PassReport::new("remove-unreachable", rewrites);
    if gotos > 0 {
        report = report.note(format!("{gotos} fall-through goto(s) removed"));
    }
    Ok((replace_body(p, f, v, body), report))
}

/// Removes `var x = e` when `e` cannot fail and `x` is never used, together
/// with the drops of `x`. Uses in varmaps and extra frames count. Repeats
/// until nothing changes.
pub fn remove_dead_vars(p: &Program, f: &FunName, v: &VersionName) -> PassResult {
    let (_, ver) = version(p, f, v)?;
    let external = externally_targeted(p, f, v);
    let mut body = ver.body.clone();
    let mut rewrites = 0;
    let mut pinned: HashSet<Var> = HashSet::new();
    loop {
        let used: HashSet<Var> = body
            .instrs
            .iter()
            .flat_map(|(_, ins)| ins.uses().into_iter().cloned())
            .collect();
        let dead: Option<Var> = body.instrs.iter().find_map(|(l, ins)| match ins {
            Instruction::VarDecl(x, e)
                if e.is_total() && !used.contains(x) && !pinned.contains(x) && !external.contains(l) =>
            {
                Some(x.clone())
            }
            _ => None,
        });
        let Some(x) = dead else { break };
        let doomed: Vec<Label> = body
            .instrs
            .iter()
            .filter(|(_, ins)| matches!(ins, Instruction::VarDecl(y, _) | Instruction::Drop(y) if *y == x))
            .map(|(l, _)| l.clone())
            .collect();
        if doomed.iter().any(|l| external.contains(l)) {
            pinned.insert(x);
            continue;
        }
        for l in &doomed {
            body.remove_instr(l);
            rewrites += 1;
        }
    }
    Ok((
        replace_body(p, f, v, body),
        PassReport::new("remove-dead-vars", rewrites),
    ))
}
