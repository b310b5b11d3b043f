//! Inlining of direct calls, with extra frames on every inherited assume.

use std::collections::{HashMap, HashSet};

use super::*;

fn vars_in_order(func: &Function, body: &InstructionStream) -> Vec<Var> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut add = |v: &Var| {
        if seen.insert(v.clone()) {
            out.push(v.clone());
        }
    };
    for p in &func.params {
        add(p);
    }
    for (_, ins) in &body.instrs {
        for e in ins.exprs() {
            for v in e.vars() {
                add(v);
            }
        }
        if let Some(x) = ins.writes() {
            add(x);
        }
        for v in ins.uses() {
            add(v);
        }
    }
    out
}

fn rename_expr(e: &mut Expr, map: &HashMap<Var, Var>) {
    for op in e.operands_mut() {
        if let SimpleExpr::Var(v) = op {
            if let Some(n) = map.get(v) {
                *v = n.clone();
            }
        }
    }
}

fn rename_instr(ins: &mut Instruction, vars: &HashMap<Var, Var>, labels: &HashMap<Label, Label>) {
    for e in ins.exprs_mut() {
        rename_expr(e, vars);
    }
    match ins {
        Instruction::VarDecl(x, _)
        | Instruction::Drop(x)
        | Instruction::Assign(x, _)
        | Instruction::ArrayAlloc(x, _)
        | Instruction::ArrayLit(x, _)
        | Instruction::ArrayStore(x, _, _)
        | Instruction::Read(x)
        | Instruction::Call(x, _, _) => {
            if let Some(n) = vars.get(x) {
                *x = n.clone();
            }
        }
        _ => {}
    }
    for t in ins.jump_targets_mut() {
        if let Some(n) = labels.get(t) {
            *t = n.clone();
        }
    }
}

/// Replaces `call res = &G(args)` at `at` in `f.v` by the body of G's active
/// version. Returns become `res <- e`, drops of the callee scope and a jump
/// to the instruction after the call. Every assume taken from G gets an
/// extra frame that resumes the version listed after `v` at that
/// instruction.
pub fn inline(p: &Program, f: &FunName, v: &VersionName, at: &Label) -> PassResult {
    let (func, ver) = version(p, f, v)?;
    let here = loc(func, ver, at);
    let (res, callee, args) = match ver.body.get(at) {
        Some(Instruction::Call(res, callee, args)) => (res, callee, args),
        Some(_) => return Err(PassError::NotACall(here)),
        None => return Err(PassError::UnknownLabel(here)),
    };
    let g = match callee {
        Expr::Simple(SimpleExpr::FunRef(g)) => g,
        _ => return Err(PassError::NotInlinable(here, "callee is not a function literal".into())),
    };
    let gfunc = p
        .function(g)
        .ok_or_else(|| PassError::NotInlinable(here.clone(), format!("unknown function `{g}`")))?;
    let gver = gfunc
        .active()
        .ok_or_else(|| PassError::NotInlinable(here.clone(), format!("`{g}` has no versions")))?;
    if gfunc.params.len() != args.len() {
        return Err(PassError::NotInlinable(here, "arity mismatch".into()));
    }
    let lret = ver
        .body
        .next_label(at)
        .cloned()
        .ok_or_else(|| PassError::NotInlinable(here.clone(), "call is the last instruction".into()))?;
    let prev = previous_version(func, v)?;
    if prev.body.get(&lret).is_none() {
        return Err(PassError::BadDeoptTarget(format!(
            "{}.{}.{lret} does not exist",
            f, prev.name
        )));
    }
    let caller_scope = scopes(func, ver)?;
    let local = caller_scope
        .get(&lret)
        .ok_or_else(|| PassError::NotInlinable(here.clone(), "return point is unreachable".into()))?;
    // The frame rebuilds the scope the previous version has at the return
    // point, so every variable there must exist here as well.
    let mut frame_scope = scopes(func, prev)?
        .get(&lret)
        .cloned()
        .ok_or_else(|| PassError::BadDeoptTarget(format!("{}.{}.{lret} is unreachable", f, prev.name)))?;
    frame_scope.remove(res);
    if let Some(x) = frame_scope.iter().find(|x| !local.contains(*x)) {
        return Err(PassError::OutOfScope(loc(func, ver, &lret), x.clone()));
    }
    let callee_scope = scopes(gfunc, gver)?;

    let mut used_vars = used_names(func, &ver.body);
    let mut var_map: HashMap<Var, Var> = HashMap::new();
    for x in vars_in_order(gfunc, &gver.body) {
        let n = fresh_var(&x, &used_vars);
        used_vars.insert(n.clone());
        var_map.insert(x, n);
    }
    let mut used_labels = function_labels(func);
    let mut label_map: HashMap<Label, Label> = HashMap::new();
    for l in gver.body.labels() {
        let n = fresh_label(l, &used_labels);
        used_labels.insert(n.clone());
        label_map.insert(l.clone(), n);
    }
    let fresh = |base: String, used: &mut HashSet<Label>| {
        let n = fresh_label(&Label::new(base), used);
        used.insert(n.clone());
        n
    };

    let new_frame = ExtraFrame {
        func: f.clone(),
        version: prev.name.clone(),
        label: lret.clone(),
        ret: res.clone(),
        varmap: Varmap::identity(&frame_scope),
    };

    let mut seq: Vec<(Label, Instruction)> = Vec::new();
    seq.push((at.clone(), Instruction::VarDecl(res.clone(), Expr::lit(Literal::Nil))));
    for (param, arg) in gfunc.params.iter().zip(args) {
        let l = fresh(format!("{at}_arg"), &mut used_labels);
        seq.push((l, Instruction::VarDecl(var_map[param].clone(), arg.clone())));
    }
    let mut rewrites = 0;
    for (l, ins) in &gver.body.instrs {
        let nl = label_map[l].clone();
        let mut ins = ins.clone();
        rename_instr(&mut ins, &var_map, &label_map);
        match ins {
            Instruction::Return(e) => {
                seq.push((nl.clone(), Instruction::Assign(res.clone(), e)));
                let scope = callee_scope.get(l).cloned().unwrap_or_default();
                for x in &scope {
                    let dl = fresh(format!("{nl}_drop"), &mut used_labels);
                    seq.push((dl, Instruction::Drop(var_map[x].clone())));
                }
                let gl = fresh(format!("{nl}_ret"), &mut used_labels);
                seq.push((gl, Instruction::Goto(lret.clone())));
            }
            Instruction::Assume {
                preds,
                target,
                mut frames,
            } => {
                frames.push(new_frame.clone());
                rewrites += 1;
                seq.push((nl, Instruction::Assume { preds, target, frames }));
            }
            other => seq.push((nl, other)),
        }
    }
    let i = ver.body.position(at).expect("checked");
    let mut body = ver.body.clone();
    let tail = body.instrs.split_off(i + 1);
    body.instrs.pop();
    body.instrs.extend(seq);
    body.instrs.extend(tail);
    let report = PassReport::new("inline", 1 + rewrites).note(format!("inlined {g}.{} at {at}", gver.name));
    Ok((replace_body(p, f, v, body), report))
}
