//! Composing an assume with the assume it deoptimizes to.

use super::*;

/// `e{VA(y)/y}`: replaces each variable `y` of `e` by `va(y)`. A bare
/// variable may be replaced by any expression; an operand only by a simple
/// one, since expressions do not nest.
pub fn substitute(e: &Expr, va: &Varmap) -> Result<Expr, SubstError> {
    if let Expr::Simple(SimpleExpr::Var(y)) = e {
        return va.get(y).cloned().ok_or_else(|| SubstError::Unbound(y.clone()));
    }
    let mut out = e.clone();
    for op in out.operands_mut() {
        if let SimpleExpr::Var(y) = op {
            match va.get(y) {
                Some(Expr::Simple(s)) => *op = s.clone(),
                Some(_) => return Err(SubstError::NonSimple(y.clone())),
                None => return Err(SubstError::Unbound(y.clone())),
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubstError {
    Unbound(Var),
    NonSimple(Var),
}

/// `outer ∘ inner`: each entry of `outer` with `inner` substituted in.
pub fn compose_varmaps(outer: &Varmap, inner: &Varmap) -> Result<Varmap, SubstError> {
    outer
        .0
        .iter()
        .map(|(x, e)| Ok((x.clone(), substitute(e, inner)?)))
        .collect::<Result<Vec<_>, _>>()
        .map(Varmap)
}

/// With `assume e1 else G.W.L [VA1]` at `at` and `assume e2 else H.U.M
/// [VA2]` at `G.W.L`, rewrites the first to `assume e1, e2{VA1} else H.U.M
/// [VA2 ∘ VA1]`. Extra frames of the second assume come first (they are
/// closer to the callee), followed by the frames of the first.
pub fn compose_assume(p: &Program, f: &FunName, v: &VersionName, at: &Label) -> PassResult {
    let (func, ver) = version(p, f, v)?;
    let here = loc(func, ver, at);
    let (e1, t1, fr1) = match ver.body.get(at) {
        Some(Instruction::Assume { preds, target, frames }) => (preds, target, frames),
        Some(_) => return Err(PassError::NotAnAssume(here)),
        None => return Err(PassError::UnknownLabel(here)),
    };
    let inner_loc = Loc::new(t1.func.clone(), t1.version.clone(), t1.label.clone());
    let (e2, t2, fr2) = match p.lookup(&t1.func, &t1.version, &t1.label) {
        Some(Instruction::Assume { preds, target, frames }) => (preds, target, frames),
        Some(_) => return Err(PassError::NotAnAssume(inner_loc)),
        None => return Err(PassError::BadDeoptTarget(inner_loc.to_string())),
    };
    let va1 = &t1.varmap;
    let err = |e: SubstError| match e {
        SubstError::NonSimple(y) => PassError::NonSimpleSubstitution(here.clone(), y),
        SubstError::Unbound(y) => PassError::BadDeoptTarget(format!("varmap at {here} does not bind `{y}`")),
    };
    let mut preds = e1.clone();
    for e in e2 {
        preds.push(substitute(e, va1).map_err(err)?);
    }
    let target = DeoptTarget {
        func: t2.func.clone(),
        version: t2.version.clone(),
        label: t2.label.clone(),
        varmap: compose_varmaps(&t2.varmap, va1).map_err(err)?,
    };
    let mut frames = Vec::new();
    for fr in fr2 {
        frames.push(ExtraFrame {
            varmap: compose_varmaps(&fr.varmap, va1).map_err(err)?,
            ..fr.clone()
        });
    }
    frames.extend(fr1.iter().cloned());
    let mut body = ver.body.clone();
    *body.get_mut(at).expect("checked") = Instruction::Assume { preds, target, frames };
    let report = PassReport::new("compose-assume", 1)
        .note(format!("now deoptimizes to {}.{}.{}", t2.func, t2.version, t2.label));
    Ok((replace_body(p, f, v, body), report))
}
