//! Program transformations. Every pass maps a program to a new program and
//! leaves its input untouched.

use std::collections::HashSet;
use std::fmt;

use crate::ir::*;
use crate::wellformed::{scope_at, ScopeConflict, ScopeMap};

mod cleanup;
mod compose;
mod constprop;
mod hoist;
mod inline;
mod motion;
mod pipeline;
mod versioning;

pub use cleanup::{fold_branches, remove_dead_vars, remove_unreachable};
pub use compose::{compose_assume, compose_varmaps, substitute};
pub use constprop::{
    abstract_eval, analyze_constants, check_facts, constant_propagate, AbstractEnv, AbstractValue, FactViolation,
};
pub use hoist::{available_at, hoist_predicate};
pub use inline::inline;
pub use motion::{move_assume, snapshot_var};
pub use pipeline::{
    apply_pass, format_pipeline, parse_pipeline, run_pipeline, PassSpec, PipelineError, PipelineParseError,
};
pub use versioning::{create_version, inject_predicate, insert_assume, remove_trivial_assume};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PassReport {
    pub pass: String,
    pub changed: bool,
    pub rewrites: usize,
    pub notes: Vec<String>,
}

impl PassReport {
    pub fn new(pass: &str, rewrites: usize) -> Self {
        PassReport {
            pass: pass.to_string(),
            changed: rewrites > 0,
            rewrites,
            notes: Vec::new(),
        }
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }
}

impl fmt::Display for PassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} ({} rewrite{})",
            self.pass,
            if self.changed { "changed" } else { "unchanged" },
            self.rewrites,
            if self.rewrites == 1 { "" } else { "s" }
        )?;
        for n in &self.notes {
            write!(f, "; {n}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PassError {
    #[error("unknown function `{0}`")]
    UnknownFunction(FunName),
    #[error("unknown version {0}.{1}")]
    UnknownVersion(FunName, VersionName),
    #[error("version {0}.{1} already exists")]
    VersionExists(FunName, VersionName),
    #[error("{0}.{1} has no previous version to deoptimize to")]
    NoPreviousVersion(FunName, VersionName),
    #[error("unknown label {0}")]
    UnknownLabel(Loc),
    #[error("{0} is not an assume")]
    NotAnAssume(Loc),
    #[error("{0} is not a call")]
    NotACall(Loc),
    #[error("cannot inline at {0}: {1}")]
    NotInlinable(Loc, String),
    #[error("{0} has no predicate number {1}")]
    PredIndexOutOfRange(Loc, usize),
    #[error("`{1}` is not in scope at {0}")]
    OutOfScope(Loc, Var),
    #[error("assume at {0} has a non-trivial predicate")]
    NotTrivial(Loc),
    #[error("cannot move assume at {0}: {1}")]
    MoveConditionViolated(Loc, String),
    #[error("snapshot `{1}` at {0} would not be in scope on every path")]
    SnapshotScope(Loc, Var),
    #[error("substituting `{1}` at {0} would nest an expression")]
    NonSimpleSubstitution(Loc, Var),
    #[error("predicate at {0} may fail at run time and cannot be hoisted")]
    PredicateMayFault(Loc),
    #[error("{0} is the target of another version's assume")]
    ExternallyTargeted(Loc),
    #[error("bad deoptimization target: {0}")]
    BadDeoptTarget(String),
    #[error(transparent)]
    Scope(#[from] ScopeConflict),
}

pub type PassResult = Result<(Program, PassReport), PassError>;

pub(crate) fn function<'a>(p: &'a Program, f: &FunName) -> Result<&'a Function, PassError> {
    p.function(f).ok_or_else(|| PassError::UnknownFunction(f.clone()))
}

pub(crate) fn version<'a>(
    p: &'a Program,
    f: &FunName,
    v: &VersionName,
) -> Result<(&'a Function, &'a Version), PassError> {
    let func = function(p, f)?;
    let ver = func
        .version(v)
        .ok_or_else(|| PassError::UnknownVersion(f.clone(), v.clone()))?;
    Ok((func, ver))
}

/// The version a pass on `v` deoptimizes to: the one listed right after it.
pub(crate) fn previous_version<'a>(func: &'a Function, v: &VersionName) -> Result<&'a Version, PassError> {
    let i = func
        .version_index(v)
        .ok_or_else(|| PassError::UnknownVersion(func.name.clone(), v.clone()))?;
    func.versions
        .get(i + 1)
        .ok_or_else(|| PassError::NoPreviousVersion(func.name.clone(), v.clone()))
}

pub(crate) fn scopes(func: &Function, ver: &Version) -> Result<ScopeMap, PassError> {
    Ok(scope_at(&func.params, &ver.body)?)
}

pub(crate) fn loc(f: &Function, v: &Version, l: &Label) -> Loc {
    Loc::new(f.name.clone(), v.name.clone(), l.clone())
}

pub(crate) fn replace_body(p: &Program, f: &FunName, v: &VersionName, body: InstructionStream) -> Program {
    let mut out = p.clone();
    out.version_mut(f, v).expect("version checked by caller").body = body;
    out
}

/// Labels of `f.v` that some assume or extra frame in the program targets.
pub(crate) fn externally_targeted(p: &Program, f: &FunName, v: &VersionName) -> HashSet<Label> {
    let mut out = HashSet::new();
    for func in &p.functions {
        for ver in &func.versions {
            for (_, ins) in &ver.body.instrs {
                if let Instruction::Assume { target, frames, .. } = ins {
                    if &target.func == f && &target.version == v {
                        out.insert(target.label.clone());
                    }
                    for fr in frames {
                        if &fr.func == f && &fr.version == v {
                            out.insert(fr.label.clone());
                        }
                    }
                }
            }
        }
    }
    out
}

/// Variable names used anywhere in the stream or as parameters.
pub(crate) fn used_names(func: &Function, body: &InstructionStream) -> HashSet<Var> {
    let mut used = body.var_names();
    used.extend(func.params.iter().cloned());
    used
}

/// Variables mentioned by an assume's predicates, varmap and frames.
pub(crate) fn assume_mentions(ins: &Instruction) -> HashSet<Var> {
    ins.exprs().into_iter().flat_map(|e| e.vars().cloned()).collect()
}

/// Labels of every version of `func`. A label names the same program point
/// across versions, so fresh labels must avoid all of them.
pub(crate) fn function_labels(func: &Function) -> HashSet<Label> {
    func.versions.iter().flat_map(|v| v.body.labels().cloned()).collect()
}

/// Moves the instruction at `label` to a fresh label and puts `new` at
/// `label`, so that every jump to `label` now reaches `new` first.
pub(crate) fn insert_before_taking_label(
    stream: &mut InstructionStream,
    label: &Label,
    new: Instruction,
    used: &mut HashSet<Label>,
) -> Label {
    used.extend(stream.labels().cloned());
    let fresh = fresh_label(label, used);
    used.insert(fresh.clone());
    let i = stream.position(label).expect("label checked by caller");
    stream.instrs[i].0 = fresh.clone();
    stream.instrs.insert(i, (label.clone(), new));
    fresh
}
