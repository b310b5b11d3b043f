//! Static well-formedness: scopes, labels, deoptimization targets.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::ir::*;

pub type Scope = BTreeSet<Var>;

/// Variables in scope on entry to each reachable label.
pub type ScopeMap = HashMap<Label, Scope>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagCode {
    MainMissingStop,
    DuplicateDecl,
    UnknownFunction,
    ScopeMismatch,
    UnboundVariable,
    BadDeoptTarget,
    VarmapScopeMismatch,
    FallThroughEnd,
    UnknownLabel,
    /// Structural problems: duplicate names, empty versions, `main` with
    /// parameters.
    MalformedProgram,
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub func: FunName,
    pub version: Option<VersionName>,
    pub label: Option<Label>,
    pub message: String,
}

impl Diagnostic {
    pub fn location(&self) -> String {
        let mut s = self.func.to_string();
        if let Some(v) = &self.version {
            s.push('.');
            s.push_str(v.as_str());
            if let Some(l) = &self.label {
                s.push('.');
                s.push_str(l.as_str());
            }
        }
        s
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.location(), self.code, self.message)
    }
}

/// Two incoming edges disagree about the variables in scope.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("scope mismatch at {label}: {{{}}} vs {{{}}}", fmt_scope(.first), fmt_scope(.second))]
pub struct ScopeConflict {
    pub label: Label,
    pub first: Scope,
    pub second: Scope,
}

pub fn fmt_scope(s: &Scope) -> String {
    s.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(", ")
}

/// Scope after executing `ins` with `scope` on entry.
pub fn transfer(ins: &Instruction, scope: &Scope) -> Scope {
    let mut out = scope.clone();
    match ins {
        Instruction::Drop(x) => {
            out.remove(x);
        }
        other => {
            if let Some(x) = other.declares() {
                out.insert(x.clone());
            }
        }
    }
    out
}

/// Worklist order used by [`scope_analysis`]. The result does not depend on
/// it; it exists so that tests can check exactly that.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Traversal {
    Fifo,
    Lifo,
}

/// Forward scope dataflow seeded with `params` at the entry. Returns the
/// scope map together with every merge conflict found.
pub fn scope_analysis(params: &[Var], stream: &InstructionStream, order: Traversal) -> (ScopeMap, Vec<ScopeConflict>) {
    let mut map: ScopeMap = HashMap::new();
    let mut conflicts = Vec::new();
    let Some(entry) = stream.entry() else {
        return (map, conflicts);
    };
    let index: HashMap<&Label, usize> = stream.labels().enumerate().map(|(i, l)| (l, i)).collect();
    map.insert(entry.clone(), params.iter().cloned().collect());
    let mut work: VecDeque<usize> = VecDeque::from([0]);
    let mut reported: HashSet<Label> = HashSet::new();
    while let Some(i) = match order {
        Traversal::Fifo => work.pop_front(),
        Traversal::Lifo => work.pop_back(),
    } {
        let (label, ins) = &stream.instrs[i];
        let out = transfer(ins, &map[label]);
        for s in stream.successors_at(i) {
            let Some(&j) = index.get(&s) else { continue };
            match map.get(&s) {
                None => {
                    map.insert(s.clone(), out.clone());
                    work.push_back(j);
                }
                Some(existing) if *existing != out => {
                    if reported.insert(s.clone()) {
                        conflicts.push(ScopeConflict {
                            label: s.clone(),
                            first: existing.clone(),
                            second: out.clone(),
                        });
                    }
                }
                Some(_) => {}
            }
        }
    }
    (map, conflicts)
}

/// Scope on entry to every reachable label, or the first merge conflict.
pub fn scope_at(params: &[Var], stream: &InstructionStream) -> Result<ScopeMap, ScopeConflict> {
    let (map, mut conflicts) = scope_analysis(params, stream, Traversal::Fifo);
    if conflicts.is_empty() {
        Ok(map)
    } else {
        Err(conflicts.remove(0))
    }
}

struct Checker<'p> {
    program: &'p Program,
    scopes: HashMap<(usize, usize), ScopeMap>,
    diags: Vec<Diagnostic>,
}

impl<'p> Checker<'p> {
    fn push(&mut self, code: DiagCode, f: &Function, v: Option<&Version>, l: Option<&Label>, msg: String) {
        self.diags.push(Diagnostic {
            code,
            func: f.name.clone(),
            version: v.map(|v| v.name.clone()),
            label: l.cloned(),
            message: msg,
        });
    }

    fn target_scope(&self, func: &FunName, version: &VersionName) -> Option<&ScopeMap> {
        let fi = self.program.functions.iter().position(|f| &f.name == func)?;
        let vi = self.program.functions[fi].version_index(version)?;
        self.scopes.get(&(fi, vi))
    }

    fn check_uses(&mut self, f: &Function, v: &Version, l: &Label, ins: &Instruction, scope: &Scope) {
        let mut seen = HashSet::new();
        let mut uses: Vec<&Var> = ins.uses();
        if let Instruction::Drop(x) = ins {
            uses.push(x);
        }
        for u in uses {
            if !scope.contains(u) && seen.insert(u.clone()) {
                self.push(
                    DiagCode::UnboundVariable,
                    f,
                    Some(v),
                    Some(l),
                    format!("`{u}` is not in scope"),
                );
            }
        }
        if let Some(x) = ins.declares() {
            if scope.contains(x) {
                self.push(
                    DiagCode::DuplicateDecl,
                    f,
                    Some(v),
                    Some(l),
                    format!("`{x}` is declared while already in scope"),
                );
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn check_varmap_against(
        &mut self,
        f: &Function,
        v: &Version,
        l: &Label,
        what: &str,
        vm: &Varmap,
        extra: Option<&Var>,
        target: Option<&Scope>,
    ) {
        let mut keys = HashSet::new();
        for (k, _) in &vm.0 {
            if !keys.insert(k.clone()) {
                self.push(
                    DiagCode::VarmapScopeMismatch,
                    f,
                    Some(v),
                    Some(l),
                    format!("{what} binds `{k}` twice"),
                );
            }
        }
        let Some(target) = target else {
            self.push(
                DiagCode::VarmapScopeMismatch,
                f,
                Some(v),
                Some(l),
                format!("{what} resumes at a label that is unreachable in its version"),
            );
            return;
        };
        let mut dom: Scope = vm.domain();
        if let Some(r) = extra {
            if dom.contains(r) {
                self.push(
                    DiagCode::VarmapScopeMismatch,
                    f,
                    Some(v),
                    Some(l),
                    format!("{what} binds its return variable `{r}`"),
                );
            }
            dom.insert(r.clone());
        }
        if &dom != target {
            self.push(
                DiagCode::VarmapScopeMismatch,
                f,
                Some(v),
                Some(l),
                format!(
                    "{what} binds {{{}}} but the scope there is {{{}}}",
                    fmt_scope(&dom),
                    fmt_scope(target)
                ),
            );
        }
    }

    fn check_assume(&mut self, f: &Function, v: &Version, l: &Label, target: &DeoptTarget, frames: &[ExtraFrame]) {
        match self.program.lookup(&target.func, &target.version, &target.label) {
            None => self.push(
                DiagCode::BadDeoptTarget,
                f,
                Some(v),
                Some(l),
                format!(
                    "deoptimization target {}.{}.{} does not exist",
                    target.func, target.version, target.label
                ),
            ),
            Some(_) => {
                let ts = self
                    .target_scope(&target.func, &target.version)
                    .and_then(|m| m.get(&target.label))
                    .cloned();
                self.check_varmap_against(f, v, l, "varmap", &target.varmap, None, ts.as_ref());
            }
        }
        for fr in frames {
            match self.program.lookup(&fr.func, &fr.version, &fr.label) {
                None => self.push(
                    DiagCode::BadDeoptTarget,
                    f,
                    Some(v),
                    Some(l),
                    format!("extra frame {}.{}.{} does not exist", fr.func, fr.version, fr.label),
                ),
                Some(_) => {
                    let ts = self
                        .target_scope(&fr.func, &fr.version)
                        .and_then(|m| m.get(&fr.label))
                        .cloned();
                    let what = format!("extra frame {}.{}.{}", fr.func, fr.version, fr.label);
                    self.check_varmap_against(f, v, l, &what, &fr.varmap, Some(&fr.ret), ts.as_ref());
                }
            }
        }
    }

    fn check_version(&mut self, fi: usize, vi: usize) {
        let f = &self.program.functions[fi];
        let v = &f.versions[vi];
        let body = &v.body;
        if body.is_empty() {
            self.push(
                DiagCode::MalformedProgram,
                f,
                Some(v),
                None,
                "version has no instructions".into(),
            );
            return;
        }
        let labels = body.label_set();
        let mut seen_labels = HashSet::new();
        let mut declared: HashSet<Var> = HashSet::new();
        for p in &f.params {
            if !declared.insert(p.clone()) {
                self.push(
                    DiagCode::DuplicateDecl,
                    f,
                    Some(v),
                    None,
                    format!("parameter `{p}` is listed twice"),
                );
            }
        }
        let scopes = self.scopes.get(&(fi, vi)).cloned().unwrap_or_default();
        let (_, conflicts) = scope_analysis(&f.params, body, Traversal::Fifo);
        let conflict_at: HashMap<Label, ScopeConflict> = conflicts.into_iter().map(|c| (c.label.clone(), c)).collect();

        for (l, ins) in &body.instrs {
            if !seen_labels.insert(l.clone()) {
                self.push(
                    DiagCode::MalformedProgram,
                    f,
                    Some(v),
                    Some(l),
                    format!("duplicate label `{l}`"),
                );
            }
            if let Some(c) = conflict_at.get(l) {
                self.push(DiagCode::ScopeMismatch, f, Some(v), Some(l), c.to_string());
            }
            if let Some(x) = ins.declares() {
                if !declared.insert(x.clone()) {
                    self.push(
                        DiagCode::DuplicateDecl,
                        f,
                        Some(v),
                        Some(l),
                        format!("`{x}` is declared more than once in this version"),
                    );
                }
            }
            for t in ins.jump_targets() {
                if !labels.contains(t) {
                    self.push(
                        DiagCode::UnknownLabel,
                        f,
                        Some(v),
                        Some(l),
                        format!("unknown label `{t}`"),
                    );
                }
            }
            for e in ins.exprs() {
                for op in e.operands() {
                    if let SimpleExpr::FunRef(g) = op {
                        if self.program.function(g).is_none() {
                            self.push(
                                DiagCode::UnknownFunction,
                                f,
                                Some(v),
                                Some(l),
                                format!("unknown function `&{g}`"),
                            );
                        }
                    }
                }
            }
            if let Some(scope) = scopes.get(l) {
                self.check_uses(f, v, l, ins, scope);
            }
            if let Instruction::Assume { target, frames, .. } = ins {
                self.check_assume(f, v, l, target, frames);
            }
        }
        let (last_label, last) = body.instrs.last().expect("non-empty");
        if last.falls_through() {
            self.push(
                DiagCode::FallThroughEnd,
                f,
                Some(v),
                Some(last_label),
                "control falls off the end of the version".into(),
            );
        }
        if f.name == main_name() && *last != Instruction::Stop {
            self.push(
                DiagCode::MainMissingStop,
                f,
                Some(v),
                Some(last_label),
                "every version of main must end with stop".into(),
            );
        }
    }
}

/// Runs every static check. Diagnostics come out in program order.
pub fn check_program(p: &Program) -> Vec<Diagnostic> {
    let mut scopes = HashMap::new();
    for (fi, f) in p.functions.iter().enumerate() {
        for (vi, v) in f.versions.iter().enumerate() {
            let (map, _) = scope_analysis(&f.params, &v.body, Traversal::Fifo);
            scopes.insert((fi, vi), map);
        }
    }
    let mut c = Checker {
        program: p,
        scopes,
        diags: Vec::new(),
    };
    let main = main_name();
    let mut fnames = HashSet::new();
    match p.function(&main) {
        None => c.diags.push(Diagnostic {
            code: DiagCode::UnknownFunction,
            func: main.clone(),
            version: None,
            label: None,
            message: "program has no main function".into(),
        }),
        Some(m) if !m.params.is_empty() => c.push(
            DiagCode::MalformedProgram,
            m,
            None,
            None,
            "main takes no parameters".into(),
        ),
        _ => {}
    }
    for (fi, f) in p.functions.iter().enumerate() {
        if !fnames.insert(f.name.clone()) {
            c.push(
                DiagCode::MalformedProgram,
                f,
                None,
                None,
                format!("duplicate function `{}`", f.name),
            );
        }
        if f.versions.is_empty() {
            c.push(
                DiagCode::MalformedProgram,
                f,
                None,
                None,
                "function has no versions".into(),
            );
        }
        let mut vnames = HashSet::new();
        for (vi, v) in f.versions.iter().enumerate() {
            if !vnames.insert(v.name.clone()) {
                c.push(
                    DiagCode::MalformedProgram,
                    f,
                    Some(v),
                    None,
                    format!("duplicate version `{}`", v.name),
                );
            }
            c.check_version(fi, vi);
        }
    }
    c.diags
}

pub fn is_well_formed(p: &Program) -> bool {
    check_program(p).is_empty()
}
