//! Pass pipelines: a text format with one invocation per line, and a runner
//! that re-checks the program after every stage.
//!
//! ```text
//! create-version fn=size version=Vo
//! insert-assume fn=size version=Vo at=L2
//! inject-predicate fn=size version=Vo at=L2 pred="x != nil"
//! constant-propagate fn=size version=Vo
//! ```
//!
//! `version` may be omitted for every pass except `create-version`; it then
//! means the active version at the time the stage runs.

use std::collections::BTreeMap;
use std::fmt;

use super::*;
use crate::text::{expr_to_string, parse_expr};
use crate::wellformed::{check_program, Diagnostic};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PassSpec {
    CreateVersion {
        func: FunName,
        version: VersionName,
        seeds: Vec<Label>,
    },
    InsertAssume {
        func: FunName,
        version: Option<VersionName>,
        at: Label,
    },
    InjectPredicate {
        func: FunName,
        version: Option<VersionName>,
        at: Label,
        pred: Expr,
    },
    ConstantPropagate {
        func: FunName,
        version: Option<VersionName>,
    },
    FoldBranches {
        func: FunName,
        version: Option<VersionName>,
    },
    RemoveUnreachable {
        func: FunName,
        version: Option<VersionName>,
    },
    RemoveDeadVars {
        func: FunName,
        version: Option<VersionName>,
    },
    Inline {
        func: FunName,
        version: Option<VersionName>,
        at: Label,
    },
    MoveAssume {
        func: FunName,
        version: Option<VersionName>,
        at: Label,
    },
    SnapshotVar {
        func: FunName,
        version: Option<VersionName>,
        at: Label,
        var: Var,
    },
    HoistPredicate {
        func: FunName,
        version: Option<VersionName>,
        from: Label,
        index: usize,
        to: Label,
    },
    RemoveTrivialAssume {
        func: FunName,
        version: Option<VersionName>,
        at: Label,
    },
    ComposeAssume {
        func: FunName,
        version: Option<VersionName>,
        at: Label,
    },
}

impl PassSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PassSpec::CreateVersion { .. } => "create-version",
            PassSpec::InsertAssume { .. } => "insert-assume",
            PassSpec::InjectPredicate { .. } => "inject-predicate",
            PassSpec::ConstantPropagate { .. } => "constant-propagate",
            PassSpec::FoldBranches { .. } => "fold-branches",
            PassSpec::RemoveUnreachable { .. } => "remove-unreachable",
            PassSpec::RemoveDeadVars { .. } => "remove-dead-vars",
            PassSpec::Inline { .. } => "inline",
            PassSpec::MoveAssume { .. } => "move-assume",
            PassSpec::SnapshotVar { .. } => "snapshot-var",
            PassSpec::HoistPredicate { .. } => "hoist-predicate",
            PassSpec::RemoveTrivialAssume { .. } => "remove-trivial-assume",
            PassSpec::ComposeAssume { .. } => "compose-assume",
        }
    }

    pub fn func(&self) -> &FunName {
        match self {
            PassSpec::CreateVersion { func, .. }
            | PassSpec::InsertAssume { func, .. }
            | PassSpec::InjectPredicate { func, .. }
            | PassSpec::ConstantPropagate { func, .. }
            | PassSpec::FoldBranches { func, .. }
            | PassSpec::RemoveUnreachable { func, .. }
            | PassSpec::RemoveDeadVars { func, .. }
            | PassSpec::Inline { func, .. }
            | PassSpec::MoveAssume { func, .. }
            | PassSpec::SnapshotVar { func, .. }
            | PassSpec::HoistPredicate { func, .. }
            | PassSpec::RemoveTrivialAssume { func, .. }
            | PassSpec::ComposeAssume { func, .. } => func,
        }
    }

    fn version_arg(&self) -> Option<&VersionName> {
        match self {
            PassSpec::CreateVersion { version, .. } => Some(version),
            PassSpec::InsertAssume { version, .. }
            | PassSpec::InjectPredicate { version, .. }
            | PassSpec::ConstantPropagate { version, .. }
            | PassSpec::FoldBranches { version, .. }
            | PassSpec::RemoveUnreachable { version, .. }
            | PassSpec::RemoveDeadVars { version, .. }
            | PassSpec::Inline { version, .. }
            | PassSpec::MoveAssume { version, .. }
            | PassSpec::SnapshotVar { version, .. }
            | PassSpec::HoistPredicate { version, .. }
            | PassSpec::RemoveTrivialAssume { version, .. }
            | PassSpec::ComposeAssume { version, .. } => version.as_ref(),
        }
    }
}

fn quote(s: &str) -> String {
    if s.is_empty() || s.contains(char::is_whitespace) || s.contains('"') {
        format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    } else {
        s.to_string()
    }
}

impl fmt::Display for PassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fn={}", self.name(), self.func())?;
        if let Some(v) = self.version_arg() {
            write!(f, " version={v}")?;
        }
        match self {
            PassSpec::CreateVersion { seeds, .. } if !seeds.is_empty() => {
                let s: Vec<&str> = seeds.iter().map(|l| l.as_str()).collect();
                write!(f, " seeds={}", s.join(","))
            }
            PassSpec::InsertAssume { at, .. }
            | PassSpec::Inline { at, .. }
            | PassSpec::MoveAssume { at, .. }
            | PassSpec::RemoveTrivialAssume { at, .. }
            | PassSpec::ComposeAssume { at, .. } => write!(f, " at={at}"),
            PassSpec::InjectPredicate { at, pred, .. } => {
                write!(f, " at={at} pred={}", quote(&expr_to_string(pred)))
            }
            PassSpec::SnapshotVar { at, var, .. } => write!(f, " at={at} var={var}"),
            PassSpec::HoistPredicate { from, index, to, .. } => {
                write!(f, " from={from} index={index} to={to}")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("pipeline line {line}: {message}")]
pub struct PipelineParseError {
    pub line: usize,
    pub message: String,
}

fn split_words(line: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    let mut has_word = false;
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                in_quotes = !in_quotes;
                has_word = true;
            }
            '\\' if in_quotes => match chars.next() {
                Some(n) => cur.push(n),
                None => return Err("dangling `\\`".into()),
            },
            c if c.is_whitespace() && !in_quotes => {
                if has_word {
                    out.push(std::mem::take(&mut cur));
                    has_word = false;
                }
            }
            ';' if !in_quotes => {
                if has_word {
                    out.push(std::mem::take(&mut cur));
                    has_word = false;
                }
                out.push(";".to_string());
            }
            '#' if !in_quotes && !has_word => break,
            c => {
                cur.push(c);
                has_word = true;
            }
        }
    }
    if in_quotes {
        return Err("unterminated quote".into());
    }
    if has_word {
        out.push(cur);
    }
    Ok(out)
}

fn parse_line(words: &[String]) -> Result<PassSpec, String> {
    let name = words[0].as_str();
    let mut args: BTreeMap<String, String> = BTreeMap::new();
    for w in &words[1..] {
        let (k, v) = w
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, found `{w}`"))?;
        if args.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("argument `{k}` given twice"));
        }
    }
    let mut take = |k: &str| args.remove(k);
    let func = FunName::new(take("fn").ok_or("missing argument `fn`")?);
    let version = take("version").map(VersionName::new);
    let mut need = |k: &str| take(k).ok_or_else(|| format!("missing argument `{k}`"));
    let spec = match name {
        "create-version" => PassSpec::CreateVersion {
            func,
            version: version.ok_or("missing argument `version`")?,
            seeds: take("seeds")
                .map(|s| s.split(',').filter(|x| !x.is_empty()).map(Label::new).collect())
                .unwrap_or_default(),
        },
        "insert-assume" => PassSpec::InsertAssume {
            func,
            version,
            at: Label::new(need("at")?),
        },
        "inject-predicate" => {
            let at = Label::new(need("at")?);
            let src = need("pred")?;
            let pred = parse_expr(&src).map_err(|e| format!("bad predicate `{src}`: {e}"))?;
            PassSpec::InjectPredicate {
                func,
                version,
                at,
                pred,
            }
        }
        "constant-propagate" => PassSpec::ConstantPropagate { func, version },
        "fold-branches" => PassSpec::FoldBranches { func, version },
        "remove-unreachable" => PassSpec::RemoveUnreachable { func, version },
        "remove-dead-vars" => PassSpec::RemoveDeadVars { func, version },
        "inline" => PassSpec::Inline {
            func,
            version,
            at: Label::new(need("at")?),
        },
        "move-assume" => PassSpec::MoveAssume {
            func,
            version,
            at: Label::new(need("at")?),
        },
        "snapshot-var" => {
            let at = Label::new(need("at")?);
            PassSpec::SnapshotVar {
                func,
                version,
                at,
                var: Var::new(need("var")?),
            }
        }
        "hoist-predicate" => {
            let from = Label::new(need("from")?);
            let index = need("index")?
                .parse()
                .map_err(|_| "argument `index` must be a non-negative integer".to_string())?;
            PassSpec::HoistPredicate {
                func,
                version,
                from,
                index,
                to: Label::new(need("to")?),
            }
        }
        "remove-trivial-assume" => PassSpec::RemoveTrivialAssume {
            func,
            version,
            at: Label::new(need("at")?),
        },
        "compose-assume" => PassSpec::ComposeAssume {
            func,
            version,
            at: Label::new(need("at")?),
        },
        other => return Err(format!("unknown pass `{other}`")),
    };
    if let Some(k) = args.keys().next() {
        return Err(format!("unexpected argument `{k}` for {name}"));
    }
    Ok(spec)
}

/// Parses a pipeline. Blank lines and `#` comments are ignored; `;` also
/// separates invocations so that pipelines can be given on one line.
pub fn parse_pipeline(src: &str) -> Result<Vec<PassSpec>, PipelineParseError> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let words = split_words(raw).map_err(|message| PipelineParseError { line, message })?;
        for group in words.split(|w| w == ";") {
            if group.is_empty() {
                continue;
            }
            out.push(parse_line(group).map_err(|message| PipelineParseError { line, message })?);
        }
    }
    Ok(out)
}

pub fn format_pipeline(specs: &[PassSpec]) -> String {
    specs.iter().map(|s| format!("{s}\n")).collect()
}

/// Applies a single stage. A missing version means the active one.
pub fn apply_pass(p: &Program, spec: &PassSpec) -> PassResult {
    let resolve = |f: &FunName, v: &Option<VersionName>| -> Result<VersionName, PassError> {
        match v {
            Some(v) => Ok(v.clone()),
            None => function(p, f)?
                .active()
                .map(|v| v.name.clone())
                .ok_or_else(|| PassError::UnknownFunction(f.clone())),
        }
    };
    match spec {
        PassSpec::CreateVersion { func, version, seeds } => create_version(p, func, version, seeds),
        PassSpec::InsertAssume { func, version, at } => insert_assume(p, func, &resolve(func, version)?, at),
        PassSpec::InjectPredicate {
            func,
            version,
            at,
            pred,
        } => inject_predicate(p, func, &resolve(func, version)?, at, pred),
        PassSpec::ConstantPropagate { func, version } => constant_propagate(p, func, &resolve(func, version)?),
        PassSpec::FoldBranches { func, version } => fold_branches(p, func, &resolve(func, version)?),
        PassSpec::RemoveUnreachable { func, version } => remove_unreachable(p, func, &resolve(func, version)?),
        PassSpec::RemoveDeadVars { func, version } => remove_dead_vars(p, func, &resolve(func, version)?),
        PassSpec::Inline { func, version, at } => inline(p, func, &resolve(func, version)?, at),
        PassSpec::MoveAssume { func, version, at } => move_assume(p, func, &resolve(func, version)?, at),
        PassSpec::SnapshotVar { func, version, at, var } => snapshot_var(p, func, &resolve(func, version)?, at, var),
        PassSpec::HoistPredicate {
            func,
            version,
            from,
            index,
            to,
        } => hoist_predicate(p, func, &resolve(func, version)?, from, *index, to),
        PassSpec::RemoveTrivialAssume { func, version, at } => {
            remove_trivial_assume(p, func, &resolve(func, version)?, at)
        }
        PassSpec::ComposeAssume { func, version, at } => compose_assume(p, func, &resolve(func, version)?, at),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PipelineError {
    #[error("stage {stage} ({pass}) failed: {error}")]
    PassFailed {
        stage: usize,
        pass: String,
        error: PassError,
    },
    #[error("pipeline aborted after stage {stage} ({pass}): {} diagnostic(s), first: {}", .diagnostics.len(), .diagnostics.first().map(|d| d.to_string()).unwrap_or_default())]
    Aborted {
        stage: usize,
        pass: String,
        diagnostics: Vec<Diagnostic>,
    },
}

impl PipelineError {
    pub fn stage(&self) -> usize {
        match self {
            PipelineError::PassFailed { stage, .. } | PipelineError::Aborted { stage, .. } => *stage,
        }
    }
}

/// Applies the stages in order, checking well-formedness after each one.
/// Stages are numbered from 1.
pub fn run_pipeline(p: &Program, specs: &[PassSpec]) -> Result<(Program, Vec<PassReport>), PipelineError> {
    let mut cur = p.clone();
    let mut reports = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let stage = i + 1;
        let (next, report) = apply_pass(&cur, spec).map_err(|error| PipelineError::PassFailed {
            stage,
            pass: spec.to_string(),
            error,
        })?;
        let diagnostics = check_program(&next);
        if !diagnostics.is_empty() {
            return Err(PipelineError::Aborted {
                stage,
                pass: spec.to_string(),
                diagnostics,
            });
        }
        cur = next;
        reports.push(report);
    }
    Ok((cur, reports))
}
