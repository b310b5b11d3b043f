//! Seeded generation of programs, input scripts and pass pipelines, and the
//! end-to-end property that ties them together.
//!
//! Generated programs are typed by construction (ints, booleans, int
//! arrays of known length, and read results of unknown type), only call
//! functions further down the list, and only loop a bounded number of
//! times, so most runs stop well within the fuel.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equivalence::{check_transparency, diff_programs, DiffResult, Verdict};
use crate::interp::ForcePolicy;
use crate::ir::*;
use crate::passes::{self, format_pipeline, run_pipeline, PassSpec};
use crate::text::{parse_inputs, print_inputs, print_program};
use crate::wellformed::{check_program, scope_at};

/// Relative weights of the statements drawn inside a block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub print: u32,
    pub decl: u32,
    pub assign: u32,
    pub array: u32,
    pub branch: u32,
    pub loop_: u32,
    pub call: u32,
    pub read: u32,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            print: 4,
            decl: 5,
            assign: 3,
            array: 2,
            branch: 2,
            loop_: 1,
            call: 2,
            read: 2,
        }
    }
}

/// Relative weights of the pipeline stages after the first one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PassWeights {
    pub create_version: u32,
    pub insert_assume: u32,
    pub inject_predicate: u32,
    pub constant_propagate: u32,
    pub fold_branches: u32,
    pub remove_unreachable: u32,
    pub remove_dead_vars: u32,
    pub snapshot_and_move: u32,
    pub hoist_predicate: u32,
    pub compose_assume: u32,
    pub remove_trivial_assume: u32,
    pub inline: u32,
}

impl Default for PassWeights {
    fn default() -> Self {
        PassWeights {
            create_version: 1,
            insert_assume: 4,
            inject_predicate: 4,
            constant_propagate: 3,
            fold_branches: 2,
            remove_unreachable: 2,
            remove_dead_vars: 2,
            snapshot_and_move: 3,
            hoist_predicate: 2,
            compose_assume: 2,
            remove_trivial_assume: 2,
            inline: 2,
        }
    }
}

impl PassWeights {
    /// Only `create-version` stages.
    pub fn none() -> Self {
        PassWeights {
            create_version: 0,
            insert_assume: 0,
            inject_predicate: 0,
            constant_propagate: 0,
            fold_branches: 0,
            remove_unreachable: 0,
            remove_dead_vars: 0,
            snapshot_and_move: 0,
            hoist_predicate: 0,
            compose_assume: 0,
            remove_trivial_assume: 0,
            inline: 0,
        }
    }

    fn table(&self) -> [(Stage, u32); 12] {
        [
            (Stage::CreateVersion, self.create_version),
            (Stage::InsertAssume, self.insert_assume),
            (Stage::InjectPredicate, self.inject_predicate),
            (Stage::ConstantPropagate, self.constant_propagate),
            (Stage::FoldBranches, self.fold_branches),
            (Stage::RemoveUnreachable, self.remove_unreachable),
            (Stage::RemoveDeadVars, self.remove_dead_vars),
            (Stage::SnapshotAndMove, self.snapshot_and_move),
            (Stage::HoistPredicate, self.hoist_predicate),
            (Stage::ComposeAssume, self.compose_assume),
            (Stage::RemoveTrivialAssume, self.remove_trivial_assume),
            (Stage::Inline, self.inline),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    /// Functions besides `main`.
    pub max_functions: usize,
    /// Versions per function, the base version included.
    pub max_versions: usize,
    /// Statements per block.
    pub max_instrs: usize,
    pub max_array_len: usize,
    /// Literals used for inputs and injected predicates, in source syntax.
    pub literal_pool: Vec<String>,
    pub weights: Weights,
    pub max_call_depth: usize,
    /// Input scripts hold this many literals per static `read`.
    pub input_slack: usize,
    pub scripts_per_case: usize,
    pub fuel: u64,
    /// Pipeline stages after the initial `create-version`.
    pub max_stages: usize,
    pub passes: PassWeights,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_functions: 3,
            max_versions: 2,
            max_instrs: 8,
            max_array_len: 4,
            literal_pool: ["0", "1", "2", "3", "5", "-1", "nil"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            weights: Weights::default(),
            max_call_depth: 2,
            input_slack: 2,
            scripts_per_case: 3,
            fuel: 100_000,
            max_stages: 8,
            passes: PassWeights::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid fuzz configuration: {0}")]
pub struct ConfigError(pub String);

impl GenConfig {
    pub fn with_seed(seed: u64) -> Self {
        GenConfig {
            seed,
            ..GenConfig::default()
        }
    }

    pub fn pool(&self) -> Result<Vec<Literal>, ConfigError> {
        let mut out = Vec::new();
        for s in &self.literal_pool {
            let lits = parse_inputs(s).map_err(|e| ConfigError(format!("literal `{s}`: {e}")))?;
            out.extend(lits);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bounds = [
            ("max_functions", self.max_functions),
            ("max_versions", self.max_versions),
            ("max_instrs", self.max_instrs),
            ("max_call_depth", self.max_call_depth),
            ("input_slack", self.input_slack),
            ("scripts_per_case", self.scripts_per_case),
        ];
        for (name, v) in bounds {
            if v < 1 {
                return Err(ConfigError(format!("{name} must be at least 1")));
            }
        }
        if self.fuel < 1 {
            return Err(ConfigError("fuel must be at least 1".into()));
        }
        let w = &self.weights;
        if [w.print, w.decl, w.assign, w.array, w.branch, w.loop_, w.call, w.read]
            .iter()
            .all(|&x| x == 0)
        {
            return Err(ConfigError("statement weights are all zero".into()));
        }
        if self.pool()?.is_empty() {
            return Err(ConfigError("literal_pool is empty".into()));
        }
        Ok(())
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

const PROGRAM_STREAM: u64 = 1;
const INPUT_STREAM: u64 = 2;
const PIPELINE_STREAM: u64 = 3;

// ---------------------------------------------------------------------------
// Programs

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ty {
    Int,
    Bool,
    /// Result of `read`: any literal.
    Any,
    Arr(usize),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Stmt {
    Print,
    Decl,
    Assign,
    Array,
    Branch,
    Loop,
    Call,
    Read,
}

struct Helper {
    name: FunName,
    arity: usize,
    level: usize,
}

struct BodyGen<'a> {
    rng: &'a mut ChaCha8Rng,
    cfg: &'a GenConfig,
    helpers: &'a [Helper],
    level: usize,
    is_main: bool,
    instrs: Vec<(Label, Instruction)>,
    scope: Vec<(Var, Ty, bool)>,
    next_var: usize,
    next_label: usize,
    loop_depth: usize,
}

impl<'a> BodyGen<'a> {
    fn label(&mut self) -> Label {
        let l = Label::new(format!("L{}", self.next_label));
        self.next_label += 1;
        l
    }

    fn emit(&mut self, ins: Instruction) -> Label {
        let l = self.label();
        self.instrs.push((l.clone(), ins));
        l
    }

    fn emit_at(&mut self, l: Label, ins: Instruction) {
        self.instrs.push((l, ins));
    }

    fn var(&mut self, prefix: &str) -> Var {
        let v = Var::new(format!("{prefix}{}", self.next_var));
        self.next_var += 1;
        v
    }

    fn vars_of(&self, pred: impl Fn(Ty) -> bool) -> Vec<Var> {
        self.scope
            .iter()
            .filter(|(_, t, _)| pred(*t))
            .map(|(v, _, _)| v.clone())
            .collect()
    }

    fn small_int(&mut self) -> i64 {
        self.rng.gen_range(-2..=6)
    }

    fn int_operand(&mut self) -> SimpleExpr {
        let vars = self.vars_of(|t| t == Ty::Int);
        if !vars.is_empty() && self.rng.gen_bool(0.7) {
            SimpleExpr::Var(vars.choose(self.rng).unwrap().clone())
        } else {
            SimpleExpr::Lit(Literal::Int(self.small_int()))
        }
    }

    fn bool_operand(&mut self) -> SimpleExpr {
        let vars = self.vars_of(|t| t == Ty::Bool);
        if !vars.is_empty() && self.rng.gen_bool(0.7) {
            SimpleExpr::Var(vars.choose(self.rng).unwrap().clone())
        } else {
            SimpleExpr::Lit(Literal::Bool(self.rng.gen()))
        }
    }

    fn pool_literal(&mut self) -> Literal {
        let pool = self.cfg.pool().unwrap_or_default();
        pool.choose(self.rng).copied().unwrap_or(Literal::Int(0))
    }

    fn int_expr(&mut self) -> Expr {
        let arrays: Vec<(Var, usize)> = self
            .scope
            .iter()
            .filter_map(|(v, t, _)| match t {
                Ty::Arr(n) => Some((v.clone(), *n)),
                _ => None,
            })
            .collect();
        match self.rng.gen_range(0..10) {
            0..=2 => Expr::Simple(self.int_operand()),
            3..=6 => {
                let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Add]
                    .choose(self.rng)
                    .unwrap();
                Expr::Binary(op, self.int_operand(), self.int_operand())
            }
            7 => {
                let d = *[1i64, 2, 3, -2].choose(self.rng).unwrap();
                Expr::Binary(BinOp::Div, self.int_operand(), SimpleExpr::Lit(Literal::Int(d)))
            }
            _ if !arrays.is_empty() => {
                let (a, n) = arrays.choose(self.rng).unwrap().clone();
                if n == 0 || self.rng.gen_bool(0.3) {
                    Expr::Length(SimpleExpr::Var(a))
                } else {
                    let i = self.rng.gen_range(0..n) as i64;
                    Expr::ArrayRead(SimpleExpr::Var(a), SimpleExpr::Lit(Literal::Int(i)))
                }
            }
            _ => Expr::Unary(UnOp::Neg, self.int_operand()),
        }
    }

    fn bool_expr(&mut self) -> Expr {
        let any = self.vars_of(|t| t == Ty::Any);
        match self.rng.gen_range(0..10) {
            0..=4 => {
                let op = *[BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Neq]
                    .choose(self.rng)
                    .unwrap();
                Expr::Binary(op, self.int_operand(), self.int_operand())
            }
            5 => Expr::Unary(UnOp::Not, self.bool_operand()),
            6 => {
                let op = *[BinOp::And, BinOp::Or].choose(self.rng).unwrap();
                Expr::Binary(op, self.bool_operand(), self.bool_operand())
            }
            7 | 8 if !any.is_empty() => {
                let x = any.choose(self.rng).unwrap().clone();
                let op = *[BinOp::Eq, BinOp::Neq].choose(self.rng).unwrap();
                let lit = self.pool_literal();
                Expr::Binary(op, SimpleExpr::Var(x), SimpleExpr::Lit(lit))
            }
            _ => Expr::Simple(self.bool_operand()),
        }
    }

    fn pick_stmt(&mut self, depth: usize) -> Option<Stmt> {
        let w = &self.cfg.weights;
        let can_read = self.is_main && self.loop_depth == 0;
        let callable = self.helpers.iter().any(|h| h.level > self.level);
        let nest = depth < 2;
        let table = [
            (Stmt::Print, w.print),
            (Stmt::Decl, w.decl),
            (
                Stmt::Assign,
                if self.vars_of(|t| t == Ty::Int).iter().any(|v| self.mutable(v)) {
                    w.assign
                } else {
                    0
                },
            ),
            (Stmt::Array, w.array),
            (Stmt::Branch, if nest { w.branch } else { 0 }),
            (Stmt::Loop, if nest { w.loop_ } else { 0 }),
            (Stmt::Call, if callable { w.call } else { 0 }),
            (Stmt::Read, if can_read { w.read } else { 0 }),
        ];
        let total: u32 = table.iter().map(|(_, w)| w).sum();
        if total == 0 {
            return None;
        }
        let mut k = self.rng.gen_range(0..total);
        for (s, w) in table {
            if k < w {
                return Some(s);
            }
            k -= w;
        }
        None
    }

    fn mutable(&self, v: &Var) -> bool {
        self.scope.iter().any(|(x, _, m)| x == v && *m)
    }

    fn declare(&mut self, v: Var, t: Ty, mutable: bool) {
        self.scope.push((v, t, mutable));
    }

    /// Drops everything declared after the scope had length `mark`.
    fn close(&mut self, mark: usize) {
        while self.scope.len() > mark {
            let (v, _, _) = self.scope.pop().unwrap();
            self.emit(Instruction::Drop(v));
        }
    }

    fn block(&mut self, depth: usize) {
        let n = self.rng.gen_range(1..=self.cfg.max_instrs);
        for _ in 0..n {
            let Some(s) = self.pick_stmt(depth) else { return };
            self.stmt(s, depth);
        }
    }

    fn stmt(&mut self, s: Stmt, depth: usize) {
        match s {
            Stmt::Print => {
                let e = if self.rng.gen_bool(0.75) {
                    self.int_expr()
                } else {
                    self.bool_expr()
                };
                let e = match self.vars_of(|t| t == Ty::Any).choose(self.rng) {
                    Some(x) if self.rng.gen_bool(0.2) => Expr::Simple(SimpleExpr::Var(x.clone())),
                    _ => e,
                };
                self.emit(Instruction::Print(e));
            }
            Stmt::Decl => {
                if self.rng.gen_bool(0.8) {
                    let v = self.var("v");
                    let e = self.int_expr();
                    self.emit(Instruction::VarDecl(v.clone(), e));
                    self.declare(v, Ty::Int, true);
                } else {
                    let v = self.var("b");
                    let e = self.bool_expr();
                    self.emit(Instruction::VarDecl(v.clone(), e));
                    self.declare(v, Ty::Bool, false);
                }
            }
            Stmt::Assign => {
                let vars: Vec<Var> = self
                    .vars_of(|t| t == Ty::Int)
                    .into_iter()
                    .filter(|v| self.mutable(v))
                    .collect();
                let x = vars.choose(self.rng).unwrap().clone();
                let e = self.int_expr();
                self.emit(Instruction::Assign(x, e));
            }
            Stmt::Array => {
                let n = self.rng.gen_range(0..=self.cfg.max_array_len);
                let a = self.var("a");
                if self.rng.gen_bool(0.5) {
                    let elems = (0..n).map(|_| Expr::Simple(self.int_operand())).collect();
                    self.emit(Instruction::ArrayLit(a.clone(), elems));
                } else {
                    self.emit(Instruction::ArrayAlloc(a.clone(), Expr::int(n as i64)));
                    for i in 0..n {
                        let e = Expr::Simple(self.int_operand());
                        self.emit(Instruction::ArrayStore(a.clone(), Expr::int(i as i64), e));
                    }
                }
                self.declare(a.clone(), Ty::Arr(n), false);
                if n > 0 && self.rng.gen_bool(0.5) {
                    let i = self.rng.gen_range(0..n) as i64;
                    let e = Expr::Simple(self.int_operand());
                    self.emit(Instruction::ArrayStore(a, Expr::int(i), e));
                }
            }
            Stmt::Branch => {
                let c = self.bool_expr();
                let (lt, le, lj) = (self.label(), self.label(), self.label());
                self.emit(Instruction::Branch(c, lt.clone(), le.clone()));
                let mark = self.scope.len();
                for arm in [lt, le] {
                    let start = self.instrs.len();
                    self.block(depth + 1);
                    self.close(mark);
                    self.emit(Instruction::Goto(lj.clone()));
                    // The arm's first instruction takes the arm label.
                    self.instrs[start].0 = arm;
                }
                let n = self.rng.gen_range(0..100);
                self.emit_at(lj, Instruction::Print(Expr::int(n)));
            }
            Stmt::Loop => {
                let i = self.var("i");
                let bound = self.rng.gen_range(0..=3i64);
                self.emit(Instruction::VarDecl(i.clone(), Expr::int(0)));
                self.declare(i.clone(), Ty::Int, false);
                let (lh, lb, lx) = (self.label(), self.label(), self.label());
                let cond = Expr::Binary(
                    BinOp::Lt,
                    SimpleExpr::Var(i.clone()),
                    SimpleExpr::Lit(Literal::Int(bound)),
                );
                self.emit_at(lh.clone(), Instruction::Branch(cond, lb.clone(), lx.clone()));
                let mark = self.scope.len();
                let start = self.instrs.len();
                self.loop_depth += 1;
                self.block(depth + 1);
                self.loop_depth -= 1;
                self.close(mark);
                self.emit(Instruction::Assign(
                    i.clone(),
                    Expr::Binary(BinOp::Add, SimpleExpr::Var(i.clone()), SimpleExpr::Lit(Literal::Int(1))),
                ));
                self.emit(Instruction::Goto(lh));
                self.instrs[start].0 = lb;
                self.emit_at(lx, Instruction::Drop(i.clone()));
                self.scope.retain(|(v, _, _)| v != &i);
            }
            Stmt::Call => {
                let targets: Vec<&Helper> = self.helpers.iter().filter(|h| h.level > self.level).collect();
                let h = *targets.choose(self.rng).unwrap();
                let (name, arity) = (h.name.clone(), h.arity);
                let args = (0..arity).map(|_| Expr::Simple(self.int_operand())).collect();
                let r = self.var("r");
                self.emit(Instruction::Call(
                    r.clone(),
                    Expr::Simple(SimpleExpr::FunRef(name)),
                    args,
                ));
                self.declare(r, Ty::Int, true);
            }
            Stmt::Read => {
                let r = self.var("x");
                self.emit(Instruction::VarDecl(r.clone(), Expr::lit(Literal::Nil)));
                self.emit(Instruction::Read(r.clone()));
                self.declare(r, Ty::Any, false);
            }
        }
    }
}

/// A random well-formed program, deterministic in `cfg.seed`.
pub fn gen_program(cfg: &GenConfig) -> Program {
    let mut rng = rng_for(cfg.seed, PROGRAM_STREAM);
    let n_helpers = rng.gen_range(0..=cfg.max_functions);
    let helpers: Vec<Helper> = (1..=n_helpers)
        .map(|i| Helper {
            name: FunName::new(format!("f{i}")),
            arity: rng.gen_range(0..=2),
            level: i.min(cfg.max_call_depth),
        })
        .collect();
    let mut functions = Vec::new();
    for (idx, level) in std::iter::once((None, 0)).chain(helpers.iter().enumerate().map(|(i, h)| (Some(i), h.level))) {
        let params: Vec<Var> = match idx {
            Some(i) => (0..helpers[i].arity).map(|k| Var::new(format!("p{k}"))).collect(),
            None => Vec::new(),
        };
        let mut g = BodyGen {
            rng: &mut rng,
            cfg,
            helpers: &helpers,
            level,
            is_main: idx.is_none(),
            instrs: Vec::new(),
            scope: params.iter().map(|p| (p.clone(), Ty::Int, false)).collect(),
            next_var: 0,
            next_label: 0,
            loop_depth: 0,
        };
        g.block(0);
        if idx.is_none() {
            g.emit(Instruction::Stop);
        } else {
            let e = g.int_expr();
            g.emit(Instruction::Return(e));
        }
        let name = match idx {
            Some(i) => helpers[i].name.clone(),
            None => main_name(),
        };
        functions.push(Function {
            name,
            params,
            versions: vec![Version {
                name: VersionName::new("V0"),
                body: InstructionStream::new(g.instrs),
            }],
        });
    }
    let mut p = Program { functions };
    add_versions(&mut p, cfg, &mut rng);
    p
}

/// A total predicate over a variable in `scope`, or a literal if the scope
/// is empty.
fn random_predicate(rng: &mut ChaCha8Rng, pool: &[Literal], scope: &[Var]) -> Expr {
    let lit = pool.choose(rng).copied().unwrap_or(Literal::Int(0));
    match scope.choose(rng) {
        Some(x) => {
            let op = if rng.gen_bool(0.5) { BinOp::Eq } else { BinOp::Neq };
            Expr::Binary(op, SimpleExpr::Var(x.clone()), SimpleExpr::Lit(lit))
        }
        None => Expr::lit(Literal::Bool(true)),
    }
}

/// Extra versions: copies of the active version with a few assumes into
/// it, carrying random predicates.
fn add_versions(p: &mut Program, cfg: &GenConfig, rng: &mut ChaCha8Rng) {
    let pool = cfg.pool().unwrap_or_default();
    let names: Vec<FunName> = p.functions.iter().map(|f| f.name.clone()).collect();
    for f in names {
        let extra = rng.gen_range(0..cfg.max_versions);
        for k in 1..=extra {
            let v = VersionName::new(format!("V{k}"));
            let Ok((q, _)) = passes::create_version(p, &f, &v, &[]) else {
                break;
            };
            *p = q;
            let labels: Vec<Label> = p.version(&f, &v).unwrap().body.labels().cloned().collect();
            for _ in 0..rng.gen_range(1..=2) {
                let at = labels.choose(rng).unwrap().clone();
                let Ok((q, _)) = passes::insert_assume(p, &f, &v, &at) else {
                    continue;
                };
                let func = q.function(&f).unwrap();
                let body = &func.version(&v).unwrap().body;
                let scope: Vec<Var> = scope_at(&func.params, body)
                    .ok()
                    .and_then(|s| s.get(&at).cloned())
                    .map(|s| s.into_iter().collect())
                    .unwrap_or_default();
                let pred = random_predicate(rng, &pool, &scope);
                *p = match passes::inject_predicate(&q, &f, &v, &at, &pred) {
                    Ok((r, _)) => r,
                    Err(_) => q,
                };
            }
        }
    }
}

/// An input script for `p`: `input_slack` literals per static `read`.
pub fn gen_inputs(cfg: &GenConfig, p: &Program, rng: &mut impl Rng) -> Vec<Literal> {
    let reads = p
        .functions
        .iter()
        .flat_map(|f| f.versions.iter().take(1))
        .flat_map(|v| v.body.instrs.iter())
        .filter(|(_, i)| matches!(i, Instruction::Read(_)))
        .count();
    let pool = cfg.pool().unwrap_or_default();
    (0..reads * cfg.input_slack)
        .map(|_| pool.choose(rng).copied().unwrap_or(Literal::Int(0)))
        .collect()
}

/// `cfg.scripts_per_case` scripts, deterministic in the seed.
pub fn gen_scripts(cfg: &GenConfig, p: &Program) -> Vec<Vec<Literal>> {
    let mut rng = rng_for(cfg.seed, INPUT_STREAM);
    (0..cfg.scripts_per_case)
        .map(|_| gen_inputs(cfg, p, &mut rng))
        .collect()
}

// ---------------------------------------------------------------------------
// Pipelines

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    CreateVersion,
    InsertAssume,
    InjectPredicate,
    ConstantPropagate,
    FoldBranches,
    RemoveUnreachable,
    RemoveDeadVars,
    SnapshotAndMove,
    HoistPredicate,
    ComposeAssume,
    RemoveTrivialAssume,
    Inline,
}

fn fresh_version_name(func: &Function) -> VersionName {
    let n = fresh_name("O", |s| func.versions.iter().any(|v| v.name.as_str() == s));
    VersionName::new(n)
}

fn assume_labels(body: &InstructionStream) -> Vec<Label> {
    body.instrs
        .iter()
        .filter(|(_, i)| i.is_assume())
        .map(|(l, _)| l.clone())
        .collect()
}

/// Candidate stages of kind `stage` on the active version of a random
/// function; returns the specs to try in order.
fn propose(stage: Stage, p: &Program, pool: &[Literal], rng: &mut ChaCha8Rng) -> Option<Vec<PassSpec>> {
    let func = p.functions.choose(rng)?;
    let f = func.name.clone();
    let ver = func.active()?;
    let version = Some(ver.name.clone());
    let body = &ver.body;
    let labels: Vec<Label> = body.labels().cloned().collect();
    let assumes = assume_labels(body);
    let pick = |rng: &mut ChaCha8Rng, ls: &[Label]| ls.choose(rng).cloned();
    let spec = match stage {
        Stage::CreateVersion => {
            let seeds = match pick(rng, &labels) {
                Some(l) if rng.gen_bool(0.5) => vec![l],
                _ => Vec::new(),
            };
            vec![PassSpec::CreateVersion {
                func: f.clone(),
                version: fresh_version_name(func),
                seeds,
            }]
        }
        Stage::InsertAssume => vec![PassSpec::InsertAssume {
            func: f,
            version,
            at: pick(rng, &labels)?,
        }],
        Stage::InjectPredicate => {
            let at = pick(rng, &assumes)?;
            let scope: Vec<Var> = scope_at(&func.params, body).ok()?.get(&at)?.iter().cloned().collect();
            vec![PassSpec::InjectPredicate {
                func: f,
                version,
                at,
                pred: random_predicate(rng, pool, &scope),
            }]
        }
        Stage::ConstantPropagate => vec![PassSpec::ConstantPropagate { func: f, version }],
        Stage::FoldBranches => vec![PassSpec::FoldBranches { func: f, version }],
        Stage::RemoveUnreachable => vec![PassSpec::RemoveUnreachable { func: f, version }],
        Stage::RemoveDeadVars => vec![PassSpec::RemoveDeadVars { func: f, version }],
        Stage::SnapshotAndMove => {
            let at = pick(rng, &assumes)?;
            let mut out = Vec::new();
            if let Some(Instruction::Assume { target, .. }) = body.get(&at) {
                let vars: Vec<Var> = target.varmap.exprs().flat_map(|e| e.vars().cloned()).collect();
                if let Some(x) = vars.choose(rng) {
                    if rng.gen_bool(0.5) {
                        out.push(PassSpec::SnapshotVar {
                            func: f.clone(),
                            version: version.clone(),
                            at: at.clone(),
                            var: x.clone(),
                        });
                    }
                }
            }
            out.push(PassSpec::MoveAssume { func: f, version, at });
            out
        }
        Stage::HoistPredicate => {
            let from = pick(rng, &assumes)?;
            let to = pick(rng, &assumes)?;
            let n = match body.get(&from) {
                Some(Instruction::Assume { preds, .. }) => preds.len(),
                _ => 0,
            };
            if n == 0 {
                return None;
            }
            vec![PassSpec::HoistPredicate {
                func: f,
                version,
                from,
                index: rng.gen_range(0..n),
                to,
            }]
        }
        Stage::ComposeAssume => vec![PassSpec::ComposeAssume {
            func: f,
            version,
            at: pick(rng, &assumes)?,
        }],
        Stage::RemoveTrivialAssume => vec![PassSpec::RemoveTrivialAssume {
            func: f,
            version,
            at: pick(rng, &assumes)?,
        }],
        Stage::Inline => {
            let calls: Vec<Label> = body
                .instrs
                .iter()
                .filter(|(_, i)| matches!(i, Instruction::Call(_, Expr::Simple(SimpleExpr::FunRef(_)), _)))
                .map(|(l, _)| l.clone())
                .collect();
            vec![PassSpec::Inline {
                func: f,
                version,
                at: pick(rng, &calls)?,
            }]
        }
    };
    Some(spec)
}

/// A random pipeline for `p`. It always starts with `create-version`.
/// Candidate stages are tried as they are drawn and dropped when the pass
/// rejects its arguments; well-formedness of the result is not consulted,
/// so [`run_pipeline`] still checks every stage.
pub fn gen_pipeline(cfg: &GenConfig, p: &Program) -> Vec<PassSpec> {
    let mut rng = rng_for(cfg.seed, PIPELINE_STREAM);
    let pool = cfg.pool().unwrap_or_default();
    let mut cur = p.clone();
    let mut out = Vec::new();
    let try_apply = |cur: &mut Program, specs: Vec<PassSpec>, out: &mut Vec<PassSpec>| {
        let mut next = cur.clone();
        for s in &specs {
            match passes::apply_pass(&next, s) {
                Ok((q, _)) => next = q,
                Err(_) => return false,
            }
        }
        *cur = next;
        out.extend(specs);
        true
    };
    for _ in 0..8 {
        if let Some(specs) = propose(Stage::CreateVersion, &cur, &pool, &mut rng) {
            if try_apply(&mut cur, specs, &mut out) {
                break;
            }
        }
    }
    let table = cfg.passes.table();
    let total: u32 = table.iter().map(|(_, w)| w).sum();
    if total == 0 {
        return out;
    }
    let stages = rng.gen_range(0..=cfg.max_stages);
    for _ in 0..stages {
        // A few attempts per stage: drawn arguments are often invalid.
        for _ in 0..4 {
            let mut k = rng.gen_range(0..total);
            let mut stage = Stage::CreateVersion;
            for (s, w) in table {
                if k < w {
                    stage = s;
                    break;
                }
                k -= w;
            }
            let Some(specs) = propose(stage, &cur, &pool, &mut rng) else {
                continue;
            };
            if try_apply(&mut cur, specs, &mut out) {
                break;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// End-to-end cases

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    IllFormed,
    Pipeline,
    Diff,
    Transparency,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::IllFormed => "generated program is ill-formed",
            FailureKind::Pipeline => "pipeline failed",
            FailureKind::Diff => "optimized program diverges",
            FailureKind::Transparency => "forced deoptimization diverges",
        })
    }
}

#[derive(Clone, Debug)]
pub struct CaseReport {
    pub seed: u64,
    pub program: Program,
    pub pipeline: Vec<PassSpec>,
    pub optimized: Option<Program>,
    pub scripts: Vec<Vec<Literal>>,
    /// Verdicts of the before/after diff, one per script.
    pub verdicts: Vec<Verdict>,
    /// Verdicts of the forced-deoptimization check on the result.
    pub transparency: Vec<Verdict>,
    pub failure: Option<(FailureKind, String)>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn equal(&self) -> usize {
        self.verdicts.iter().filter(|v| **v == Verdict::Equal).count()
    }

    pub fn inconclusive(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| **v == Verdict::BothFuelExhaustedPrefixEqual)
            .count()
    }

    pub fn report_text(&self) -> String {
        let mut s = format!("seed {}\n", self.seed);
        match &self.failure {
            None => s.push_str("result: pass\n"),
            Some((k, detail)) => {
                s.push_str(&format!("result: FAIL: {k}\n"));
                s.push_str(detail);
                if !detail.ends_with('\n') {
                    s.push('\n');
                }
            }
        }
        if let Some(q) = &self.optimized {
            s.push_str("\n-- optimized program\n");
            s.push_str(&print_program(q));
        }
        s
    }

    /// Writes `dir/case-<seed>/` with the program, pipeline, inputs and
    /// report, and returns the directory.
    pub fn write_reproducer(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let d = dir.join(format!("case-{}", self.seed));
        std::fs::create_dir_all(&d)?;
        std::fs::write(d.join("program.sourir"), print_program(&self.program))?;
        std::fs::write(d.join("pipeline.txt"), format_pipeline(&self.pipeline))?;
        let inputs: String = self.scripts.iter().map(|s| print_inputs(s)).collect();
        std::fs::write(d.join("inputs.txt"), inputs)?;
        std::fs::write(d.join("report.txt"), self.report_text())?;
        Ok(d)
    }
}

fn first_failure(results: &[DiffResult], scripts: &[Vec<Literal>]) -> Option<String> {
    results
        .iter()
        .zip(scripts)
        .find(|(r, _)| !r.verdict.passes())
        .map(|(r, s)| format!("inputs: {}{r}", print_inputs(s)))
}

/// Generates and checks one case. `cfg.seed` is the case seed.
pub fn run_case(cfg: &GenConfig) -> CaseReport {
    let program = gen_program(cfg);
    let scripts = gen_scripts(cfg, &program);
    let mut report = CaseReport {
        seed: cfg.seed,
        program: program.clone(),
        pipeline: Vec::new(),
        optimized: None,
        scripts: scripts.clone(),
        verdicts: Vec::new(),
        transparency: Vec::new(),
        failure: None,
    };
    let diags = check_program(&program);
    if !diags.is_empty() {
        let text: String = diags.iter().map(|d| format!("{d}\n")).collect();
        report.failure = Some((FailureKind::IllFormed, text));
        return report;
    }
    report.pipeline = gen_pipeline(cfg, &program);
    let optimized = match run_pipeline(&program, &report.pipeline) {
        Ok((q, _)) => q,
        Err(e) => {
            report.failure = Some((FailureKind::Pipeline, e.to_string()));
            return report;
        }
    };
    let diffs: Vec<DiffResult> = scripts
        .iter()
        .map(|s| diff_programs(&program, &optimized, s, cfg.fuel))
        .collect();
    let forced: Vec<DiffResult> = scripts
        .iter()
        .map(|s| check_transparency(&optimized, s, cfg.fuel, ForcePolicy::All))
        .collect();
    report.verdicts = diffs.iter().map(|d| d.verdict.clone()).collect();
    report.transparency = forced.iter().map(|d| d.verdict.clone()).collect();
    report.optimized = Some(optimized);
    if let Some(detail) = first_failure(&diffs, &scripts) {
        report.failure = Some((FailureKind::Diff, detail));
    } else if let Some(detail) = first_failure(&forced, &scripts) {
        report.failure = Some((FailureKind::Transparency, detail));
    }
    report
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FuzzSummary {
    pub cases: usize,
    pub well_formed: usize,
    pub pipelines_ok: usize,
    pub scripts: usize,
    pub equal: usize,
    pub inconclusive: usize,
    pub transparency_ok: usize,
    pub failed_seeds: Vec<u64>,
}

impl FuzzSummary {
    pub fn from_reports(reports: &[CaseReport]) -> Self {
        let mut s = FuzzSummary {
            cases: reports.len(),
            ..FuzzSummary::default()
        };
        for r in reports {
            let kind = r.failure.as_ref().map(|(k, _)| *k);
            if kind != Some(FailureKind::IllFormed) {
                s.well_formed += 1;
            }
            if !matches!(kind, Some(FailureKind::IllFormed | FailureKind::Pipeline)) {
                s.pipelines_ok += 1;
            }
            s.scripts += r.verdicts.len();
            s.equal += r.equal();
            s.inconclusive += r.inconclusive();
            if !r.transparency.is_empty() && r.transparency.iter().all(Verdict::passes) {
                s.transparency_ok += 1;
            }
            if !r.passed() {
                s.failed_seeds.push(r.seed);
            }
        }
        s
    }
}

impl fmt::Display for FuzzSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cases: {}", self.cases)?;
        writeln!(f, "well-formed: {}/{}", self.well_formed, self.cases)?;
        writeln!(f, "pipelines ok: {}/{}", self.pipelines_ok, self.cases)?;
        writeln!(
            f,
            "scripts: {} equal, {} inconclusive, {} total",
            self.equal, self.inconclusive, self.scripts
        )?;
        writeln!(f, "transparency ok: {}/{}", self.transparency_ok, self.cases)?;
        if self.failed_seeds.is_empty() {
            writeln!(f, "failures: none")
        } else {
            let s: Vec<String> = self.failed_seeds.iter().map(|s| s.to_string()).collect();
            writeln!(f, "failures: {}", s.join(", "))
        }
    }
}

/// Runs cases with seeds `cfg.seed .. cfg.seed + count` in parallel. The
/// reports come back in seed order.
pub fn run_cases(cfg: &GenConfig, count: u64) -> Vec<CaseReport> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let c = GenConfig {
                seed: cfg.seed.wrapping_add(i),
                ..cfg.clone()
            };
            run_case(&c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        for seed in 0..20 {
            let cfg = GenConfig::with_seed(seed);
            assert_eq!(gen_program(&cfg), gen_program(&cfg));
            let p = gen_program(&cfg);
            assert_eq!(gen_pipeline(&cfg, &p), gen_pipeline(&cfg, &p));
            assert_eq!(gen_scripts(&cfg, &p), gen_scripts(&cfg, &p));
        }
    }

    #[test]
    fn print_only_weights_give_straight_line_prints() {
        let cfg = GenConfig {
            weights: Weights {
                print: 1,
                decl: 0,
                assign: 0,
                array: 0,
                branch: 0,
                loop_: 0,
                call: 0,
                read: 0,
            },
            max_versions: 1,
            ..GenConfig::with_seed(3)
        };
        let p = gen_program(&cfg);
        let main = p.function(&main_name()).unwrap();
        for (_, i) in &main.active().unwrap().body.instrs {
            assert!(matches!(i, Instruction::Print(_) | Instruction::Stop), "{i:?}");
        }
    }

    #[test]
    fn only_create_version_when_passes_are_forbidden() {
        let cfg = GenConfig {
            passes: PassWeights::none(),
            ..GenConfig::with_seed(11)
        };
        let p = gen_program(&cfg);
        let pipe = gen_pipeline(&cfg, &p);
        assert_eq!(pipe.len(), 1);
        assert!(matches!(pipe[0], PassSpec::CreateVersion { .. }));
    }

    #[test]
    fn inputs_come_from_the_pool() {
        let cfg = GenConfig {
            literal_pool: vec!["0".into(), "1".into(), "nil".into()],
            ..GenConfig::with_seed(5)
        };
        let pool = cfg.pool().unwrap();
        for seed in 0..30 {
            let c = GenConfig { seed, ..cfg.clone() };
            let p = gen_program(&c);
            for s in gen_scripts(&c, &p) {
                assert!(s.iter().all(|l| pool.contains(l)));
            }
        }
    }

    #[test]
    fn no_reads_no_inputs() {
        let src = "func main()\nversion V\n  print 1\n  stop\n";
        let p = crate::text::parse_program(src).unwrap();
        let mut rng = rng_for(0, INPUT_STREAM);
        assert!(gen_inputs(&GenConfig::default(), &p, &mut rng).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(GenConfig::default().validate().is_ok());
        let bad = GenConfig {
            max_instrs: 0,
            ..GenConfig::default()
        };
        assert!(bad.validate().is_err());
        let cfg: GenConfig = toml::from_str("seed = 4\nmax_functions = 1\n[weights]\nloop_ = 0\n").unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.weights.loop_, 0);
        assert_eq!(cfg.weights.print, Weights::default().print);
    }
}
