//! Core data types: programs, functions, versions, instruction streams and
//! the non-nested expression language.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

macro_rules! name_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(s: impl AsRef<str>) -> Self {
                $name(Arc::from(s.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name::new(s)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

name_type!(
    /// A local variable name.
    Var
);
name_type!(
    /// A function name.
    FunName
);
name_type!(
    /// A version label such as `Vb` or `Vo`.
    VersionName
);
name_type!(
    /// An instruction label, unique within its stream.
    Label
);

/// Constants that can appear in source text, inputs and traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Int(i64),
    Bool(bool),
    Nil,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(n) => write!(f, "{n}"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Nil => f.write_str("nil"),
        }
    }
}

/// Operands: never contain another expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SimpleExpr {
    Lit(Literal),
    Var(Var),
    FunRef(FunName),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub const ALL: [BinOp; 12] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Eq,
        BinOp::Neq,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::And,
        BinOp::Or,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Neq => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

/// Right-hand sides. Operands are always [`SimpleExpr`]s.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Simple(SimpleExpr),
    ArrayRead(SimpleExpr, SimpleExpr),
    Length(SimpleExpr),
    Unary(UnOp, SimpleExpr),
    Binary(BinOp, SimpleExpr, SimpleExpr),
}

impl Expr {
    pub fn lit(l: Literal) -> Expr {
        Expr::Simple(SimpleExpr::Lit(l))
    }

    pub fn int(n: i64) -> Expr {
        Expr::lit(Literal::Int(n))
    }

    pub fn var(v: impl AsRef<str>) -> Expr {
        Expr::Simple(SimpleExpr::Var(Var::new(v)))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Simple(SimpleExpr::Lit(Literal::Bool(true))))
    }

    pub fn operands(&self) -> Vec<&SimpleExpr> {
        match self {
            Expr::Simple(a) | Expr::Length(a) | Expr::Unary(_, a) => vec![a],
            Expr::ArrayRead(a, b) | Expr::Binary(_, a, b) => vec![a, b],
        }
    }

    pub fn operands_mut(&mut self) -> Vec<&mut SimpleExpr> {
        match self {
            Expr::Simple(a) | Expr::Length(a) | Expr::Unary(_, a) => vec![a],
            Expr::ArrayRead(a, b) | Expr::Binary(_, a, b) => vec![a, b],
        }
    }

    /// Variables read by this expression, in operand order.
    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.operands().into_iter().filter_map(|s| match s {
            SimpleExpr::Var(v) => Some(v),
            _ => None,
        })
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.vars().any(|x| x == v)
    }

    /// True when evaluation can never fail, whatever the operand values are.
    pub fn is_total(&self) -> bool {
        matches!(self, Expr::Simple(_) | Expr::Binary(BinOp::Eq | BinOp::Neq, _, _))
    }

    /// True when evaluation depends on the heap.
    pub fn reads_heap(&self) -> bool {
        matches!(self, Expr::ArrayRead(..) | Expr::Length(_))
    }
}

/// Ordered variable-to-expression bindings used by deoptimization.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Varmap(pub Vec<(Var, Expr)>);

impl Varmap {
    pub fn identity<'a>(vars: impl IntoIterator<Item = &'a Var>) -> Varmap {
        Varmap(
            vars.into_iter()
                .map(|v| (v.clone(), Expr::Simple(SimpleExpr::Var(v.clone()))))
                .collect(),
        )
    }

    pub fn get(&self, v: &Var) -> Option<&Expr> {
        self.0.iter().find(|(k, _)| k == v).map(|(_, e)| e)
    }

    pub fn domain(&self) -> BTreeSet<Var> {
        self.0.iter().map(|(k, _)| k.clone()).collect()
    }

    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        self.0.iter().map(|(_, e)| e)
    }

    pub fn exprs_mut(&mut self) -> impl Iterator<Item = &mut Expr> {
        self.0.iter_mut().map(|(_, e)| e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DeoptTarget {
    pub func: FunName,
    pub version: VersionName,
    pub label: Label,
    pub varmap: Varmap,
}

/// A synthesized caller frame pushed on deoptimization out of inlined code.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtraFrame {
    pub func: FunName,
    pub version: VersionName,
    pub label: Label,
    pub ret: Var,
    pub varmap: Varmap,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    VarDecl(Var, Expr),
    Drop(Var),
    Assign(Var, Expr),
    ArrayAlloc(Var, Expr),
    ArrayLit(Var, Vec<Expr>),
    ArrayStore(Var, Expr, Expr),
    Branch(Expr, Label, Label),
    Goto(Label),
    Print(Expr),
    Read(Var),
    Call(Var, Expr, Vec<Expr>),
    Return(Expr),
    Assume {
        preds: Vec<Expr>,
        target: DeoptTarget,
        frames: Vec<ExtraFrame>,
    },
    Stop,
}

impl Instruction {
    /// The variable this instruction brings into scope, if any.
    pub fn declares(&self) -> Option<&Var> {
        match self {
            Instruction::VarDecl(x, _)
            | Instruction::ArrayAlloc(x, _)
            | Instruction::ArrayLit(x, _)
            | Instruction::Call(x, _, _) => Some(x),
            _ => None,
        }
    }

    /// Variables whose binding (not heap contents) is changed or removed.
    pub fn writes(&self) -> Option<&Var> {
        match self {
            Instruction::VarDecl(x, _)
            | Instruction::Assign(x, _)
            | Instruction::ArrayAlloc(x, _)
            | Instruction::ArrayLit(x, _)
            | Instruction::Read(x)
            | Instruction::Call(x, _, _)
            | Instruction::Drop(x) => Some(x),
            _ => None,
        }
    }

    /// Every expression position, including varmaps and extra frames.
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Instruction::VarDecl(_, e)
            | Instruction::Assign(_, e)
            | Instruction::ArrayAlloc(_, e)
            | Instruction::Print(e)
            | Instruction::Return(e)
            | Instruction::Branch(e, _, _) => vec![e],
            Instruction::ArrayLit(_, es) => es.iter().collect(),
            Instruction::ArrayStore(_, i, v) => vec![i, v],
            Instruction::Call(_, f, args) => std::iter::once(f).chain(args.iter()).collect(),
            Instruction::Assume { preds, target, frames } => preds
                .iter()
                .chain(target.varmap.exprs())
                .chain(frames.iter().flat_map(|fr| fr.varmap.exprs()))
                .collect(),
            Instruction::Drop(_) | Instruction::Goto(_) | Instruction::Read(_) | Instruction::Stop => {
                vec![]
            }
        }
    }

    pub fn exprs_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Instruction::VarDecl(_, e)
            | Instruction::Assign(_, e)
            | Instruction::ArrayAlloc(_, e)
            | Instruction::Print(e)
            | Instruction::Return(e)
            | Instruction::Branch(e, _, _) => vec![e],
            Instruction::ArrayLit(_, es) => es.iter_mut().collect(),
            Instruction::ArrayStore(_, i, v) => vec![i, v],
            Instruction::Call(_, f, args) => std::iter::once(f).chain(args.iter_mut()).collect(),
            Instruction::Assume { preds, target, frames } => preds
                .iter_mut()
                .chain(target.varmap.exprs_mut())
                .chain(frames.iter_mut().flat_map(|fr| fr.varmap.exprs_mut()))
                .collect(),
            Instruction::Drop(_) | Instruction::Goto(_) | Instruction::Read(_) | Instruction::Stop => {
                vec![]
            }
        }
    }

    /// Variables read by the instruction. Assignment targets of `x <- e`,
    /// `x[i] <- e` and `read x` count as uses since they need `x` in scope.
    pub fn uses(&self) -> Vec<&Var> {
        let mut out: Vec<&Var> = match self {
            Instruction::Assign(x, _) | Instruction::ArrayStore(x, _, _) | Instruction::Read(x) => {
                vec![x]
            }
            _ => vec![],
        };
        for e in self.exprs() {
            out.extend(e.vars());
        }
        out
    }

    /// Labels this instruction may jump to explicitly.
    pub fn jump_targets(&self) -> Vec<&Label> {
        match self {
            Instruction::Branch(_, a, b) => vec![a, b],
            Instruction::Goto(l) => vec![l],
            _ => vec![],
        }
    }

    pub fn jump_targets_mut(&mut self) -> Vec<&mut Label> {
        match self {
            Instruction::Branch(_, a, b) => vec![a, b],
            Instruction::Goto(l) => vec![l],
            _ => vec![],
        }
    }

    /// Whether control continues at the next instruction in the stream.
    pub fn falls_through(&self) -> bool {
        !matches!(
            self,
            Instruction::Branch(..) | Instruction::Goto(_) | Instruction::Return(_) | Instruction::Stop
        )
    }

    pub fn is_assume(&self) -> bool {
        matches!(self, Instruction::Assume { .. })
    }
}

/// A labeled instruction sequence. Labels are unique within the stream.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct InstructionStream {
    pub instrs: Vec<(Label, Instruction)>,
}

impl InstructionStream {
    pub fn new(instrs: Vec<(Label, Instruction)>) -> Self {
        InstructionStream { instrs }
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn entry(&self) -> Option<&Label> {
        self.instrs.first().map(|(l, _)| l)
    }

    pub fn position(&self, label: &Label) -> Option<usize> {
        self.instrs.iter().position(|(l, _)| l == label)
    }

    pub fn get(&self, label: &Label) -> Option<&Instruction> {
        self.instrs.iter().find(|(l, _)| l == label).map(|(_, i)| i)
    }

    pub fn get_mut(&mut self, label: &Label) -> Option<&mut Instruction> {
        self.instrs.iter_mut().find(|(l, _)| l == label).map(|(_, i)| i)
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.instrs.iter().map(|(l, _)| l)
    }

    pub fn label_set(&self) -> HashSet<Label> {
        self.labels().cloned().collect()
    }

    /// The label following `label` in stream order.
    pub fn next_label(&self, label: &Label) -> Option<&Label> {
        let i = self.position(label)?;
        self.instrs.get(i + 1).map(|(l, _)| l)
    }

    /// Control-flow successors. The deoptimization exit of an assume is not
    /// a CFG edge.
    pub fn successors(&self, label: &Label) -> Vec<Label> {
        match self.position(label) {
            Some(i) => self.successors_at(i),
            None => vec![],
        }
    }

    pub fn successors_at(&self, i: usize) -> Vec<Label> {
        let ins = &self.instrs[i].1;
        let mut out: Vec<Label> = ins.jump_targets().into_iter().cloned().collect();
        if ins.falls_through() {
            if let Some((l, _)) = self.instrs.get(i + 1) {
                out.push(l.clone());
            }
        }
        out.dedup();
        out
    }

    /// Predecessor map for every label in the stream.
    pub fn predecessor_map(&self) -> HashMap<Label, Vec<Label>> {
        let mut preds: HashMap<Label, Vec<Label>> = self.labels().map(|l| (l.clone(), Vec::new())).collect();
        for (i, (l, _)) in self.instrs.iter().enumerate() {
            for s in self.successors_at(i) {
                if let Some(p) = preds.get_mut(&s) {
                    if !p.contains(l) {
                        p.push(l.clone());
                    }
                }
            }
        }
        preds
    }

    pub fn predecessors(&self, label: &Label) -> Vec<Label> {
        self.predecessor_map().remove(label).unwrap_or_default()
    }

    /// Every variable name appearing anywhere in the stream.
    pub fn var_names(&self) -> HashSet<Var> {
        let mut out = HashSet::new();
        for (_, ins) in &self.instrs {
            if let Some(x) = ins.writes() {
                out.insert(x.clone());
            }
            for v in ins.uses() {
                out.insert(v.clone());
            }
        }
        out
    }

    /// Rewrites every explicit jump to `from` so that it targets `to`.
    pub fn redirect_jumps(&mut self, from: &Label, to: &Label) {
        for (_, ins) in &mut self.instrs {
            for t in ins.jump_targets_mut() {
                if t == from {
                    *t = to.clone();
                }
            }
        }
    }

    /// Removes the instruction at `label`. Jumps to it are sent to the next
    /// instruction, which must exist if anything jumped there.
    pub fn remove_instr(&mut self, label: &Label) -> Option<Instruction> {
        let i = self.position(label)?;
        let (l, ins) = self.instrs.remove(i);
        if let Some((next, _)) = self.instrs.get(i).cloned() {
            self.redirect_jumps(&l, &next);
        }
        Some(ins)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Version {
    pub name: VersionName,
    pub body: InstructionStream,
}

/// A function. The first version is the active one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Function {
    pub name: FunName,
    pub params: Vec<Var>,
    pub versions: Vec<Version>,
}

impl Function {
    pub fn active(&self) -> Option<&Version> {
        self.versions.first()
    }

    pub fn version(&self, name: &VersionName) -> Option<&Version> {
        self.versions.iter().find(|v| &v.name == name)
    }

    pub fn version_mut(&mut self, name: &VersionName) -> Option<&mut Version> {
        self.versions.iter_mut().find(|v| &v.name == name)
    }

    pub fn version_index(&self, name: &VersionName) -> Option<usize> {
        self.versions.iter().position(|v| &v.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Program {
    pub functions: Vec<Function>,
}

pub fn main_name() -> FunName {
    FunName::new("main")
}

impl Program {
    pub fn function(&self, name: &FunName) -> Option<&Function> {
        self.functions.iter().find(|f| &f.name == name)
    }

    pub fn function_mut(&mut self, name: &FunName) -> Option<&mut Function> {
        self.functions.iter_mut().find(|f| &f.name == name)
    }

    pub fn version(&self, f: &FunName, v: &VersionName) -> Option<&Version> {
        self.function(f)?.version(v)
    }

    pub fn version_mut(&mut self, f: &FunName, v: &VersionName) -> Option<&mut Version> {
        self.function_mut(f)?.version_mut(v)
    }

    pub fn lookup(&self, f: &FunName, v: &VersionName, l: &Label) -> Option<&Instruction> {
        self.version(f, v)?.body.get(l)
    }

    /// Copy of the program with version `v` of `f` moved to the front.
    pub fn with_active(&self, f: &FunName, v: &VersionName) -> Option<Program> {
        let mut p = self.clone();
        let func = p.function_mut(f)?;
        let i = func.version_index(v)?;
        let ver = func.versions.remove(i);
        func.versions.insert(0, ver);
        Some(p)
    }

    /// Every assume instruction in the program, in program order.
    pub fn assume_sites(&self) -> Vec<Loc> {
        let mut out = Vec::new();
        for f in &self.functions {
            for v in &f.versions {
                for (l, ins) in &v.body.instrs {
                    if ins.is_assume() {
                        out.push(Loc::new(f.name.clone(), v.name.clone(), l.clone()));
                    }
                }
            }
        }
        out
    }
}

/// A fully qualified instruction location `F.V.L`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loc {
    pub func: FunName,
    pub version: VersionName,
    pub label: Label,
}

impl Loc {
    pub fn new(func: FunName, version: VersionName, label: Label) -> Self {
        Loc { func, version, label }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.func, self.version, self.label)
    }
}

impl fmt::Debug for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Returns `base` if unused, otherwise `base_k` for the smallest `k >= 1`
/// that is unused.
pub fn fresh_name<F: Fn(&str) -> bool>(base: &str, used: F) -> String {
    if !used(base) {
        return base.to_string();
    }
    let mut k = 1u64;
    loop {
        let cand = format!("{base}_{k}");
        if !used(&cand) {
            return cand;
        }
        k += 1;
    }
}

pub fn fresh_var(base: &Var, used: &HashSet<Var>) -> Var {
    Var::new(fresh_name(base.as_str(), |s| used.contains(s)))
}

pub fn fresh_label(base: &Label, used: &HashSet<Label>) -> Label {
    Label::new(fresh_name(base.as_str(), |s| used.contains(s)))
}

/// Canonical form of a stream: labels and local variable names are replaced
/// by positional names in order of first appearance. Deopt target labels,
/// varmap keys and frame return variables name things in other scopes and
/// are left untouched.
pub fn canonicalize(params: &[Var], stream: &InstructionStream) -> InstructionStream {
    fn rename(vars: &mut HashMap<Var, Var>, v: &Var) -> Var {
        let n = vars.len();
        vars.entry(v.clone())
            .or_insert_with(|| Var::new(format!("#v{n}")))
            .clone()
    }

    let labels: HashMap<Label, Label> = stream
        .labels()
        .enumerate()
        .map(|(i, l)| (l.clone(), Label::new(format!("#L{i}"))))
        .collect();
    let mut vars: HashMap<Var, Var> = HashMap::new();
    for p in params {
        rename(&mut vars, p);
    }
    let mut out = Vec::new();
    for (l, ins) in &stream.instrs {
        let mut ins = ins.clone();
        // Operands are evaluated before the target is bound.
        for e in ins.exprs_mut() {
            for op in e.operands_mut() {
                if let SimpleExpr::Var(v) = op {
                    *v = rename(&mut vars, v);
                }
            }
        }
        match &mut ins {
            Instruction::VarDecl(x, _)
            | Instruction::Drop(x)
            | Instruction::Assign(x, _)
            | Instruction::ArrayAlloc(x, _)
            | Instruction::ArrayLit(x, _)
            | Instruction::ArrayStore(x, _, _)
            | Instruction::Read(x)
            | Instruction::Call(x, _, _) => *x = rename(&mut vars, x),
            _ => {}
        }
        for t in ins.jump_targets_mut() {
            if let Some(n) = labels.get(t) {
                *t = n.clone();
            }
        }
        out.push((labels[l].clone(), ins));
    }
    InstructionStream::new(out)
}

/// Structural equality up to a consistent renaming of labels and local
/// variables.
pub fn alpha_equivalent(params: &[Var], a: &InstructionStream, b: &InstructionStream) -> bool {
    canonicalize(params, a) == canonicalize(params, b)
}
