//! Small-step reference interpreter with deoptimization.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::ir::*;

/// Largest array the interpreter will allocate.
pub const MAX_ARRAY_LEN: i64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(pub usize);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Nil,
    Fun(FunName),
    Addr(Address),
}

impl From<Literal> for Value {
    fn from(l: Literal) -> Self {
        match l {
            Literal::Int(n) => Value::Int(n),
            Literal::Bool(b) => Value::Bool(b),
            Literal::Nil => Value::Nil,
        }
    }
}

impl Value {
    pub fn as_literal(&self) -> Option<Literal> {
        match self {
            Value::Int(n) => Some(Literal::Int(*n)),
            Value::Bool(b) => Some(Literal::Bool(*b)),
            Value::Nil => Some(Literal::Nil),
            _ => None,
        }
    }

    /// The expression denoting this value, when one exists.
    pub fn as_simple_expr(&self) -> Option<SimpleExpr> {
        match self {
            Value::Fun(f) => Some(SimpleExpr::FunRef(f.clone())),
            Value::Addr(_) => None,
            other => other.as_literal().map(SimpleExpr::Lit),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Nil => f.write_str("nil"),
            Value::Fun(g) => write!(f, "&{g}"),
            Value::Addr(a) => write!(f, "@{}", a.0),
        }
    }
}

pub type Environment = BTreeMap<Var, Value>;

/// Append-only array store. Addresses are never reused.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Heap {
    pub cells: Vec<Vec<Value>>,
}

impl Heap {
    pub fn alloc(&mut self, values: Vec<Value>) -> Address {
        self.cells.push(values);
        Address(self.cells.len() - 1)
    }

    pub fn get(&self, a: Address) -> Option<&Vec<Value>> {
        self.cells.get(a.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    TypeError,
    IndexOutOfBounds,
    DivisionByZero,
    IntegerOverflow,
    UnboundVariable,
    UnknownLabel,
    UnknownFunction,
    CallArityMismatch,
    CalleeNotFunction,
    ReturnFromMain,
    InputExhausted,
    BadDeoptTarget,
    FallThroughEnd,
    HeapExhausted,
    /// `step` was applied to a configuration that already executed `stop`.
    Halted,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at {loc}")]
pub struct RuntimeError {
    pub kind: ErrorKind,
    pub loc: Loc,
}

/// Observable events.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Read(Literal),
    Print(Literal),
    Stop,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Read(l) => write!(f, "read {l}"),
            Action::Print(l) => write!(f, "print {l}"),
            Action::Stop => f.write_str("stop"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Stopped,
    FuelExhausted,
    RuntimeError(RuntimeError),
}

impl Outcome {
    /// Outcome class used for equivalence: error locations are ignored.
    pub fn class(&self) -> OutcomeClass {
        match self {
            Outcome::Stopped => OutcomeClass::Stopped,
            Outcome::FuelExhausted => OutcomeClass::FuelExhausted,
            Outcome::RuntimeError(e) => OutcomeClass::Error(e.kind),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Stopped => f.write_str("stopped"),
            Outcome::FuelExhausted => f.write_str("fuel"),
            Outcome::RuntimeError(e) => write!(f, "error:{}@{}", e.kind, e.loc),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutcomeClass {
    Stopped,
    FuelExhausted,
    Error(ErrorKind),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub outcome: Outcome,
    pub trace: Vec<Action>,
    pub steps: u64,
}

impl RunResult {
    /// One action per line followed by the outcome footer.
    pub fn format(&self) -> String {
        let mut s = self.format_actions();
        s.push_str(&self.footer());
        s.push('\n');
        s
    }

    pub fn format_actions(&self) -> String {
        let mut s = String::new();
        for a in &self.trace {
            s.push_str(&a.to_string());
            s.push('\n');
        }
        s
    }

    pub fn footer(&self) -> String {
        format!("-- outcome: {} steps:{}", self.outcome, self.steps)
    }
}

/// Which dynamic assume executions are forced to deoptimize.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum ForcePolicy {
    #[default]
    Never,
    All,
    /// Dynamic occurrence numbers, counting every assume executed from 0.
    Ordinals(BTreeSet<u64>),
    /// Every execution of the assume at this location.
    Site(Loc),
}

/// Program position: indices into the program being run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Position {
    pub func: usize,
    pub version: usize,
    pub pc: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Continuation {
    pub resume: Position,
    pub ret: Var,
    pub env: Environment,
}

/// Machine state. `pos` is `None` once `stop` has executed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub pos: Option<Position>,
    pub stack: Vec<Continuation>,
    pub heap: Heap,
    pub env: Environment,
}

/// Input script and forcing state threaded through steps.
#[derive(Clone, Debug)]
pub struct Io<'a> {
    pub inputs: &'a [Literal],
    pub next_input: usize,
    pub policy: ForcePolicy,
    pub assumes_executed: u64,
}

impl<'a> Io<'a> {
    pub fn new(inputs: &'a [Literal], policy: ForcePolicy) -> Self {
        Io {
            inputs,
            next_input: 0,
            policy,
            assumes_executed: 0,
        }
    }
}

pub fn values_equal(a: &Value, b: &Value) -> bool {
    a == b
}

pub fn apply_binop(op: BinOp, a: &Value, b: &Value) -> Result<Value, ErrorKind> {
    use BinOp::*;
    match op {
        Eq => return Ok(Value::Bool(values_equal(a, b))),
        Neq => return Ok(Value::Bool(!values_equal(a, b))),
        And | Or => {
            return match (a, b) {
                (Value::Bool(x), Value::Bool(y)) => Ok(Value::Bool(if op == And { *x && *y } else { *x || *y })),
                _ => Err(ErrorKind::TypeError),
            }
        }
        _ => {}
    }
    let (Value::Int(x), Value::Int(y)) = (a, b) else {
        return Err(ErrorKind::TypeError);
    };
    let (x, y) = (*x, *y);
    let v = match op {
        Add => Value::Int(x.checked_add(y).ok_or(ErrorKind::IntegerOverflow)?),
        Sub => Value::Int(x.checked_sub(y).ok_or(ErrorKind::IntegerOverflow)?),
        Mul => Value::Int(x.checked_mul(y).ok_or(ErrorKind::IntegerOverflow)?),
        Div => {
            if y == 0 {
                return Err(ErrorKind::DivisionByZero);
            }
            Value::Int(x.checked_div(y).ok_or(ErrorKind::IntegerOverflow)?)
        }
        Lt => Value::Bool(x < y),
        Le => Value::Bool(x <= y),
        Gt => Value::Bool(x > y),
        Ge => Value::Bool(x >= y),
        Eq | Neq | And | Or => unreachable!(),
    };
    Ok(v)
}

pub fn apply_unop(op: UnOp, a: &Value) -> Result<Value, ErrorKind> {
    match (op, a) {
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (UnOp::Neg, Value::Int(n)) => n.checked_neg().map(Value::Int).ok_or(ErrorKind::IntegerOverflow),
        _ => Err(ErrorKind::TypeError),
    }
}

pub fn eval_simple(env: &Environment, s: &SimpleExpr) -> Result<Value, ErrorKind> {
    match s {
        SimpleExpr::Lit(l) => Ok(Value::from(*l)),
        SimpleExpr::Var(v) => env.get(v).cloned().ok_or(ErrorKind::UnboundVariable),
        SimpleExpr::FunRef(f) => Ok(Value::Fun(f.clone())),
    }
}

pub fn eval_expr(env: &Environment, heap: &Heap, e: &Expr) -> Result<Value, ErrorKind> {
    match e {
        Expr::Simple(s) => eval_simple(env, s),
        Expr::ArrayRead(a, i) => {
            let a = eval_simple(env, a)?;
            let i = eval_simple(env, i)?;
            match (a, i) {
                (Value::Addr(a), Value::Int(i)) => {
                    let cells = heap.get(a).ok_or(ErrorKind::TypeError)?;
                    usize::try_from(i)
                        .ok()
                        .and_then(|i| cells.get(i))
                        .cloned()
                        .ok_or(ErrorKind::IndexOutOfBounds)
                }
                _ => Err(ErrorKind::TypeError),
            }
        }
        Expr::Length(a) => match eval_simple(env, a)? {
            Value::Addr(a) => {
                let cells = heap.get(a).ok_or(ErrorKind::TypeError)?;
                Ok(Value::Int(cells.len() as i64))
            }
            _ => Err(ErrorKind::TypeError),
        },
        Expr::Unary(op, a) => apply_unop(*op, &eval_simple(env, a)?),
        Expr::Binary(op, a, b) => {
            let a = eval_simple(env, a)?;
            let b = eval_simple(env, b)?;
            apply_binop(*op, &a, &b)
        }
    }
}

pub fn eval_varmap(env: &Environment, heap: &Heap, vm: &Varmap) -> Result<Environment, ErrorKind> {
    let mut out = Environment::new();
    for (x, e) in &vm.0 {
        out.insert(x.clone(), eval_expr(env, heap, e)?);
    }
    Ok(out)
}

struct FuncIndex {
    versions: Vec<HashMap<Label, usize>>,
}

/// A program prepared for execution.
pub struct Machine<'p> {
    pub program: &'p Program,
    funcs: HashMap<FunName, usize>,
    index: Vec<FuncIndex>,
}

impl<'p> Machine<'p> {
    pub fn new(program: &'p Program) -> Self {
        let funcs = program
            .functions
            .iter()
            .enumerate()
            .map(|(i, f)| (f.name.clone(), i))
            .collect();
        let index = program
            .functions
            .iter()
            .map(|f| FuncIndex {
                versions: f
                    .versions
                    .iter()
                    .map(|v| v.body.labels().enumerate().map(|(i, l)| (l.clone(), i)).collect())
                    .collect(),
            })
            .collect();
        Machine { program, funcs, index }
    }

    pub fn loc(&self, pos: Position) -> Loc {
        let f = &self.program.functions[pos.func];
        let v = &f.versions[pos.version];
        let label = v
            .body
            .instrs
            .get(pos.pc)
            .map(|(l, _)| l.clone())
            .unwrap_or_else(|| Label::new("<end>"));
        Loc::new(f.name.clone(), v.name.clone(), label)
    }

    pub fn instruction(&self, pos: Position) -> Option<&'p Instruction> {
        self.program.functions[pos.func].versions[pos.version]
            .body
            .instrs
            .get(pos.pc)
            .map(|(_, i)| i)
    }

    /// Resolves `F.V.L` to a position.
    pub fn resolve(&self, f: &FunName, v: &VersionName, l: &Label) -> Option<Position> {
        let fi = *self.funcs.get(f)?;
        let vi = self.program.functions[fi].version_index(v)?;
        let pc = *self.index[fi].versions[vi].get(l)?;
        Some(Position {
            func: fi,
            version: vi,
            pc,
        })
    }

    fn entry_of(&self, f: &FunName) -> Option<Position> {
        let fi = *self.funcs.get(f)?;
        let func = &self.program.functions[fi];
        if func.versions.first()?.body.is_empty() {
            return None;
        }
        Some(Position {
            func: fi,
            version: 0,
            pc: 0,
        })
    }

    /// Entry of the active version of `main` with empty environment, stack
    /// and heap.
    pub fn initial(&self) -> Option<Configuration> {
        Some(Configuration {
            pos: Some(self.entry_of(&main_name())?),
            stack: Vec::new(),
            heap: Heap::default(),
            env: Environment::new(),
        })
    }

    fn jump(&self, pos: Position, l: &Label) -> Result<Position, ErrorKind> {
        let pc = *self.index[pos.func].versions[pos.version]
            .get(l)
            .ok_or(ErrorKind::UnknownLabel)?;
        Ok(Position { pc, ..pos })
    }

    fn next(&self, pos: Position) -> Result<Position, ErrorKind> {
        let len = self.program.functions[pos.func].versions[pos.version].body.len();
        if pos.pc + 1 < len {
            Ok(Position { pc: pos.pc + 1, ..pos })
        } else {
            Err(ErrorKind::FallThroughEnd)
        }
    }

    /// Transfers control to `target`, synthesizing `frames` on the stack.
    /// Varmaps are evaluated in the current environment; the heap is kept.
    pub fn deoptimize(
        &self,
        conf: &mut Configuration,
        target: &DeoptTarget,
        frames: &[ExtraFrame],
    ) -> Result<(), ErrorKind> {
        let dest = self
            .resolve(&target.func, &target.version, &target.label)
            .ok_or(ErrorKind::BadDeoptTarget)?;
        let new_env = eval_varmap(&conf.env, &conf.heap, &target.varmap)?;
        let mut conts = Vec::with_capacity(frames.len());
        for fr in frames {
            let resume = self
                .resolve(&fr.func, &fr.version, &fr.label)
                .ok_or(ErrorKind::BadDeoptTarget)?;
            let env = eval_varmap(&conf.env, &conf.heap, &fr.varmap)?;
            conts.push(Continuation {
                resume,
                ret: fr.ret.clone(),
                env,
            });
        }
        // The first listed frame is the immediate caller, so it ends on top.
        while let Some(c) = conts.pop() {
            conf.stack.push(c);
        }
        conf.env = new_env;
        conf.pos = Some(dest);
        Ok(())
    }

    fn forced(&self, io: &Io<'_>, pos: Position, ordinal: u64) -> bool {
        match &io.policy {
            ForcePolicy::Never => false,
            ForcePolicy::All => true,
            ForcePolicy::Ordinals(set) => set.contains(&ordinal),
            ForcePolicy::Site(loc) => {
                let f = &self.program.functions[pos.func];
                let v = &f.versions[pos.version];
                f.name == loc.func && v.name == loc.version && v.body.instrs[pos.pc].0 == loc.label
            }
        }
    }

    /// Executes one instruction.
    pub fn step(&self, conf: &mut Configuration, io: &mut Io<'_>) -> Result<Option<Action>, RuntimeError> {
        let Some(pos) = conf.pos else {
            return Err(RuntimeError {
                kind: ErrorKind::Halted,
                loc: Loc::new(main_name(), VersionName::new("-"), Label::new("-")),
            });
        };
        self.step_at(conf, io, pos).map_err(|kind| RuntimeError {
            kind,
            loc: self.loc(pos),
        })
    }

    fn step_at(&self, conf: &mut Configuration, io: &mut Io<'_>, pos: Position) -> Result<Option<Action>, ErrorKind> {
        let ins = self.instruction(pos).ok_or(ErrorKind::FallThroughEnd)?;
        let mut action = None;
        match ins {
            Instruction::VarDecl(x, e) => {
                let v = eval_expr(&conf.env, &conf.heap, e)?;
                conf.env.insert(x.clone(), v);
                conf.pos = Some(self.next(pos)?);
            }
            Instruction::Drop(x) => {
                conf.env.remove(x).ok_or(ErrorKind::UnboundVariable)?;
                conf.pos = Some(self.next(pos)?);
            }
            Instruction::Assign(x, e) => {
                let v = eval_expr(&conf.env, &conf.heap, e)?;
                let slot = conf.env.get_mut(x).ok_or(ErrorKind::UnboundVariable)?;
                *slot = v;
                conf.pos = Some(self.next(pos)?);
            }
            Instruction::ArrayAlloc(x, e) => {
                let n = match eval_expr(&conf.env, &conf.heap, e)? {
                    Value::Int(n) => n,
                    _ => return Err(ErrorKind::TypeError),
                };
                if n < 0 {
                    return Err(ErrorKind::IndexOutOfBounds);
                }
                if n > MAX_ARRAY_LEN {
                    return Err(ErrorKind::HeapExhausted);
                }
                let a = conf.heap.alloc(vec![Value::Nil; n as usize]);
                conf.env.insert(x.clone(), Value::Addr(a));
                conf.pos = Some(self.next(pos)?);
            }
            Instruction::ArrayLit(x, es) => {
                let vals = es
                    .iter()
                    .map(|e| eval_expr(&conf.env, &conf.heap, e))
                    .collect::<Result<Vec<_>, _>>()?;
                let a = conf.heap.alloc(vals);
                conf.env.insert(x.clone(), Value::Addr(a));
                conf.pos = Some(self.next(pos)?);
            }
            Instruction::ArrayStore(x, i, e) => {
                let a = match conf.env.get(x) {
                    Some(Value::Addr(a)) => *a,
                    Some(_) => return Err(ErrorKind::TypeError),
                    None => return Err(ErrorKind::UnboundVariable),
                };
                let i = match eval_expr(&conf.env, &conf.heap, i)? {
                    Value::Int(i) => i,
                    _ => return Err(ErrorKind::TypeError),
                };
                let v = eval_expr(&conf.env, &conf.heap, e)?;
                let cells = conf.heap.cells.get_mut(a.0).ok_or(ErrorKind::TypeError)?;
                let slot = usize::try_from(i)
                    .ok()
                    .and_then(|i| cells.get_mut(i))
                    .ok_or(ErrorKind::IndexOutOfBounds)?;
                *slot = v;
                conf.pos = Some(self.next(pos)?);
            }
            Instruction::Branch(e, l1, l2) => {
                let target = match eval_expr(&conf.env, &conf.heap, e)? {
                    Value::Bool(true) => l1,
                    Value::Bool(false) => l2,
                    _ => return Err(ErrorKind::TypeError),
                };
                conf.pos = Some(self.jump(pos, target)?);
            }
            Instruction::Goto(l) => {
                conf.pos = Some(self.jump(pos, l)?);
            }
            Instruction::Print(e) => {
                let v = eval_expr(&conf.env, &conf.heap, e)?;
                let lit = v.as_literal().ok_or(ErrorKind::TypeError)?;
                action = Some(Action::Print(lit));
                conf.pos = Some(self.next(pos)?);
            }
            Instruction::Read(x) => {
                if !conf.env.contains_key(x) {
                    return Err(ErrorKind::UnboundVariable);
                }
                let lit = *io.inputs.get(io.next_input).ok_or(ErrorKind::InputExhausted)?;
                io.next_input += 1;
                conf.env.insert(x.clone(), Value::from(lit));
                action = Some(Action::Read(lit));
                conf.pos = Some(self.next(pos)?);
            }
            Instruction::Call(x, f, args) => {
                let callee = match eval_expr(&conf.env, &conf.heap, f)? {
                    Value::Fun(g) => g,
                    _ => return Err(ErrorKind::CalleeNotFunction),
                };
                let entry = self.entry_of(&callee).ok_or(ErrorKind::UnknownFunction)?;
                let func = &self.program.functions[entry.func];
                if func.params.len() != args.len() {
                    return Err(ErrorKind::CallArityMismatch);
                }
                let mut env = Environment::new();
                for (p, a) in func.params.iter().zip(args) {
                    env.insert(p.clone(), eval_expr(&conf.env, &conf.heap, a)?);
                }
                let resume = self.next(pos)?;
                let saved = std::mem::replace(&mut conf.env, env);
                conf.stack.push(Continuation {
                    resume,
                    ret: x.clone(),
                    env: saved,
                });
                conf.pos = Some(entry);
            }
            Instruction::Return(e) => {
                let v = eval_expr(&conf.env, &conf.heap, e)?;
                let k = conf.stack.pop().ok_or(ErrorKind::ReturnFromMain)?;
                conf.env = k.env;
                conf.env.insert(k.ret, v);
                conf.pos = Some(k.resume);
            }
            Instruction::Assume { preds, target, frames } => {
                let ordinal = io.assumes_executed;
                io.assumes_executed += 1;
                let mut holds = true;
                for p in preds {
                    match eval_expr(&conf.env, &conf.heap, p)? {
                        Value::Bool(true) => {}
                        Value::Bool(false) => {
                            holds = false;
                            break;
                        }
                        _ => return Err(ErrorKind::TypeError),
                    }
                }
                if holds && !self.forced(io, pos, ordinal) {
                    conf.pos = Some(self.next(pos)?);
                } else {
                    self.deoptimize(conf, target, frames)?;
                }
            }
            Instruction::Stop => {
                action = Some(Action::Stop);
                conf.pos = None;
            }
        }
        Ok(action)
    }

    /// Runs from `conf` until stop, an error, or `fuel` steps. `observe` is
    /// called before every step.
    pub fn run_from(
        &self,
        mut conf: Configuration,
        io: &mut Io<'_>,
        fuel: u64,
        observe: &mut dyn FnMut(&Machine<'p>, &Configuration),
    ) -> RunResult {
        let mut trace = Vec::new();
        let mut steps = 0u64;
        loop {
            if conf.pos.is_none() {
                return RunResult {
                    outcome: Outcome::Stopped,
                    trace,
                    steps,
                };
            }
            if steps >= fuel {
                return RunResult {
                    outcome: Outcome::FuelExhausted,
                    trace,
                    steps,
                };
            }
            observe(self, &conf);
            match self.step(&mut conf, io) {
                Ok(a) => {
                    steps += 1;
                    if let Some(a) = a {
                        trace.push(a);
                    }
                }
                Err(e) => {
                    return RunResult {
                        outcome: Outcome::RuntimeError(e),
                        trace,
                        steps,
                    }
                }
            }
        }
    }
}

fn missing_main() -> RunResult {
    RunResult {
        outcome: Outcome::RuntimeError(RuntimeError {
            kind: ErrorKind::UnknownFunction,
            loc: Loc::new(main_name(), VersionName::new("-"), Label::new("-")),
        }),
        trace: Vec::new(),
        steps: 0,
    }
}

/// Runs `main` with an observer called before every step.
pub fn run_observed(
    p: &Program,
    inputs: &[Literal],
    fuel: u64,
    policy: ForcePolicy,
    observe: &mut dyn FnMut(&Machine<'_>, &Configuration),
) -> RunResult {
    let m = Machine::new(p);
    let Some(conf) = m.initial() else {
        return missing_main();
    };
    let mut io = Io::new(inputs, policy);
    m.run_from(conf, &mut io, fuel, observe)
}

pub fn run(p: &Program, inputs: &[Literal], fuel: u64) -> RunResult {
    run_observed(p, inputs, fuel, ForcePolicy::Never, &mut |_, _| {})
}

/// Like [`run`], but assumes selected by `policy` deoptimize even when their
/// predicates hold. Predicates are still evaluated so their errors surface.
pub fn run_forcing_deopt(p: &Program, inputs: &[Literal], fuel: u64, policy: ForcePolicy) -> RunResult {
    run_observed(p, inputs, fuel, policy, &mut |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_program;

    fn run_src(src: &str, inputs: &[Literal]) -> RunResult {
        run(&parse_program(src).unwrap(), inputs, 10_000)
    }

    #[test]
    fn arithmetic_errors() {
        assert_eq!(
            apply_binop(BinOp::Div, &Value::Int(7), &Value::Int(-2)),
            Ok(Value::Int(-3))
        );
        assert_eq!(
            apply_binop(BinOp::Div, &Value::Int(1), &Value::Int(0)),
            Err(ErrorKind::DivisionByZero)
        );
        assert_eq!(
            apply_binop(BinOp::Add, &Value::Int(i64::MAX), &Value::Int(1)),
            Err(ErrorKind::IntegerOverflow)
        );
        assert_eq!(
            apply_binop(BinOp::Div, &Value::Int(i64::MIN), &Value::Int(-1)),
            Err(ErrorKind::IntegerOverflow)
        );
        assert_eq!(
            apply_binop(BinOp::Lt, &Value::Nil, &Value::Int(1)),
            Err(ErrorKind::TypeError)
        );
        assert_eq!(
            apply_binop(BinOp::Eq, &Value::Nil, &Value::Int(1)),
            Ok(Value::Bool(false))
        );
        assert_eq!(
            apply_unop(UnOp::Neg, &Value::Int(i64::MIN)),
            Err(ErrorKind::IntegerOverflow)
        );
    }

    #[test]
    fn fill_loop() {
        let src = "func main()\nversion V\n  var n = nil\n  read n\n  array t[n]\n  var k = 0\n  goto L1\n  L1: branch k < n L2 L3\n  L2: t[k] <- k\n  k <- k + 1\n  goto L1\n  L3: drop k\n  var s = t[2]\n  print s\n  stop\n";
        let r = run_src(src, &[Literal::Int(4)]);
        assert_eq!(r.outcome, Outcome::Stopped);
        assert_eq!(
            r.trace,
            vec![
                Action::Read(Literal::Int(4)),
                Action::Print(Literal::Int(2)),
                Action::Stop
            ]
        );
        let r = run_src(src, &[]);
        assert_eq!(r.outcome.class(), OutcomeClass::Error(ErrorKind::InputExhausted));
        let r = run_src(src, &[Literal::Int(2)]);
        assert_eq!(r.outcome.class(), OutcomeClass::Error(ErrorKind::IndexOutOfBounds));
    }

    #[test]
    fn call_and_return() {
        let src = "func main()\nversion V\n  call r = &double(21)\n  print r\n  stop\nfunc double(x)\nversion V\n  var y = x + x\n  return y\n";
        let r = run_src(src, &[]);
        assert_eq!(r.trace, vec![Action::Print(Literal::Int(42)), Action::Stop]);
    }

    #[test]
    fn call_errors() {
        let arity = "func main()\nversion V\n  call r = &f()\n  stop\nfunc f(x)\nversion V\n  return x\n";
        assert_eq!(
            run_src(arity, &[]).outcome.class(),
            OutcomeClass::Error(ErrorKind::CallArityMismatch)
        );
        let notfun = "func main()\nversion V\n  call r = 3()\n  stop\n";
        assert_eq!(
            run_src(notfun, &[]).outcome.class(),
            OutcomeClass::Error(ErrorKind::CalleeNotFunction)
        );
        let ret = "func main()\nversion V\n  return 1\n";
        assert_eq!(
            run_src(ret, &[]).outcome.class(),
            OutcomeClass::Error(ErrorKind::ReturnFromMain)
        );
    }

    #[test]
    fn fuel_zero_is_empty() {
        let p = parse_program("func main()\nversion V\n  print 1\n  stop\n").unwrap();
        let r = run(&p, &[], 0);
        assert_eq!(r.outcome, Outcome::FuelExhausted);
        assert!(r.trace.is_empty());
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn assume_failure_and_forcing() {
        let src = "func main()\nversion Vo\n  var x = nil\n  read x\n  assume x == 42 else main.Vb.L1 [x = x]\n  print 42\n  stop\nversion Vb\n  var x = nil\n  read x\n  L1: print x\n  stop\n";
        let p = parse_program(src).unwrap();
        let r = run(&p, &[Literal::Int(7)], 100);
        assert_eq!(r.trace[1], Action::Print(Literal::Int(7)));
        let r = run(&p, &[Literal::Int(42)], 100);
        assert_eq!(r.trace[1], Action::Print(Literal::Int(42)));
        let r = run_forcing_deopt(&p, &[Literal::Int(42)], 100, ForcePolicy::All);
        assert_eq!(r.trace[1], Action::Print(Literal::Int(42)));
        assert_eq!(r.outcome, Outcome::Stopped);
    }

    #[test]
    fn non_bool_predicate_is_type_error_even_when_forced() {
        let src = "func main()\nversion Vo\n  assume 1 else main.Vb.L1 []\n  stop\nversion Vb\n  L1: stop\n";
        let p = parse_program(src).unwrap();
        let r = run_forcing_deopt(&p, &[], 100, ForcePolicy::All);
        assert_eq!(r.outcome.class(), OutcomeClass::Error(ErrorKind::TypeError));
    }

    #[test]
    fn trace_format() {
        let p = parse_program("func main()\nversion V\n  L: print 1\n  stop\n").unwrap();
        let r = run(&p, &[], 10);
        assert_eq!(r.format(), "print 1\nstop\n-- outcome: stopped steps:2\n");
        let p = parse_program("func main()\nversion V\n  L: print y\n  stop\n").unwrap();
        let r = run(&p, &[], 10);
        assert_eq!(r.footer(), "-- outcome: error:UnboundVariable@main.V.L steps:0");
    }
}
