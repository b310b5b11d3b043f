//! Line-oriented surface syntax.
//!
//! ```text
//! func size(x)
//! version Vo
//!   assume x != nil else size.Vb.L2 [el = 32, x = x]
//!   var l = x[0]
//!   return l * 32
//! ```
//!
//! Instructions without a label get `_0`, `_1`, ... in stream order; the
//! printer always writes labels so that `parse(print(p)) == p`.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::ir::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: nested expression: operands must be literals, variables or &F")]
    NestedExpression { line: usize, column: usize },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. } | ParseError::NestedExpression { line, .. } => *line,
        }
    }
}

const KEYWORDS: &[&str] = &[
    "func", "version", "var", "drop", "array", "branch", "goto", "print", "read", "call", "return", "stop", "assume",
    "else", "ret", "true", "false", "nil", "length",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Kw(&'static str),
    Int(i64),
    Amp,
    Colon,
    Comma,
    Dot,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Assign,
    Arrow,
    Bang,
    Op(BinOp),
}

impl Tok {
    fn ends_operand(&self) -> bool {
        matches!(
            self,
            Tok::Ident(_) | Tok::Int(_) | Tok::RBracket | Tok::RParen | Tok::Kw("true" | "false" | "nil")
        )
    }

    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Kw(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Amp => "`&`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Assign => "`=`".into(),
            Tok::Arrow => "`<-`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Op(op) => format!("`{}`", op.symbol()),
        }
    }
}

fn lex_line(line_no: usize, text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out: Vec<(usize, Tok)> = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: String| ParseError::Syntax {
        line: line_no,
        column: col,
        message: msg,
    };
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let negative_literal = c == '-'
            && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())
            && !out.last().is_some_and(|(_, t)| t.ends_operand());
        if c.is_ascii_digit() || negative_literal {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let n: i64 = s
                .parse()
                .map_err(|_| err(col, format!("integer literal `{s}` out of range")))?;
            if i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                return Err(err(col, format!("malformed number starting `{s}`")));
            }
            out.push((col, Tok::Int(n)));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let tok = match KEYWORDS.iter().find(|k| **k == s) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(s),
            };
            out.push((col, tok));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            ('<', Some('-')) => (Tok::Arrow, 2),
            ('<', Some('=')) => (Tok::Op(BinOp::Le), 2),
            ('>', Some('=')) => (Tok::Op(BinOp::Ge), 2),
            ('=', Some('=')) => (Tok::Op(BinOp::Eq), 2),
            ('!', Some('=')) => (Tok::Op(BinOp::Neq), 2),
            ('&', Some('&')) => (Tok::Op(BinOp::And), 2),
            ('|', Some('|')) => (Tok::Op(BinOp::Or), 2),
            ('<', _) => (Tok::Op(BinOp::Lt), 1),
            ('>', _) => (Tok::Op(BinOp::Gt), 1),
            ('+', _) => (Tok::Op(BinOp::Add), 1),
            ('-', _) => (Tok::Op(BinOp::Sub), 1),
            ('*', _) => (Tok::Op(BinOp::Mul), 1),
            ('/', _) => (Tok::Op(BinOp::Div), 1),
            ('=', _) => (Tok::Assign, 1),
            ('!', _) => (Tok::Bang, 1),
            ('&', _) => (Tok::Amp, 1),
            (':', _) => (Tok::Colon, 1),
            (',', _) => (Tok::Comma, 1),
            ('.', _) => (Tok::Dot, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            _ => return Err(err(col, format!("unexpected character `{c}`"))),
        };
        out.push((col, tok));
        i += len;
    }
    Ok(out)
}

struct Cursor<'a> {
    line: usize,
    toks: &'a [(usize, Tok)],
    pos: usize,
    eol_col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(c, _)| *c).unwrap_or(self.eol_col)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            column: self.col(),
            message: message.into(),
        }
    }

    fn nested(&self) -> ParseError {
        ParseError::NestedExpression {
            line: self.line,
            column: self.col(),
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => t.describe(),
            None => "end of line".into(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {}, found {}", tok.describe(), self.found())))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.found()))),
        }
    }

    fn end(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(Tok::Op(_)) | Some(Tok::LParen) | Some(Tok::LBracket) => Err(self.nested()),
            Some(_) => Err(self.error(format!("unexpected {}", self.found()))),
        }
    }

    fn simple(&mut self) -> Result<SimpleExpr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(SimpleExpr::Lit(Literal::Int(n)))
            }
            Some(Tok::Kw("true")) => {
                self.pos += 1;
                Ok(SimpleExpr::Lit(Literal::Bool(true)))
            }
            Some(Tok::Kw("false")) => {
                self.pos += 1;
                Ok(SimpleExpr::Lit(Literal::Bool(false)))
            }
            Some(Tok::Kw("nil")) => {
                self.pos += 1;
                Ok(SimpleExpr::Lit(Literal::Nil))
            }
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(SimpleExpr::Var(Var::new(s)))
            }
            Some(Tok::Amp) => {
                self.pos += 1;
                let f = self.ident("function name after `&`")?;
                Ok(SimpleExpr::FunRef(FunName::new(f)))
            }
            Some(Tok::LParen) | Some(Tok::Bang) | Some(Tok::Kw("length")) => Err(self.nested()),
            Some(Tok::Op(BinOp::Sub)) => Err(self.nested()),
            _ => Err(self.error(format!("expected an operand, found {}", self.found()))),
        }
    }

    fn no_more_operators(&self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Op(_)) | Some(Tok::LBracket) => Err(self.nested()),
            _ => Ok(()),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let e = match self.peek() {
            Some(Tok::Kw("length")) => {
                self.pos += 1;
                self.expect(Tok::LParen)?;
                let a = self.simple()?;
                if self.peek() != Some(&Tok::RParen) {
                    self.no_more_operators()?;
                }
                self.expect(Tok::RParen)?;
                Expr::Length(a)
            }
            Some(Tok::Bang) => {
                self.pos += 1;
                Expr::Unary(UnOp::Not, self.simple()?)
            }
            Some(Tok::Op(BinOp::Sub)) => {
                self.pos += 1;
                Expr::Unary(UnOp::Neg, self.simple()?)
            }
            _ => {
                let a = self.simple()?;
                match self.peek() {
                    Some(Tok::LBracket) => {
                        self.pos += 1;
                        let i = self.simple()?;
                        if self.peek() != Some(&Tok::RBracket) {
                            self.no_more_operators()?;
                        }
                        self.expect(Tok::RBracket)?;
                        Expr::ArrayRead(a, i)
                    }
                    Some(Tok::Op(op)) => {
                        let op = *op;
                        self.pos += 1;
                        let b = self.simple()?;
                        Expr::Binary(op, a, b)
                    }
                    _ => Expr::Simple(a),
                }
            }
        };
        self.no_more_operators()?;
        Ok(e)
    }

    fn expr_list(&mut self, close: Tok) -> Result<Vec<Expr>, ParseError> {
        let mut out = Vec::new();
        if self.eat(&close) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat(&close) {
                return Ok(out);
            }
            if !self.eat(&Tok::Comma) {
                return Err(self.error(format!("expected `,` or {}, found {}", close.describe(), self.found())));
            }
        }
    }

    fn target(&mut self) -> Result<(FunName, VersionName, Label), ParseError> {
        let f = self.ident("function name")?;
        self.expect(Tok::Dot)?;
        let v = self.ident("version name")?;
        self.expect(Tok::Dot)?;
        let l = self.ident("label")?;
        Ok((FunName::new(f), VersionName::new(v), Label::new(l)))
    }

    fn varmap(&mut self) -> Result<Varmap, ParseError> {
        self.expect(Tok::LBracket)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBracket) {
            return Ok(Varmap(out));
        }
        loop {
            let x = self.ident("variable name in varmap")?;
            self.expect(Tok::Assign)?;
            let e = self.expr()?;
            out.push((Var::new(x), e));
            if self.eat(&Tok::RBracket) {
                return Ok(Varmap(out));
            }
            if !self.eat(&Tok::Comma) {
                return Err(self.error(format!("expected `,` or `]`, found {}", self.found())));
            }
        }
    }

    fn var(&mut self) -> Result<Var, ParseError> {
        Ok(Var::new(self.ident("variable name")?))
    }

    fn label(&mut self) -> Result<Label, ParseError> {
        Ok(Label::new(self.ident("label")?))
    }

    fn assume(&mut self) -> Result<Instruction, ParseError> {
        let mut preds = Vec::new();
        if !self.eat(&Tok::Kw("else")) {
            loop {
                preds.push(self.expr()?);
                if self.eat(&Tok::Kw("else")) {
                    break;
                }
                if !self.eat(&Tok::Comma) {
                    return Err(self.error(format!("expected `,` or `else`, found {}", self.found())));
                }
            }
        }
        let (func, version, label) = self.target()?;
        let varmap = self.varmap()?;
        let target = DeoptTarget {
            func,
            version,
            label,
            varmap,
        };
        let mut frames = Vec::new();
        while self.eat(&Tok::Comma) {
            let (func, version, label) = self.target()?;
            self.expect(Tok::Kw("ret"))?;
            let ret = self.var()?;
            let varmap = self.varmap()?;
            frames.push(ExtraFrame {
                func,
                version,
                label,
                ret,
                varmap,
            });
        }
        Ok(Instruction::Assume { preds, target, frames })
    }

    fn instruction(&mut self) -> Result<Instruction, ParseError> {
        let ins = match self.bump() {
            Some(Tok::Kw("var")) => {
                let x = self.var()?;
                self.expect(Tok::Assign)?;
                Instruction::VarDecl(x, self.expr()?)
            }
            Some(Tok::Kw("drop")) => Instruction::Drop(self.var()?),
            Some(Tok::Kw("array")) => {
                let x = self.var()?;
                if self.eat(&Tok::Assign) {
                    self.expect(Tok::LBracket)?;
                    Instruction::ArrayLit(x, self.expr_list(Tok::RBracket)?)
                } else {
                    self.expect(Tok::LBracket)?;
                    let e = self.expr()?;
                    self.expect(Tok::RBracket)?;
                    Instruction::ArrayAlloc(x, e)
                }
            }
            Some(Tok::Kw("branch")) => {
                let e = self.expr()?;
                let a = self.label()?;
                let b = self.label()?;
                Instruction::Branch(e, a, b)
            }
            Some(Tok::Kw("goto")) => Instruction::Goto(self.label()?),
            Some(Tok::Kw("print")) => Instruction::Print(self.expr()?),
            Some(Tok::Kw("read")) => Instruction::Read(self.var()?),
            Some(Tok::Kw("call")) => {
                let x = self.var()?;
                self.expect(Tok::Assign)?;
                let f = self.expr()?;
                self.expect(Tok::LParen)?;
                let args = self.expr_list(Tok::RParen)?;
                Instruction::Call(x, f, args)
            }
            Some(Tok::Kw("return")) => Instruction::Return(self.expr()?),
            Some(Tok::Kw("stop")) => Instruction::Stop,
            Some(Tok::Kw("assume")) => self.assume()?,
            Some(Tok::Ident(x)) => {
                let x = Var::new(x);
                if self.eat(&Tok::LBracket) {
                    let i = self.expr()?;
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::Arrow)?;
                    Instruction::ArrayStore(x, i, self.expr()?)
                } else {
                    self.expect(Tok::Arrow)?;
                    Instruction::Assign(x, self.expr()?)
                }
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                return Err(self.error(format!("expected an instruction, found {}", self.found())));
            }
        };
        self.end()?;
        Ok(ins)
    }
}

struct PendingVersion {
    name: VersionName,
    instrs: Vec<(Option<Label>, Instruction, usize)>,
}

fn finish_version(pv: PendingVersion) -> Result<Version, ParseError> {
    let explicit: HashSet<Label> = pv.instrs.iter().filter_map(|(l, _, _)| l.clone()).collect();
    let mut next = 0usize;
    let mut seen = HashSet::new();
    let mut instrs = Vec::new();
    for (label, ins, line) in pv.instrs {
        let label = match label {
            Some(l) => l,
            None => loop {
                let cand = Label::new(format!("_{next}"));
                next += 1;
                if !explicit.contains(&cand) {
                    break cand;
                }
            },
        };
        if !seen.insert(label.clone()) {
            return Err(ParseError::Syntax {
                line,
                column: 1,
                message: format!("duplicate label `{label}` in version {}", pv.name),
            });
        }
        instrs.push((label, ins));
    }
    Ok(Version {
        name: pv.name,
        body: InstructionStream::new(instrs),
    })
}

/// Parses a whole program.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut functions: Vec<Function> = Vec::new();
    let mut current: Option<PendingVersion> = None;

    let flush = |current: &mut Option<PendingVersion>, functions: &mut Vec<Function>| -> Result<(), ParseError> {
        if let Some(pv) = current.take() {
            let v = finish_version(pv)?;
            functions
                .last_mut()
                .expect("a version always follows a function header")
                .versions
                .push(v);
        }
        Ok(())
    };

    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex_line(line_no, raw)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor {
            line: line_no,
            toks: &toks,
            pos: 0,
            eol_col: raw.chars().count() + 1,
        };
        match cur.peek() {
            Some(Tok::Kw("func")) => {
                cur.bump();
                let name = cur.ident("function name")?;
                cur.expect(Tok::LParen)?;
                let mut params = Vec::new();
                if !cur.eat(&Tok::RParen) {
                    loop {
                        params.push(cur.var()?);
                        if cur.eat(&Tok::RParen) {
                            break;
                        }
                        cur.expect(Tok::Comma)?;
                    }
                }
                cur.end()?;
                flush(&mut current, &mut functions)?;
                functions.push(Function {
                    name: FunName::new(name),
                    params,
                    versions: Vec::new(),
                });
            }
            Some(Tok::Kw("version")) => {
                cur.bump();
                let name = cur.ident("version name")?;
                cur.end()?;
                if functions.is_empty() {
                    return Err(cur.error("`version` outside of a function"));
                }
                flush(&mut current, &mut functions)?;
                current = Some(PendingVersion {
                    name: VersionName::new(name),
                    instrs: Vec::new(),
                });
            }
            _ => {
                let label = if matches!(cur.peek(), Some(Tok::Ident(_))) && cur.peek2() == Some(&Tok::Colon) {
                    let l = cur.label()?;
                    cur.bump();
                    Some(l)
                } else {
                    None
                };
                let pv = match current.as_mut() {
                    Some(pv) => pv,
                    None => return Err(cur.error("instruction outside of a version")),
                };
                let ins = cur.instruction()?;
                pv.instrs.push((label, ins, line_no));
            }
        }
    }
    flush(&mut current, &mut functions)?;
    Ok(Program { functions })
}

/// Parses a single expression, as used in pipeline arguments.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex_line(1, src)?;
    let mut cur = Cursor {
        line: 1,
        toks: &toks,
        pos: 0,
        eol_col: src.chars().count() + 1,
    };
    let e = cur.expr()?;
    cur.end()?;
    Ok(e)
}

/// Parses an input script: literals separated by commas and/or newlines.
pub fn parse_inputs(src: &str) -> Result<Vec<Literal>, ParseError> {
    let mut out = Vec::new();
    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex_line(line_no, raw).map_err(|e| match e {
            ParseError::Syntax { line, column, .. } => ParseError::Syntax {
                line,
                column,
                message: "input scripts contain literals separated by `,` or newlines".into(),
            },
            other => other,
        })?;
        let mut expect_value = true;
        for (col, t) in &toks {
            let lit = match t {
                Tok::Int(n) => Some(Literal::Int(*n)),
                Tok::Kw("true") => Some(Literal::Bool(true)),
                Tok::Kw("false") => Some(Literal::Bool(false)),
                Tok::Kw("nil") => Some(Literal::Nil),
                Tok::Comma if !expect_value => None,
                _ => {
                    return Err(ParseError::Syntax {
                        line: line_no,
                        column: *col,
                        message: format!("unexpected {} in input script", t.describe()),
                    })
                }
            };
            match lit {
                Some(l) if expect_value => {
                    out.push(l);
                    expect_value = false;
                }
                Some(_) => {
                    return Err(ParseError::Syntax {
                        line: line_no,
                        column: *col,
                        message: "missing `,` between input literals".into(),
                    })
                }
                None => expect_value = true,
            }
        }
        if expect_value && !toks.is_empty() {
            let col = toks.last().map(|(c, _)| *c).unwrap_or(1);
            return Err(ParseError::Syntax {
                line: line_no,
                column: col,
                message: "trailing `,` in input script".into(),
            });
        }
    }
    Ok(out)
}

pub fn print_inputs(inputs: &[Literal]) -> String {
    let mut s = inputs.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ");
    s.push('\n');
    s
}

pub fn simple_to_string(s: &SimpleExpr) -> String {
    match s {
        SimpleExpr::Lit(l) => l.to_string(),
        SimpleExpr::Var(v) => v.to_string(),
        SimpleExpr::FunRef(f) => format!("&{f}"),
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    match e {
        Expr::Simple(a) => simple_to_string(a),
        Expr::ArrayRead(a, i) => format!("{}[{}]", simple_to_string(a), simple_to_string(i)),
        Expr::Length(a) => format!("length({})", simple_to_string(a)),
        Expr::Unary(UnOp::Not, a) => format!("!{}", simple_to_string(a)),
        // `-7` lexes as a literal, so negation of a literal keeps a space.
        Expr::Unary(UnOp::Neg, a @ SimpleExpr::Lit(_)) => format!("- {}", simple_to_string(a)),
        Expr::Unary(UnOp::Neg, a) => format!("-{}", simple_to_string(a)),
        Expr::Binary(op, a, b) => format!("{} {} {}", simple_to_string(a), op.symbol(), simple_to_string(b)),
    }
}

fn join_exprs(es: &[Expr]) -> String {
    es.iter().map(expr_to_string).collect::<Vec<_>>().join(", ")
}

pub fn varmap_to_string(vm: &Varmap) -> String {
    let inner =
        vm.0.iter()
            .map(|(x, e)| format!("{x} = {}", expr_to_string(e)))
            .collect::<Vec<_>>()
            .join(", ");
    format!("[{inner}]")
}

pub fn instruction_to_string(ins: &Instruction) -> String {
    match ins {
        Instruction::VarDecl(x, e) => format!("var {x} = {}", expr_to_string(e)),
        Instruction::Drop(x) => format!("drop {x}"),
        Instruction::Assign(x, e) => format!("{x} <- {}", expr_to_string(e)),
        Instruction::ArrayAlloc(x, e) => format!("array {x}[{}]", expr_to_string(e)),
        Instruction::ArrayLit(x, es) => format!("array {x} = [{}]", join_exprs(es)),
        Instruction::ArrayStore(x, i, e) => {
            format!("{x}[{}] <- {}", expr_to_string(i), expr_to_string(e))
        }
        Instruction::Branch(e, a, b) => format!("branch {} {a} {b}", expr_to_string(e)),
        Instruction::Goto(l) => format!("goto {l}"),
        Instruction::Print(e) => format!("print {}", expr_to_string(e)),
        Instruction::Read(x) => format!("read {x}"),
        Instruction::Call(x, f, args) => {
            format!("call {x} = {}({})", expr_to_string(f), join_exprs(args))
        }
        Instruction::Return(e) => format!("return {}", expr_to_string(e)),
        Instruction::Stop => "stop".into(),
        Instruction::Assume { preds, target, frames } => {
            let mut s = String::from("assume ");
            if !preds.is_empty() {
                s.push_str(&join_exprs(preds));
                s.push(' ');
            }
            let _ = write!(
                s,
                "else {}.{}.{} {}",
                target.func,
                target.version,
                target.label,
                varmap_to_string(&target.varmap)
            );
            for fr in frames {
                let _ = write!(
                    s,
                    ", {}.{}.{} ret {} {}",
                    fr.func,
                    fr.version,
                    fr.label,
                    fr.ret,
                    varmap_to_string(&fr.varmap)
                );
            }
            s
        }
    }
}

pub fn print_version(out: &mut String, v: &Version) {
    let _ = writeln!(out, "version {}", v.name);
    for (l, ins) in &v.body.instrs {
        let _ = writeln!(out, "  {l}: {}", instruction_to_string(ins));
    }
}

pub fn print_function(out: &mut String, f: &Function) {
    let params = f.params.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(", ");
    let _ = writeln!(out, "func {}({params})", f.name);
    for v in &f.versions {
        print_version(out, v);
    }
}

/// Prints a program in the surface syntax accepted by [`parse_program`].
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, f) in p.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_function(&mut out, f);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_size_base() {
        let src = "func size(x)\nversion Vb\n  L1: var el = 32\n  L2: branch x == nil L4 L3\n  L3: var l = x[0]\n  return l * el\n  L4: return 0\n";
        let p = parse_program(src).unwrap();
        let f = &p.functions[0];
        assert_eq!(f.params, vec![Var::new("x")]);
        let body = &f.versions[0].body;
        assert_eq!(body.len(), 5);
        assert_eq!(body.instrs[3].0, Label::new("_0"));
        assert_eq!(
            body.instrs[1].1,
            Instruction::Branch(
                Expr::Binary(BinOp::Eq, SimpleExpr::Var(Var::new("x")), SimpleExpr::Lit(Literal::Nil)),
                Label::new("L4"),
                Label::new("L3")
            )
        );
    }

    #[test]
    fn synthesized_labels_skip_explicit_ones() {
        let src = "func main()\nversion V\n  print 1\n  _0: print 2\n  stop\n";
        let p = parse_program(src).unwrap();
        let labels: Vec<_> = p.functions[0].versions[0]
            .body
            .labels()
            .map(|l| l.to_string())
            .collect();
        assert_eq!(labels, vec!["_1", "_0", "_2"]);
    }

    #[test]
    fn nested_expression_is_rejected() {
        let src = "func main()\nversion V\n  print (x + 1) * 2\n";
        match parse_program(src) {
            Err(ParseError::NestedExpression { line: 3, .. }) => {}
            other => panic!("expected nested-expression error, got {other:?}"),
        }
        assert!(matches!(
            parse_expr("x + y * 2"),
            Err(ParseError::NestedExpression { .. })
        ));
        assert!(matches!(
            parse_expr("x[0] + 1"),
            Err(ParseError::NestedExpression { .. })
        ));
    }

    #[test]
    fn negative_literals_and_negation_round_trip() {
        for src in ["-7", "- 7", "-x", "x - -7", "x - 7", "- -7", "x < -1"] {
            let e = parse_expr(src).unwrap();
            assert_eq!(parse_expr(&expr_to_string(&e)).unwrap(), e, "{src}");
        }
        assert_eq!(parse_expr("-7").unwrap(), Expr::int(-7));
        assert_eq!(
            parse_expr("- 7").unwrap(),
            Expr::Unary(UnOp::Neg, SimpleExpr::Lit(Literal::Int(7)))
        );
        assert_eq!(parse_expr("-9223372036854775808").unwrap(), Expr::int(i64::MIN));
    }

    #[test]
    fn assume_with_frames() {
        let src = "func main()\nversion V\n  assume x != nil else size.Vb.L2 [el = 32, x = x], main.Vb.Lret ret s [pl = pl, vec = vec]\n";
        let p = parse_program(src).unwrap();
        let ins = &p.functions[0].versions[0].body.instrs[0].1;
        match ins {
            Instruction::Assume { preds, target, frames } => {
                assert_eq!(preds.len(), 1);
                assert_eq!(target.label, Label::new("L2"));
                assert_eq!(target.varmap.0.len(), 2);
                assert_eq!(frames.len(), 1);
                assert_eq!(frames[0].ret, Var::new("s"));
            }
            _ => panic!("not an assume"),
        }
        let printed = print_program(&p);
        assert!(printed.contains("ret s [pl = pl, vec = vec]"));
        assert_eq!(parse_program(&printed).unwrap(), p);
    }

    #[test]
    fn empty_varmap_and_predicates() {
        let src = "func f()\nversion V\n  L0: assume else f.W.L0 []\n  return 1\n";
        let p = parse_program(src).unwrap();
        let printed = print_program(&p);
        assert!(printed.contains("assume else f.W.L0 []"));
        assert_eq!(parse_program(&printed).unwrap(), p);
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = parse_program("func main()\nversion V\n  var = 3\n").unwrap_err();
        assert_eq!(err.line(), 3);
        assert!(parse_program("  print 1\n").is_err());
        assert!(parse_program("func f()\nversion V\n  L: print 1\n  L: print 2\n").is_err());
    }

    #[test]
    fn inputs() {
        assert_eq!(
            parse_inputs("1, 2\nnil,true\n-3\n").unwrap(),
            vec![
                Literal::Int(1),
                Literal::Int(2),
                Literal::Nil,
                Literal::Bool(true),
                Literal::Int(-3)
            ]
        );
        assert_eq!(parse_inputs("").unwrap(), vec![]);
        assert!(parse_inputs("3; 4").is_err());
        assert!(parse_inputs("3 4").is_err());
        assert!(parse_inputs("3,").is_err());
    }
}
