//! Output language: the input header plus `parallel`, `guard`, symbolic loop bounds and
//! composite gate definitions.

use std::collections::HashMap;
use std::fmt::{self, Write};

use super::lexer::{lex, Cursor, Tok};
use super::parser::parse_matrix;
use super::printer::fmt_matrix;
use super::FrontendError;
use crate::gate_algebra::{Hint, Mat2};
use crate::ir::{GateContent, GateDef, QubitArray};

/// Integer expression with Euclidean `/` and `%`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Mod(Box<Expr>, Box<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Int(0), _) => b,
            (_, Expr::Int(0)) => a,
            (Expr::Int(x), Expr::Int(y)) => Expr::Int(x + y),
            (_, Expr::Int(y)) if *y < 0 => Expr::Sub(Box::new(a), Box::new(Expr::Int(-y))),
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (_, Expr::Int(0)) => a,
            (Expr::Int(x), Expr::Int(y)) => Expr::Int(x - y),
            (_, Expr::Int(y)) if *y < 0 => Expr::Add(Box::new(a), Box::new(Expr::Int(-y))),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Int(0), _) | (_, Expr::Int(0)) => Expr::Int(0),
            (Expr::Int(1), _) => b,
            (_, Expr::Int(1)) => a,
            (Expr::Int(x), Expr::Int(y)) => Expr::Int(x * y),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (_, Expr::Int(1)) => a,
            (Expr::Int(x), Expr::Int(y)) if *y != 0 => Expr::Int(x.div_euclid(*y)),
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn rem(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Int(x), Expr::Int(y)) if *y != 0 => Expr::Int(x.rem_euclid(*y)),
            _ => Expr::Mod(Box::new(a), Box::new(b)),
        }
    }

    /// `k·base + b`.
    pub fn affine(k: i64, base: Expr, b: i64) -> Expr {
        Expr::add(Expr::mul(Expr::Int(k), base), Expr::Int(b))
    }

    pub fn eval(&self, env: &HashMap<String, i64>) -> Result<i64, String> {
        let bin = |a: &Expr, b: &Expr| -> Result<(i64, i64), String> { Ok((a.eval(env)?, b.eval(env)?)) };
        match self {
            Expr::Int(v) => Ok(*v),
            Expr::Var(n) => env.get(n).copied().ok_or_else(|| format!("unbound variable `{n}`")),
            Expr::Neg(a) => Ok(-a.eval(env)?),
            Expr::Add(a, b) => bin(a, b).map(|(x, y)| x + y),
            Expr::Sub(a, b) => bin(a, b).map(|(x, y)| x - y),
            Expr::Mul(a, b) => bin(a, b).map(|(x, y)| x * y),
            Expr::Div(a, b) | Expr::Mod(a, b) => {
                let (x, y) = bin(a, b)?;
                if y == 0 {
                    return Err("division by zero".to_string());
                }
                Ok(if matches!(self, Expr::Div(..)) { x.div_euclid(y) } else { x.rem_euclid(y) })
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) | Expr::Mod(..) => 2,
            Expr::Int(v) if *v < 0 => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Left-associative binary operators: the right operand needs parentheses at equal precedence.
        let side = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| -> fmt::Result {
            if e.prec() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        let binop = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, p: u8| -> fmt::Result {
            side(f, a, p)?;
            f.write_str(op)?;
            side(f, b, p + 1)
        };
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Var(n) => f.write_str(n),
            Expr::Neg(a) => {
                f.write_str("-")?;
                if matches!(**a, Expr::Var(_)) {
                    write!(f, "{a}")
                } else {
                    write!(f, "({a})")
                }
            }
            Expr::Add(a, b) => binop(f, a, "+", b, 1),
            Expr::Sub(a, b) => binop(f, a, "-", b, 1),
            Expr::Mul(a, b) => binop(f, a, "*", b, 2),
            Expr::Div(a, b) => binop(f, a, "/", b, 2),
            Expr::Mod(a, b) => binop(f, a, "%", b, 2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Ge,
    Le,
    Gt,
    Lt,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Lt => a < b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Compare {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

impl Compare {
    pub fn new(lhs: Expr, op: CmpOp, rhs: Expr) -> Self {
        Compare { lhs, op, rhs }
    }

    pub fn eval(&self, env: &HashMap<String, i64>) -> Result<bool, String> {
        Ok(self.op.holds(self.lhs.eval(env)?, self.rhs.eval(env)?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateUse {
    /// Builtin gate such as `H`.
    Named(String),
    /// Element of a declared gate array.
    Indexed { name: String, index: Expr },
    /// Composite gate, with its argument when the definition takes one.
    Composite { name: String, arg: Option<Expr> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum CompositeFactor {
    Matrix(Mat2),
    Named(String),
    Indexed { name: String, index: Expr },
}

/// `defgate name(param) = f0 . f1 . ...;` with `f0` applied first.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeDef {
    pub name: String,
    pub param: Option<String>,
    pub factors: Vec<CompositeFactor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutQubit {
    pub array: String,
    pub index: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OutOp {
    Sq { gate: GateUse, target: OutQubit },
    Cz { a: OutQubit, b: OutQubit },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Op(OutOp),
    For { var: String, lo: Expr, hi: Expr, body: Vec<Stmt> },
    Parallel(Vec<OutOp>),
    /// Arms are tried in order; each condition is a conjunction.
    Guard { arms: Vec<(Vec<Compare>, Vec<Stmt>)>, otherwise: Vec<Stmt> },
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct OutputProgram {
    pub qubits: Vec<QubitArray>,
    pub gates: Vec<GateDef>,
    pub composites: Vec<CompositeDef>,
    pub symbols: Vec<String>,
    pub statements: Vec<Stmt>,
}

impl OutputProgram {
    /// Number of statements at every nesting level, counting each op of a parallel block.
    pub fn op_count(&self) -> usize {
        fn count(s: &[Stmt]) -> usize {
            s.iter()
                .map(|s| match s {
                    Stmt::Op(_) => 1,
                    Stmt::Parallel(ops) => ops.len(),
                    Stmt::For { body, .. } => count(body),
                    Stmt::Guard { arms, otherwise } => arms.iter().map(|(_, b)| count(b)).sum::<usize>() + count(otherwise),
                })
                .sum()
        }
        count(&self.statements)
    }
}

fn fmt_qubit(q: &OutQubit) -> String {
    format!("{}[{}]", q.array, q.index)
}

fn fmt_gate(g: &GateUse) -> String {
    match g {
        GateUse::Named(n) => n.clone(),
        GateUse::Indexed { name, index } => format!("{name}[{index}]"),
        GateUse::Composite { name, arg: Some(a) } => format!("{name}({a})"),
        GateUse::Composite { name, arg: None } => name.clone(),
    }
}

fn fmt_op(op: &OutOp) -> String {
    match op {
        OutOp::Sq { gate, target } => format!("{} {};", fmt_gate(gate), fmt_qubit(target)),
        OutOp::Cz { a, b } => format!("CZ {},{};", fmt_qubit(a), fmt_qubit(b)),
    }
}

fn fmt_cond(c: &[Compare]) -> String {
    c.iter().map(|c| format!("{}{}{}", c.lhs, c.op.symbol(), c.rhs)).collect::<Vec<_>>().join(" && ")
}

fn emit_block(stmts: &[Stmt], depth: usize, out: &mut String) {
    let pad = "    ".repeat(depth);
    for s in stmts {
        match s {
            Stmt::Op(op) => {
                let _ = writeln!(out, "{pad}{}", fmt_op(op));
            }
            Stmt::Parallel(ops) => {
                let body: Vec<String> = ops.iter().map(fmt_op).collect();
                let _ = writeln!(out, "{pad}parallel {{ {} }}", body.join(" "));
            }
            Stmt::For { var, lo, hi, body } => {
                let _ = writeln!(out, "{pad}for {var} in {lo} to {hi} {{");
                emit_block(body, depth + 1, out);
                let _ = writeln!(out, "{pad}}}");
            }
            Stmt::Guard { arms, otherwise } => {
                let _ = writeln!(out, "{pad}guard {{");
                let inner = "    ".repeat(depth + 1);
                for (cond, body) in arms {
                    let _ = writeln!(out, "{inner}{} => {{", fmt_cond(cond));
                    emit_block(body, depth + 2, out);
                    let _ = writeln!(out, "{inner}}}");
                }
                let _ = writeln!(out, "{inner}otherwise => {{");
                emit_block(otherwise, depth + 2, out);
                let _ = writeln!(out, "{inner}}}");
                let _ = writeln!(out, "{pad}}}");
            }
        }
    }
}

/// Renders an output program.
pub fn emit(p: &OutputProgram) -> String {
    let mut out = String::new();
    for a in &p.qubits {
        let _ = writeln!(out, "qubit {}[{}];", a.name, a.len);
    }
    for d in &p.gates {
        let content = match &d.content {
            GateContent::Symbolic(Hint::Diagonal) => "RZ".to_string(),
            GateContent::Symbolic(Hint::AntiDiagonal) => "RZ+".to_string(),
            GateContent::Symbolic(Hint::Unknown) => "Unknown".to_string(),
            GateContent::Known(ms) => format!("{{ {} }}", ms.iter().map(fmt_matrix).collect::<Vec<_>>().join(", ")),
        };
        let _ = writeln!(out, "defgate {}[{}] = {content};", d.name, d.len);
    }
    for c in &p.composites {
        let factors: Vec<String> = c
            .factors
            .iter()
            .map(|f| match f {
                CompositeFactor::Matrix(m) => fmt_matrix(m),
                CompositeFactor::Named(n) => n.clone(),
                CompositeFactor::Indexed { name, index } => format!("{name}[{index}]"),
            })
            .collect();
        let head = match &c.param {
            Some(x) => format!("{}({x})", c.name),
            None => c.name.clone(),
        };
        let _ = writeln!(out, "defgate {head} = {};", factors.join(" . "));
    }
    if !p.symbols.is_empty() {
        let _ = writeln!(out, "symbolic {};", p.symbols.join(", "));
    }
    emit_block(&p.statements, 0, &mut out);
    out
}

impl fmt::Display for OutputProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit(self))
    }
}

// ---- parser ----

fn p_expr(cur: &mut Cursor) -> Result<Expr, FrontendError> {
    let mut lhs = p_term(cur)?;
    loop {
        match cur.peek() {
            Tok::Plus => {
                cur.next();
                lhs = Expr::Add(Box::new(lhs), Box::new(p_term(cur)?));
            }
            Tok::Minus => {
                cur.next();
                lhs = Expr::Sub(Box::new(lhs), Box::new(p_term(cur)?));
            }
            _ => return Ok(lhs),
        }
    }
}

fn p_term(cur: &mut Cursor) -> Result<Expr, FrontendError> {
    let mut lhs = p_factor(cur)?;
    loop {
        let ctor: fn(Box<Expr>, Box<Expr>) -> Expr = match cur.peek() {
            Tok::Star => Expr::Mul,
            Tok::Slash => Expr::Div,
            Tok::Percent => Expr::Mod,
            _ => return Ok(lhs),
        };
        cur.next();
        lhs = ctor(Box::new(lhs), Box::new(p_factor(cur)?));
    }
}

fn p_factor(cur: &mut Cursor) -> Result<Expr, FrontendError> {
    let (l, c) = cur.here();
    match cur.next() {
        Tok::Int(v) => Ok(Expr::Int(v)),
        Tok::Ident(s) => Ok(Expr::Var(s)),
        Tok::Minus => {
            if let Tok::Int(v) = cur.peek().clone() {
                cur.next();
                return Ok(Expr::Int(-v));
            }
            Ok(Expr::Neg(Box::new(p_factor(cur)?)))
        }
        Tok::LParen => {
            let e = p_expr(cur)?;
            cur.expect(Tok::RParen)?;
            Ok(e)
        }
        other => Err(FrontendError::syntax(l, c, format!("expected expression, found {}", other.describe()))),
    }
}

fn p_qubit(cur: &mut Cursor) -> Result<OutQubit, FrontendError> {
    let array = cur.expect_ident()?;
    cur.expect(Tok::LBracket)?;
    let index = p_expr(cur)?;
    cur.expect(Tok::RBracket)?;
    Ok(OutQubit { array, index })
}

fn p_op(cur: &mut Cursor, composites: &[CompositeDef]) -> Result<OutOp, FrontendError> {
    let name = cur.expect_ident()?;
    if name == "CZ" {
        let a = p_qubit(cur)?;
        cur.expect(Tok::Comma)?;
        let b = p_qubit(cur)?;
        cur.expect(Tok::Semi)?;
        return Ok(OutOp::Cz { a, b });
    }
    let gate = if composites.iter().any(|c| c.name == name) {
        let arg = if cur.eat(&Tok::LParen) {
            let e = p_expr(cur)?;
            cur.expect(Tok::RParen)?;
            Some(e)
        } else {
            None
        };
        GateUse::Composite { name, arg }
    } else if cur.eat(&Tok::LBracket) {
        let index = p_expr(cur)?;
        cur.expect(Tok::RBracket)?;
        GateUse::Indexed { name, index }
    } else {
        GateUse::Named(name)
    };
    let target = p_qubit(cur)?;
    cur.expect(Tok::Semi)?;
    Ok(OutOp::Sq { gate, target })
}

fn p_cond(cur: &mut Cursor) -> Result<Vec<Compare>, FrontendError> {
    let mut out = Vec::new();
    loop {
        let lhs = p_expr(cur)?;
        let op = match cur.next() {
            Tok::EqEq => CmpOp::Eq,
            Tok::NotEq => CmpOp::Ne,
            Tok::Ge => CmpOp::Ge,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Lt => CmpOp::Lt,
            other => return Err(cur.error(format!("expected comparison, found {}", other.describe()))),
        };
        let rhs = p_expr(cur)?;
        out.push(Compare { lhs, op, rhs });
        if !cur.eat(&Tok::AndAnd) {
            return Ok(out);
        }
    }
}

fn p_block(cur: &mut Cursor, composites: &[CompositeDef]) -> Result<Vec<Stmt>, FrontendError> {
    cur.expect(Tok::LBrace)?;
    let mut out = Vec::new();
    while cur.peek() != &Tok::RBrace {
        if cur.peek() == &Tok::Eof {
            return Err(cur.error("unterminated block"));
        }
        out.push(p_stmt(cur, composites)?);
    }
    cur.next();
    Ok(out)
}

fn p_stmt(cur: &mut Cursor, composites: &[CompositeDef]) -> Result<Stmt, FrontendError> {
    if cur.is_ident("for") {
        cur.next();
        let var = cur.expect_ident()?;
        cur.expect_keyword("in")?;
        let lo = p_expr(cur)?;
        cur.expect_keyword("to")?;
        let hi = p_expr(cur)?;
        let body = p_block(cur, composites)?;
        return Ok(Stmt::For { var, lo, hi, body });
    }
    if cur.is_ident("parallel") && cur.peek_at(1) == &Tok::LBrace {
        cur.next();
        cur.next();
        let mut ops = Vec::new();
        while !cur.eat(&Tok::RBrace) {
            ops.push(p_op(cur, composites)?);
        }
        return Ok(Stmt::Parallel(ops));
    }
    if cur.is_ident("guard") && cur.peek_at(1) == &Tok::LBrace {
        cur.next();
        cur.next();
        let mut arms = Vec::new();
        loop {
            if cur.is_ident("otherwise") {
                cur.next();
                cur.expect(Tok::FatArrow)?;
                let otherwise = p_block(cur, composites)?;
                cur.expect(Tok::RBrace)?;
                return Ok(Stmt::Guard { arms, otherwise });
            }
            let cond = p_cond(cur)?;
            cur.expect(Tok::FatArrow)?;
            arms.push((cond, p_block(cur, composites)?));
        }
    }
    Ok(Stmt::Op(p_op(cur, composites)?))
}

/// Parses output-language text.
pub fn parse_output(src: &str) -> Result<OutputProgram, FrontendError> {
    let mut cur = Cursor::new(lex(src)?);
    let mut p = OutputProgram::default();
    while cur.peek() != &Tok::Eof {
        if cur.is_ident("qubit") {
            cur.next();
            let name = cur.expect_ident()?;
            cur.expect(Tok::LBracket)?;
            let len = cur.expect_int()?;
            cur.expect(Tok::RBracket)?;
            cur.expect(Tok::Semi)?;
            p.qubits.push(QubitArray { name, len: len as usize });
        } else if cur.is_ident("defgate") {
            cur.next();
            let name = cur.expect_ident()?;
            if cur.eat(&Tok::LBracket) {
                let len = cur.expect_int()? as usize;
                cur.expect(Tok::RBracket)?;
                cur.expect(Tok::Assign)?;
                let content = if cur.is_ident("RZ") {
                    cur.next();
                    GateContent::Symbolic(if cur.eat(&Tok::Plus) { Hint::AntiDiagonal } else { Hint::Diagonal })
                } else if cur.is_ident("Unknown") {
                    cur.next();
                    GateContent::Symbolic(Hint::Unknown)
                } else {
                    cur.expect(Tok::LBrace)?;
                    let mut ms = vec![parse_matrix(&mut cur)?];
                    while cur.eat(&Tok::Comma) {
                        ms.push(parse_matrix(&mut cur)?);
                    }
                    cur.expect(Tok::RBrace)?;
                    GateContent::Known(ms)
                };
                cur.expect(Tok::Semi)?;
                p.gates.push(GateDef { name, len, content });
            } else {
                let param = if cur.eat(&Tok::LParen) {
                    let x = cur.expect_ident()?;
                    cur.expect(Tok::RParen)?;
                    Some(x)
                } else {
                    None
                };
                cur.expect(Tok::Assign)?;
                let mut factors = Vec::new();
                loop {
                    let f = if cur.peek() == &Tok::LBracket {
                        CompositeFactor::Matrix(parse_matrix(&mut cur)?)
                    } else {
                        let n = cur.expect_ident()?;
                        if cur.eat(&Tok::LBracket) {
                            let index = p_expr(&mut cur)?;
                            cur.expect(Tok::RBracket)?;
                            CompositeFactor::Indexed { name: n, index }
                        } else {
                            CompositeFactor::Named(n)
                        }
                    };
                    factors.push(f);
                    if !cur.eat(&Tok::Dot) {
                        break;
                    }
                }
                cur.expect(Tok::Semi)?;
                p.composites.push(CompositeDef { name, param, factors });
            }
        } else if cur.is_ident("symbolic") {
            cur.next();
            loop {
                p.symbols.push(cur.expect_ident()?);
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            }
            cur.expect(Tok::Semi)?;
        } else {
            let s = p_stmt(&mut cur, &p.composites)?;
            p.statements.push(s);
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(e: Expr) -> OutQubit {
        OutQubit { array: "q".into(), index: e }
    }

    fn x(off: i64) -> Expr {
        Expr::add(Expr::var("x"), Expr::Int(off))
    }

    #[test]
    fn parallel_listing_shape() {
        let p = OutputProgram {
            statements: vec![Stmt::Parallel(vec![OutOp::Cz { a: q(x(-4)), b: q(x(-3)) }, OutOp::Cz { a: q(x(-2)), b: q(x(-1)) }])],
            ..Default::default()
        };
        assert_eq!(emit(&p), "parallel { CZ q[x-4],q[x-3]; CZ q[x-2],q[x-1]; }\n");
    }

    #[test]
    fn empty_program() {
        assert_eq!(emit(&OutputProgram::default()), "");
        let p = OutputProgram { qubits: vec![QubitArray { name: "q".into(), len: 2 }], ..Default::default() };
        assert_eq!(emit(&p), "qubit q[2];\n");
        assert_eq!(parse_output(&emit(&p)).unwrap(), p);
    }

    #[test]
    fn guard_round_trip() {
        let m = Expr::var("m");
        let trips = Expr::add(Expr::sub(Expr::var("n"), m.clone()), Expr::Int(1));
        let guard = Stmt::Guard {
            arms: vec![
                (
                    vec![
                        Compare::new(Expr::rem(m.clone(), Expr::Int(2)), CmpOp::Eq, Expr::Int(0)),
                        Compare::new(trips.clone(), CmpOp::Ge, Expr::Int(6)),
                    ],
                    vec![Stmt::Op(OutOp::Sq { gate: GateUse::Named("H".into()), target: q(Expr::div(m.clone(), Expr::Int(2))) })],
                ),
                (vec![Compare::new(Expr::rem(m.clone(), Expr::Int(2)), CmpOp::Eq, Expr::Int(1))], vec![]),
            ],
            otherwise: vec![Stmt::For {
                var: "i".into(),
                lo: m.clone(),
                hi: Expr::var("n"),
                body: vec![Stmt::Op(OutOp::Cz { a: q(Expr::var("i")), b: q(x(1)) })],
            }],
        };
        let p = OutputProgram { symbols: vec!["m".into(), "n".into()], statements: vec![guard], ..Default::default() };
        let text = emit(&p);
        assert!(text.contains("m%2==0 && n-m+1>=6 => {"), "{text}");
        assert_eq!(parse_output(&text).unwrap(), p);
    }

    #[test]
    fn expression_printing_keeps_structure() {
        let cases = vec![
            Expr::Sub(Box::new(Expr::var("a")), Box::new(Expr::Add(Box::new(Expr::var("b")), Box::new(Expr::Int(1))))),
            Expr::Mul(Box::new(Expr::Int(2)), Box::new(Expr::Div(Box::new(Expr::var("m")), Box::new(Expr::Int(2))))),
            Expr::Neg(Box::new(Expr::Add(Box::new(Expr::var("a")), Box::new(Expr::Int(-3))))),
            Expr::Mod(Box::new(Expr::Int(-7)), Box::new(Expr::Int(3))),
            Expr::Neg(Box::new(Expr::Int(4))),
        ];
        for e in cases {
            let text = format!("qubit q[1]; H q[{e}];");
            let p = parse_output(&text).unwrap();
            match &p.statements[0] {
                Stmt::Op(OutOp::Sq { target, .. }) => assert_eq!(target.index, e, "{text}"),
                _ => panic!(),
            }
        }
    }

    #[test]
    fn euclidean_semantics() {
        let env = HashMap::new();
        assert_eq!(Expr::Mod(Box::new(Expr::Int(-7)), Box::new(Expr::Int(3))).eval(&env), Ok(2));
        assert_eq!(Expr::Div(Box::new(Expr::Int(-7)), Box::new(Expr::Int(3))).eval(&env), Ok(-3));
        assert_eq!(Expr::Mod(Box::new(Expr::Int(7)), Box::new(Expr::Int(-3))).eval(&env), Ok(1));
    }

    #[test]
    fn composites_round_trip() {
        let p = OutputProgram {
            qubits: vec![QubitArray { name: "q".into(), len: 4 }],
            gates: vec![GateDef { name: "R".into(), len: 9, content: GateContent::Symbolic(Hint::AntiDiagonal) }],
            composites: vec![
                CompositeDef {
                    name: "composite_0".into(),
                    param: Some("x".into()),
                    factors: vec![
                        CompositeFactor::Indexed { name: "R".into(), index: Expr::affine(2, Expr::var("x"), 1) },
                        CompositeFactor::Named("H".into()),
                        CompositeFactor::Matrix(Mat2::rz(0.3)),
                    ],
                },
                CompositeDef { name: "composite_1".into(), param: None, factors: vec![CompositeFactor::Matrix(Mat2::u3(0.1, 0.2, 0.3))] },
            ],
            symbols: vec![],
            statements: vec![
                Stmt::Op(OutOp::Sq {
                    gate: GateUse::Composite { name: "composite_0".into(), arg: Some(x(-1)) },
                    target: q(Expr::Int(0)),
                }),
                Stmt::Op(OutOp::Sq { gate: GateUse::Composite { name: "composite_1".into(), arg: None }, target: q(Expr::Int(1)) }),
                Stmt::Op(OutOp::Sq { gate: GateUse::Indexed { name: "R".into(), index: Expr::Int(3) }, target: q(Expr::Int(1)) }),
            ],
        };
        assert_eq!(parse_output(&emit(&p)).unwrap(), p);
    }
}
