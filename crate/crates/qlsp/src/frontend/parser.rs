use std::collections::HashMap;

use super::lexer::{lex, Cursor, Tok};
use super::{ErrorKind, FrontendError};
use crate::gate_algebra::{builtin, Hint, Mat2, SqGate, C64, TOL};
use crate::ir::{Affine, GateContent, GateDef, Instruction, LoopProgram, LoopRange, LoopSpec, QubitArray, QubitRef};

type Pos = (usize, usize);

#[derive(Clone, Debug)]
enum RawExpr {
    Int(i64),
    Var(String, Pos),
    Neg(Box<RawExpr>),
    Bin(char, Box<RawExpr>, Box<RawExpr>, Pos),
}

#[derive(Clone, Debug)]
struct RawRef {
    array: String,
    index: RawExpr,
    pos: Pos,
}

#[derive(Clone, Debug)]
enum RawStmt {
    Sq { gate: String, index: Option<RawExpr>, target: RawRef, pos: Pos },
    Cz { a: RawRef, b: RawRef, pos: Pos },
    For { var: String, lo: RawExpr, hi: RawExpr, body: Vec<RawStmt>, pos: Pos },
}

struct Header {
    arrays: Vec<QubitArray>,
    defs: Vec<GateDef>,
    symbols: Vec<String>,
}

/// Parses an input-language program.
pub fn parse(src: &str) -> Result<LoopProgram, FrontendError> {
    let mut cur = Cursor::new(lex(src)?);
    let mut header = Header { arrays: Vec::new(), defs: Vec::new(), symbols: Vec::new() };
    let mut stmts = Vec::new();
    while cur.peek() != &Tok::Eof {
        if cur.is_ident("qubit") {
            parse_qubit_decl(&mut cur, &mut header)?;
        } else if cur.is_ident("defgate") {
            parse_defgate(&mut cur, &mut header)?;
        } else if cur.is_ident("symbolic") {
            let (l, c) = cur.here();
            cur.next();
            loop {
                let name = cur.expect_ident()?;
                if header.symbols.contains(&name) {
                    return Err(FrontendError::new(ErrorKind::Invalid, l, c, format!("symbol `{name}` declared twice")));
                }
                header.symbols.push(name);
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            }
            cur.expect(Tok::Semi)?;
        } else {
            stmts.push(parse_stmt(&mut cur)?);
        }
    }
    lower(header, stmts)
}

fn check_fresh(header: &Header, name: &str, pos: Pos) -> Result<(), FrontendError> {
    let taken = header.arrays.iter().any(|a| a.name == name)
        || header.defs.iter().any(|d| d.name == name)
        || builtin(name).is_some()
        || name == "CZ";
    if taken {
        return Err(FrontendError::new(ErrorKind::Invalid, pos.0, pos.1, format!("name `{name}` is already in use")));
    }
    Ok(())
}

fn parse_qubit_decl(cur: &mut Cursor, header: &mut Header) -> Result<(), FrontendError> {
    cur.next();
    let pos = cur.here();
    let name = cur.expect_ident()?;
    check_fresh(header, &name, pos)?;
    cur.expect(Tok::LBracket)?;
    let len = cur.expect_int()?;
    if len < 1 {
        return Err(FrontendError::new(ErrorKind::Invalid, pos.0, pos.1, "qubit array length must be at least 1"));
    }
    cur.expect(Tok::RBracket)?;
    cur.expect(Tok::Semi)?;
    header.arrays.push(QubitArray { name, len: len as usize });
    Ok(())
}

fn parse_complex(cur: &mut Cursor) -> Result<C64, FrontendError> {
    if cur.eat(&Tok::LParen) {
        let re = cur.expect_real()?;
        cur.expect(Tok::Comma)?;
        let im = cur.expect_real()?;
        cur.expect(Tok::RParen)?;
        Ok(C64::new(re, im))
    } else {
        Ok(C64::new(cur.expect_real()?, 0.0))
    }
}

/// `[a, b; c, d]`
pub(super) fn parse_matrix(cur: &mut Cursor) -> Result<Mat2, FrontendError> {
    cur.expect(Tok::LBracket)?;
    let a = parse_complex(cur)?;
    cur.expect(Tok::Comma)?;
    let b = parse_complex(cur)?;
    cur.expect(Tok::Semi)?;
    let c = parse_complex(cur)?;
    cur.expect(Tok::Comma)?;
    let d = parse_complex(cur)?;
    cur.expect(Tok::RBracket)?;
    Ok(Mat2::new(a, b, c, d))
}

fn parse_defgate(cur: &mut Cursor, header: &mut Header) -> Result<(), FrontendError> {
    cur.next();
    let pos = cur.here();
    let name = cur.expect_ident()?;
    check_fresh(header, &name, pos)?;
    cur.expect(Tok::LBracket)?;
    let len = cur.expect_int()?;
    if len < 1 {
        return Err(FrontendError::new(ErrorKind::Invalid, pos.0, pos.1, "gate array length must be at least 1"));
    }
    cur.expect(Tok::RBracket)?;
    cur.expect(Tok::Assign)?;
    let content = if cur.is_ident("RZ") {
        cur.next();
        if cur.eat(&Tok::Plus) {
            GateContent::Symbolic(Hint::AntiDiagonal)
        } else {
            GateContent::Symbolic(Hint::Diagonal)
        }
    } else if cur.is_ident("Unknown") {
        cur.next();
        GateContent::Symbolic(Hint::Unknown)
    } else if cur.peek() == &Tok::LBrace {
        cur.next();
        let mut ms = Vec::new();
        loop {
            let mpos = cur.here();
            let m = parse_matrix(cur)?;
            if !m.is_unitary(TOL) {
                return Err(FrontendError::new(ErrorKind::Invalid, mpos.0, mpos.1, format!("matrix {} of `{name}` is not unitary", ms.len())));
            }
            ms.push(m);
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        cur.expect(Tok::RBrace)?;
        if ms.len() != len as usize {
            return Err(FrontendError::new(
                ErrorKind::Invalid,
                pos.0,
                pos.1,
                format!("`{name}` declares {len} gates but lists {}", ms.len()),
            ));
        }
        GateContent::Known(ms)
    } else {
        return Err(cur.error(format!("expected `RZ`, `RZ+`, `Unknown` or a matrix list, found {}", cur.peek().describe())));
    };
    cur.expect(Tok::Semi)?;
    header.defs.push(GateDef { name, len: len as usize, content });
    Ok(())
}

fn parse_expr(cur: &mut Cursor) -> Result<RawExpr, FrontendError> {
    let mut lhs = parse_term(cur)?;
    loop {
        let pos = cur.here();
        let op = match cur.peek() {
            Tok::Plus => '+',
            Tok::Minus => '-',
            _ => return Ok(lhs),
        };
        cur.next();
        let rhs = parse_term(cur)?;
        lhs = RawExpr::Bin(op, Box::new(lhs), Box::new(rhs), pos);
    }
}

fn parse_term(cur: &mut Cursor) -> Result<RawExpr, FrontendError> {
    let mut lhs = parse_factor(cur)?;
    loop {
        let pos = cur.here();
        let op = match cur.peek() {
            Tok::Star => '*',
            Tok::Slash => '/',
            Tok::Percent => '%',
            _ => return Ok(lhs),
        };
        cur.next();
        let rhs = parse_factor(cur)?;
        lhs = RawExpr::Bin(op, Box::new(lhs), Box::new(rhs), pos);
    }
}

fn parse_factor(cur: &mut Cursor) -> Result<RawExpr, FrontendError> {
    let pos = cur.here();
    match cur.next() {
        Tok::Int(v) => Ok(RawExpr::Int(v)),
        Tok::Ident(s) => Ok(RawExpr::Var(s, pos)),
        Tok::Minus => Ok(RawExpr::Neg(Box::new(parse_factor(cur)?))),
        Tok::LParen => {
            let e = parse_expr(cur)?;
            cur.expect(Tok::RParen)?;
            Ok(e)
        }
        other => Err(FrontendError::syntax(pos.0, pos.1, format!("expected expression, found {}", other.describe()))),
    }
}

fn parse_ref(cur: &mut Cursor) -> Result<RawRef, FrontendError> {
    let pos = cur.here();
    let array = cur.expect_ident()?;
    cur.expect(Tok::LBracket)?;
    let index = parse_expr(cur)?;
    cur.expect(Tok::RBracket)?;
    Ok(RawRef { array, index, pos })
}

fn parse_stmt(cur: &mut Cursor) -> Result<RawStmt, FrontendError> {
    let pos = cur.here();
    let head = match cur.peek().clone() {
        Tok::Ident(s) => s,
        other => return Err(cur.error(format!("expected a statement, found {}", other.describe()))),
    };
    match head.as_str() {
        "for" => {
            cur.next();
            let var = cur.expect_ident()?;
            cur.expect_keyword("in")?;
            let lo = parse_expr(cur)?;
            cur.expect_keyword("to")?;
            let hi = parse_expr(cur)?;
            cur.expect(Tok::LBrace)?;
            let mut body = Vec::new();
            while cur.peek() != &Tok::RBrace {
                if cur.peek() == &Tok::Eof {
                    return Err(cur.error("unterminated loop body"));
                }
                body.push(parse_stmt(cur)?);
            }
            cur.next();
            Ok(RawStmt::For { var, lo, hi, body, pos })
        }
        "measure" => Err(FrontendError::new(ErrorKind::Unsupported, pos.0, pos.1, "measurement is not supported")),
        "CZ" => {
            cur.next();
            let a = parse_ref(cur)?;
            cur.expect(Tok::Comma)?;
            let b = parse_ref(cur)?;
            cur.expect(Tok::Semi)?;
            Ok(RawStmt::Cz { a, b, pos })
        }
        _ => {
            cur.next();
            let index = if cur.eat(&Tok::LBracket) {
                let e = parse_expr(cur)?;
                cur.expect(Tok::RBracket)?;
                Some(e)
            } else {
                None
            };
            let target = parse_ref(cur)?;
            cur.expect(Tok::Semi)?;
            Ok(RawStmt::Sq { gate: head, index, target, pos })
        }
    }
}

/// Values of the variables in scope while lowering.
#[derive(Clone, Default)]
struct Scope {
    main: Option<String>,
    consts: HashMap<String, i64>,
}

fn eval(e: &RawExpr, scope: &Scope, symbols: &[String]) -> Result<Affine, FrontendError> {
    match e {
        RawExpr::Int(v) => Ok(Affine::constant(*v)),
        RawExpr::Var(name, pos) => {
            if scope.main.as_deref() == Some(name.as_str()) {
                Ok(Affine::new(1, 0))
            } else if let Some(v) = scope.consts.get(name) {
                Ok(Affine::constant(*v))
            } else if symbols.contains(name) {
                Err(FrontendError::new(
                    ErrorKind::Invalid,
                    pos.0,
                    pos.1,
                    format!("symbolic parameter `{name}` cannot appear in an index expression"),
                ))
            } else {
                Err(FrontendError::new(ErrorKind::Undeclared, pos.0, pos.1, format!("undeclared variable `{name}`")))
            }
        }
        RawExpr::Neg(x) => {
            let a = eval(x, scope, symbols)?;
            Ok(Affine::new(-a.k, -a.b))
        }
        RawExpr::Bin(op, x, y, pos) => {
            let a = eval(x, scope, symbols)?;
            let b = eval(y, scope, symbols)?;
            let nonlinear = || FrontendError::new(ErrorKind::NonLinear, pos.0, pos.1, "index expression is not linear in the loop variable");
            match op {
                '+' => Ok(Affine::new(a.k + b.k, a.b + b.b)),
                '-' => Ok(Affine::new(a.k - b.k, a.b - b.b)),
                '*' => match (a.k, b.k) {
                    (0, _) => Ok(Affine::new(a.b * b.k, a.b * b.b)),
                    (_, 0) => Ok(Affine::new(a.k * b.b, a.b * b.b)),
                    _ => Err(nonlinear()),
                },
                _ => {
                    if a.k != 0 || b.k != 0 {
                        return Err(nonlinear());
                    }
                    if b.b == 0 {
                        return Err(FrontendError::new(ErrorKind::Invalid, pos.0, pos.1, "division by zero"));
                    }
                    let v = if *op == '/' { a.b.div_euclid(b.b) } else { a.b.rem_euclid(b.b) };
                    Ok(Affine::constant(v))
                }
            }
        }
    }
}

fn expr_pos(e: &RawExpr) -> Option<Pos> {
    match e {
        RawExpr::Int(_) => None,
        RawExpr::Var(_, p) | RawExpr::Bin(_, _, _, p) => Some(*p),
        RawExpr::Neg(x) => expr_pos(x),
    }
}

struct Lowerer<'a> {
    header: &'a Header,
    /// Every lowered instruction with its source position, for bounds checks.
    positions: Vec<Pos>,
}

impl Lowerer<'_> {
    fn qref(&self, r: &RawRef, scope: &Scope) -> Result<QubitRef, FrontendError> {
        let array = self
            .header
            .arrays
            .iter()
            .position(|a| a.name == r.array)
            .ok_or_else(|| FrontendError::new(ErrorKind::Undeclared, r.pos.0, r.pos.1, format!("undeclared qubit array `{}`", r.array)))?;
        let a = eval(&r.index, scope, &self.header.symbols)?;
        Ok(QubitRef::new(array, a.k, a.b))
    }

    fn gate(&self, name: &str, index: &Option<RawExpr>, scope: &Scope, pos: Pos) -> Result<SqGate, FrontendError> {
        if let Some(m) = builtin(name) {
            if index.is_some() {
                return Err(FrontendError::new(ErrorKind::Invalid, pos.0, pos.1, format!("builtin gate `{name}` takes no index")));
            }
            return Ok(SqGate::Known(m));
        }
        let def_id = self
            .header
            .defs
            .iter()
            .position(|d| d.name == name)
            .ok_or_else(|| FrontendError::new(ErrorKind::Undeclared, pos.0, pos.1, format!("undeclared gate `{name}`")))?;
        let def = &self.header.defs[def_id];
        let idx = match index {
            Some(e) => eval(e, scope, &self.header.symbols)?,
            None if def.len == 1 => Affine::constant(0),
            None => {
                return Err(FrontendError::new(ErrorKind::Invalid, pos.0, pos.1, format!("gate array `{name}` needs an index")));
            }
        };
        if idx.k == 0 && (idx.b < 0 || idx.b >= def.len as i64) {
            return Err(FrontendError::new(ErrorKind::Invalid, pos.0, pos.1, format!("gate index {} out of bounds for `{name}`", idx.b)));
        }
        match (&def.content, idx.k) {
            (GateContent::Known(ms), 0) => Ok(SqGate::Known(ms[idx.b as usize])),
            _ => Ok(SqGate::elem(def_id, idx, def.hint())),
        }
    }

    fn stmts(&mut self, stmts: &[RawStmt], scope: &Scope, out: &mut Vec<Instruction>) -> Result<(), FrontendError> {
        for s in stmts {
            match s {
                RawStmt::Sq { gate, index, target, pos } => {
                    let g = self.gate(gate, index, scope, *pos)?;
                    let t = self.qref(target, scope)?;
                    out.push(Instruction::sq(g, t, out.len()));
                    self.positions.push(*pos);
                }
                RawStmt::Cz { a, b, pos } => {
                    let ra = self.qref(a, scope)?;
                    let rb = self.qref(b, scope)?;
                    if ra == rb {
                        return Err(FrontendError::new(ErrorKind::Invalid, pos.0, pos.1, "CZ operands are identical"));
                    }
                    out.push(Instruction::cz(ra, rb, out.len()));
                    self.positions.push(*pos);
                }
                RawStmt::For { var, lo, hi, body, pos } => {
                    if scope.main.as_deref() == Some(var.as_str()) || scope.consts.contains_key(var) {
                        return Err(FrontendError::new(ErrorKind::Invalid, pos.0, pos.1, format!("loop variable `{var}` shadows an outer one")));
                    }
                    let (l, h) = (self.const_bound(lo, scope, *pos)?, self.const_bound(hi, scope, *pos)?);
                    for v in l..=h {
                        let mut inner = scope.clone();
                        inner.consts.insert(var.clone(), v);
                        self.stmts(body, &inner, out)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn const_bound(&self, e: &RawExpr, scope: &Scope, pos: Pos) -> Result<i64, FrontendError> {
        let a = eval(e, scope, &self.header.symbols)?;
        if a.k != 0 {
            let p = expr_pos(e).unwrap_or(pos);
            return Err(FrontendError::new(ErrorKind::Invalid, p.0, p.1, "inner loop bounds must be constant"));
        }
        Ok(a.b)
    }
}

fn bound_kind(e: &RawExpr, symbols: &[String]) -> Option<String> {
    match e {
        RawExpr::Var(name, _) if symbols.contains(name) => Some(name.clone()),
        _ => None,
    }
}

fn lower(header: Header, stmts: Vec<RawStmt>) -> Result<LoopProgram, FrontendError> {
    let main_idx = stmts
        .iter()
        .rposition(|s| matches!(s, RawStmt::For { .. }))
        .ok_or_else(|| FrontendError::new(ErrorKind::Invalid, 1, 1, "program has no loop"))?;
    let mut low = Lowerer { header: &header, positions: Vec::new() };
    let top = Scope::default();

    let mut pre_body = Vec::new();
    low.stmts(&stmts[..main_idx], &top, &mut pre_body)?;
    let pre_pos = std::mem::take(&mut low.positions);

    let RawStmt::For { var, lo, hi, body: raw_body, pos } = &stmts[main_idx] else { unreachable!() };
    let range = match (bound_kind(lo, &header.symbols), bound_kind(hi, &header.symbols)) {
        (Some(a), Some(b)) => LoopRange::Unknown { a, b },
        (None, None) => {
            let m = low.const_bound(lo, &top, *pos)?;
            let n = low.const_bound(hi, &top, *pos)?;
            if m > n {
                return Err(FrontendError::new(ErrorKind::Invalid, pos.0, pos.1, format!("empty loop range {m} to {n}")));
            }
            LoopRange::Known { m, n }
        }
        _ => {
            return Err(FrontendError::new(ErrorKind::Invalid, pos.0, pos.1, "loop bounds must be both constant or both symbolic"));
        }
    };
    let scope = Scope { main: Some(var.clone()), consts: HashMap::new() };
    let mut body = Vec::new();
    low.stmts(raw_body, &scope, &mut body)?;
    let body_pos = std::mem::take(&mut low.positions);

    let mut post_body = Vec::new();
    low.stmts(&stmts[main_idx + 1..], &top, &mut post_body)?;
    let post_pos = std::mem::take(&mut low.positions);

    let iters: Vec<i64> = match range {
        LoopRange::Known { m, n } => vec![m, n],
        LoopRange::Unknown { .. } => Vec::new(),
    };
    check_bounds(&header, &pre_body, &pre_pos, &[0])?;
    check_bounds(&header, &post_body, &post_pos, &[0])?;
    if !iters.is_empty() {
        check_bounds(&header, &body, &body_pos, &iters)?;
    }

    Ok(LoopProgram {
        qubit_arrays: header.arrays,
        gate_defs: header.defs,
        symbols: header.symbols,
        pre_body,
        loop_: LoopSpec { iter_var: var.clone(), range, body },
        post_body,
    })
}

/// Linear indices are in bounds on an interval iff they are at both endpoints.
fn check_bounds(header: &Header, instrs: &[Instruction], positions: &[Pos], iters: &[i64]) -> Result<(), FrontendError> {
    use crate::gate_algebra::Factor;
    use crate::ir::Op;
    for (ins, pos) in instrs.iter().zip(positions) {
        for &i in iters {
            for r in ins.refs() {
                let v = r.eval(i);
                let arr = &header.arrays[r.array];
                if v < 0 || v >= arr.len as i64 {
                    return Err(FrontendError::new(
                        ErrorKind::Invalid,
                        pos.0,
                        pos.1,
                        format!("index {v} out of bounds for `{}[{}]` at iteration {i}", arr.name, arr.len),
                    ));
                }
            }
            if let Op::Sq { gate: SqGate::Symbolic { factors, .. }, .. } = &ins.op {
                for f in factors {
                    if let Factor::Elem { def, index, .. } = f {
                        let v = index.eval(i);
                        let d = &header.defs[*def];
                        if v < 0 || v >= d.len as i64 {
                            return Err(FrontendError::new(
                                ErrorKind::Invalid,
                                pos.0,
                                pos.1,
                                format!("gate index {v} out of bounds for `{}[{}]` at iteration {i}", d.name, d.len),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Op;

    #[test]
    fn single_cz_loop() {
        let p = parse("qubit q[8]; for i in 0 to 6 { CZ q[i], q[i+1]; }").unwrap();
        assert_eq!(p.loop_.body.len(), 1);
        assert_eq!(p.loop_.range, LoopRange::Known { m: 0, n: 6 });
        match &p.loop_.body[0].op {
            Op::Cz { a, b, .. } => {
                assert_eq!((a.k, a.b, b.k, b.b), (1, 0, 1, 1));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn identical_cz_operands_rejected() {
        let e = parse("qubit q[8]; for i in 0 to 6 { CZ q[i], q[i]; }").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Invalid);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("qubit q[8];\nfor i in 0 to 6 {\n  CZ q[i*i], q[i+1];\n}").unwrap_err();
        assert_eq!(e.kind, ErrorKind::NonLinear);
        assert_eq!(e.line, 3);
        let e = parse("qubit q[8]; for i in 0 to 6 { H r[i]; }").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Undeclared);
        let e = parse("qubit q[8]; for i in 0 to 6 { measure q[i]; }").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Unsupported);
        let e = parse("qubit q[8]; for i in 0 to 6 { H q[i] }").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Syntax);
        let e = parse("qubit q[8]; for i in 0 to 7 { CZ q[i], q[i+1]; }").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Invalid);
    }

    #[test]
    fn inner_loops_flatten_in_order() {
        let p = parse("qubit q[40]; for i in 0 to 9 { for j in 0 to 2 { H q[3*i+j]; } CZ q[3*i], q[3*i+1]; }").unwrap();
        let bs: Vec<i64> = p.loop_.body.iter().map(|ins| ins.refs()[0].b).collect();
        assert_eq!(bs, vec![0, 1, 2, 0]);
        assert!(p.loop_.body.iter().enumerate().all(|(c, ins)| ins.src == c));
    }

    #[test]
    fn defgates_and_symbols() {
        let src = "qubit q[4]; defgate R[4] = RZ; defgate P[1] = RZ+; defgate K[1] = { [(0,1),0;0,(0,-1)] };
                   symbolic a, b; for i in a to b { R[i] q[i]; P q[i]; K[0] q[i]; }";
        let p = parse(src).unwrap();
        assert_eq!(p.loop_.range, LoopRange::Unknown { a: "a".into(), b: "b".into() });
        let classes: Vec<_> = p.loop_.body.iter().map(|i| i.class().unwrap()).collect();
        use crate::gate_algebra::GateClass::*;
        assert_eq!(classes, vec![Diagonal, AntiDiagonal, Diagonal]);
        assert!(matches!(p.loop_.body[2].op, Op::Sq { gate: SqGate::Known(_), .. }));
    }

    #[test]
    fn non_unitary_matrix_rejected() {
        let e = parse("qubit q[2]; defgate K[1] = { [1,1;0,1] }; for i in 0 to 1 { K q[i]; }").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Invalid);
    }

    #[test]
    fn pre_and_post_bodies() {
        let p = parse("qubit q[4]; for j in 0 to 3 { H q[j]; } for i in 0 to 2 { CZ q[i], q[i+1]; } X q[0];").unwrap();
        assert_eq!(p.pre_body.len(), 4);
        assert_eq!(p.post_body.len(), 1);
        assert_eq!(p.pre_body[3].refs()[0], QubitRef::new(0, 0, 3));
    }
}
