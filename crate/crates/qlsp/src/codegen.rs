//! Prologue, kernel and epilogue emission from a modulo schedule.
//!
//! Every kernel element (an instruction, or a Z owed by an inversion) carries the
//! iteration offsets it depends on: issue `k` contains it iff `k − o` is a valid source
//! iteration for every offset `o`. The kernel loop runs over the issues where every
//! element is present; the issues before and after become straight-line code.

use std::collections::HashMap;

use crate::aliasing::IterRange;
use crate::compaction::compact_bidirectional;
use crate::frontend::{CompositeDef, CompositeFactor, Expr, GateUse, OutOp, OutQubit, Stmt};
use crate::gate_algebra::{merge, Factor, Mat2, SqGate, TOL};
use crate::ir::{Instruction, LoopProgram, Op, QubitRef};
use crate::scheduler::{asap_ticks, ModuloSchedule};

#[derive(Clone, Debug, PartialEq)]
pub struct Elem {
    /// In the source iteration's variable.
    pub ins: Instruction,
    pub p: i64,
    pub q: i64,
    /// Absolute order within a slot; a Z follows its CZ.
    pub key: (i64, u8),
    pub offsets: Vec<i64>,
}

pub fn elements(s: &ModuloSchedule) -> Vec<Elem> {
    let mut out: Vec<Elem> = (0..s.len())
        .map(|c| Elem { ins: s.body[c].clone(), p: s.p(c), q: s.q(c), key: (s.abs_key(c), 0), offsets: vec![s.p(c)] })
        .collect();
    for z in &s.inserted_z {
        let p = s.p(z.cz);
        out.push(Elem {
            ins: Instruction::known(Mat2::z(), z.target, s.body[z.cz].src),
            p,
            q: s.q(z.cz),
            key: (s.abs_key(z.cz), 1),
            offsets: vec![p, p + z.lag],
        });
    }
    out.sort_by_key(|e| e.key);
    out
}

/// `(max offset, min offset)`: the kernel covers issues `[lo + hi_o, hi + lo_o]`.
pub fn window(elems: &[Elem]) -> (i64, i64) {
    let all = elems.iter().flat_map(|e| e.offsets.iter().copied());
    let (mut hi, mut lo) = (0, 0);
    for o in all {
        hi = hi.max(o);
        lo = lo.min(o);
    }
    (hi, lo)
}

/// Instances issued at `rel`, in slot order. `valid` filters source iterations; `place`
/// instantiates an instruction for a source iteration.
pub fn issue(
    elems: &[Elem],
    ii: i64,
    rel: i64,
    valid: impl Fn(i64) -> bool,
    place: impl Fn(&Instruction, i64) -> Instruction,
) -> Vec<Vec<Instruction>> {
    let mut ticks = vec![Vec::new(); ii as usize];
    for e in elems {
        if e.offsets.iter().all(|&o| valid(rel - o)) {
            ticks[e.q as usize].push(place(&e.ins, rel - e.p));
        }
    }
    ticks
}

/// Merges single-qubit gates on the same reference, first one first.
pub fn merge_same_tick(tick: Vec<Instruction>) -> Vec<Instruction> {
    let mut out: Vec<Instruction> = Vec::with_capacity(tick.len());
    for ins in tick {
        if let Op::Sq { gate, target } = &ins.op {
            if let Some(pos) = out.iter().position(|o| matches!(&o.op, Op::Sq { target: t, .. } if t == target)) {
                let Op::Sq { gate: g0, .. } = &out[pos].op else { unreachable!() };
                let m = merge(g0, gate);
                if m.is_identity() {
                    out.remove(pos);
                } else {
                    out[pos] = Instruction::sq(m, *target, out[pos].src);
                }
                continue;
            }
        }
        out.push(ins);
    }
    out
}

/// Kernel ticks with references in the kernel counter.
pub fn kernel_ticks(elems: &[Elem], ii: i64) -> Vec<Vec<Instruction>> {
    let mut ticks = vec![Vec::new(); ii as usize];
    for e in elems {
        ticks[e.q as usize].push(e.ins.shifted(e.p));
    }
    ticks.into_iter().map(merge_same_tick).collect()
}

/// Result of splitting one schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct Lowered {
    /// Straight-line fill, in execution order.
    pub pre: Vec<Instruction>,
    pub kernel: Vec<Vec<Instruction>>,
    pub post: Vec<Instruction>,
    /// Kernel counter bounds: offsets from the stage's own bounds.
    pub lo_shift: i64,
    pub hi_shift: i64,
}

fn flatten(ticks: Vec<Vec<Instruction>>) -> Vec<Instruction> {
    ticks.into_iter().flat_map(merge_same_tick).collect()
}

/// Splits a schedule for counter range `[lo, hi]`, both concrete.
///
/// Returns `None` for the kernel when no issue holds every element; everything is then
/// straight-line code in `pre`.
pub fn lower_known(s: &ModuloSchedule, lo: i64, hi: i64) -> Lowered {
    let elems = elements(s);
    let (ohi, olo) = window(&elems);
    let valid = |j: i64| lo <= j && j <= hi;
    let place = |ins: &Instruction, j: i64| ins.subst(0, j);
    let (klo, khi) = (lo + ohi, hi + olo);
    if klo > khi {
        let pre = (lo..=hi + ohi).flat_map(|k| flatten(issue(&elems, s.ii, k, valid, place))).collect();
        return Lowered { pre, kernel: Vec::new(), post: Vec::new(), lo_shift: ohi, hi_shift: olo };
    }
    let pre = (lo..klo).flat_map(|k| flatten(issue(&elems, s.ii, k, valid, place))).collect();
    let post = (khi + 1..=hi + ohi).flat_map(|k| flatten(issue(&elems, s.ii, k, valid, place))).collect();
    Lowered { pre, kernel: kernel_ticks(&elems, s.ii), post, lo_shift: ohi, hi_shift: olo }
}

/// Splits a schedule for a symbolic counter range, assuming the kernel runs at least once.
///
/// Fill instructions are expressed in a variable standing for the lower bound, drain
/// instructions in one standing for the upper bound.
pub fn lower_symbolic(s: &ModuloSchedule) -> Lowered {
    let elems = elements(s);
    let (ohi, olo) = window(&elems);
    let place = |ins: &Instruction, j: i64| ins.subst(1, j);
    let pre = (0..ohi).flat_map(|k| flatten(issue(&elems, s.ii, k, |j| j >= 0, place))).collect();
    let post = (olo + 1..=ohi).flat_map(|k| flatten(issue(&elems, s.ii, k, |j| j <= 0, place))).collect();
    Lowered { pre, kernel: kernel_ticks(&elems, s.ii), post, lo_shift: ohi, hi_shift: olo }
}

/// Kernel ticks as a plain loop body, for another scheduling round.
pub fn kernel_as_body(kernel: &[Vec<Instruction>]) -> Vec<Instruction> {
    kernel
        .iter()
        .flatten()
        .enumerate()
        .map(|(c, ins)| {
            let mut i = ins.clone();
            i.src = c;
            i
        })
        .collect()
}

/// Compacts (optionally) and ASAP-schedules a straight-line stretch.
pub fn schedule_segment(ops: &[Instruction], t: IterRange, compact: bool) -> Vec<Vec<Instruction>> {
    let ops = if compact { compact_bidirectional(ops, t) } else { ops.to_vec() };
    let ticks = asap_ticks(&ops, t);
    let depth = ticks.iter().map(|x| x + 1).max().unwrap_or(0);
    let mut out = vec![Vec::new(); depth];
    for (ins, tk) in ops.into_iter().zip(ticks) {
        out[tk].push(ins);
    }
    out
}

/// Turns instructions into output statements, collecting composite gate definitions.
pub struct Emitter<'a> {
    pub prog: &'a LoopProgram,
    pub composites: Vec<CompositeDef>,
    keys: HashMap<String, usize>,
}

const PARAM: &str = "x";

impl<'a> Emitter<'a> {
    pub fn new(prog: &'a LoopProgram) -> Self {
        Emitter { prog, composites: Vec::new(), keys: HashMap::new() }
    }

    fn qubit(&self, r: &QubitRef, var: &Expr) -> OutQubit {
        OutQubit { array: self.prog.qubit_arrays[r.array].name.clone(), index: Expr::affine(r.k, var.clone(), r.b) }
    }

    fn factor(&self, f: &Factor, var: &Expr) -> CompositeFactor {
        match f {
            Factor::Fixed(m) => match m.builtin_name() {
                Some(n) => CompositeFactor::Named(n.to_string()),
                None => CompositeFactor::Matrix(*m),
            },
            Factor::Elem { def, index, .. } => CompositeFactor::Indexed {
                name: self.prog.gate_defs[*def].name.clone(),
                index: Expr::affine(index.k, var.clone(), index.b),
            },
        }
    }

    fn composite(&mut self, factors: &[Factor], var: &Expr) -> GateUse {
        let param = factors.iter().any(|f| matches!(f, Factor::Elem { index, .. } if index.k != 0));
        let pv = Expr::var(PARAM);
        let def_factors: Vec<CompositeFactor> = factors.iter().map(|f| self.factor(f, &pv)).collect();
        let key = format!("{param}:{def_factors:?}");
        let id = match self.keys.get(&key) {
            Some(&id) => id,
            None => {
                let id = self.composites.len();
                self.composites.push(CompositeDef {
                    name: format!("composite_{id}"),
                    param: param.then(|| PARAM.to_string()),
                    factors: def_factors,
                });
                self.keys.insert(key, id);
                id
            }
        };
        GateUse::Composite { name: self.composites[id].name.clone(), arg: param.then(|| var.clone()) }
    }

    fn gate(&mut self, g: &SqGate, var: &Expr) -> GateUse {
        match g {
            SqGate::Known(m) => match m.builtin_name() {
                Some(n) => GateUse::Named(n.to_string()),
                None => self.composite(&[Factor::Fixed(*m)], var),
            },
            SqGate::Symbolic { factors, .. } => match factors.as_slice() {
                [f @ Factor::Elem { .. }] => match self.factor(f, var) {
                    CompositeFactor::Indexed { name, index } => GateUse::Indexed { name, index },
                    _ => unreachable!(),
                },
                _ => self.composite(factors, var),
            },
        }
    }

    /// Output ops for one instruction; non-standard CZ variants expand to Zs and a CZ.
    pub fn ops(&mut self, ins: &Instruction, var: &Expr) -> Vec<OutOp> {
        match &ins.op {
            Op::Sq { gate, target } => {
                if gate.is_identity() {
                    return Vec::new();
                }
                vec![OutOp::Sq { gate: self.gate(gate, var), target: self.qubit(target, var) }]
            }
            Op::Cz { a, b, variant } => {
                let (zs, _) = crate::gate_algebra::variant_to_standard(*variant);
                let mut out: Vec<OutOp> = zs
                    .into_iter()
                    .map(|side| {
                        let r = if side == crate::gate_algebra::Operand::A { a } else { b };
                        OutOp::Sq { gate: GateUse::Named("Z".into()), target: self.qubit(r, var) }
                    })
                    .collect();
                out.push(OutOp::Cz { a: self.qubit(a, var), b: self.qubit(b, var) });
                out
            }
        }
    }

    /// One statement per tick: a lone op, or a parallel block. Zs from CZ variants are
    /// diagonal and go in a block of their own just before.
    pub fn ticks(&mut self, ticks: &[Vec<Instruction>], var: &Expr) -> Vec<Stmt> {
        let mut out = Vec::new();
        for tick in ticks {
            let (mut extra, mut main) = (Vec::new(), Vec::new());
            for ins in tick {
                let mut ops = self.ops(ins, var);
                if let Some(last) = ops.pop() {
                    extra.extend(ops);
                    main.push(last);
                }
            }
            push_block(&mut out, extra);
            push_block(&mut out, main);
        }
        out
    }
}

fn push_block(out: &mut Vec<Stmt>, mut ops: Vec<OutOp>) {
    match ops.len() {
        0 => {}
        1 => out.push(Stmt::Op(ops.pop().unwrap())),
        _ => out.push(Stmt::Parallel(ops)),
    }
}

pub fn count_ops(ticks: &[Vec<Instruction>]) -> usize {
    ticks.iter().map(Vec::len).sum()
}

/// Tolerance-aware structural check used in tests.
pub fn same_ticks(a: &[Vec<Instruction>], b: &[Vec<Instruction>]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.len() == y.len() && x.iter().zip(y).all(|(u, v)| u.approx_eq(v, TOL)))
}
