//! End-to-end compilation: compaction, unrolling, rotation, modulo scheduling and
//! emission into the output language.

use log::{debug, info};
use serde::Serialize;

use crate::aliasing::IterRange;
use crate::codegen::{kernel_as_body, lower_known, lower_symbolic, schedule_segment, Emitter, Lowered};
use crate::compaction::compact_fixpoint;
use crate::frontend::{CmpOp, Compare, Expr, OutputProgram, Stmt};
use crate::ir::{Instruction, LoopProgram, LoopRange};
use crate::loop_transform::{rotate, unroll, Anchor, DeltaOp, TransformError};
use crate::qdg::{build, Qdg, QdgOptions};
use crate::scheduler::{asap_depth, asap_ticks, fix_inversions, search_ii, ModuloSchedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EmitMode {
    #[default]
    Pipelined,
    /// Original loop with an ASAP-scheduled body.
    KernelAsap,
    /// Known ranges only: the fully unrolled loop, compacted and ASAP-scheduled.
    UnrolledAsap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompileOptions {
    pub unroll: i64,
    pub compact: bool,
    pub max_ii: Option<i64>,
    pub emit: EmitMode,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { unroll: 2, compact: true, max_ii: None, emit: EmitMode::Pipelined }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CompileError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("{0} needs a known loop range")]
    NeedsKnownRange(&'static str),
}

/// Depth comparison for one compiled program; depths count the main loop only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub asap: usize,
    pub c_asap: usize,
    pub pre_depth: usize,
    pub kernel_depth: usize,
    pub post_depth: usize,
    pub iters: i64,
    pub kernel_asap_total: i64,
    pub unroll_total: usize,
    pub qsp_iters: i64,
    pub qsp_total: i64,
}

/// One scheduling round of one residue case.
#[derive(Clone, Debug)]
pub struct Round {
    pub qdg: Qdg,
    pub schedule: ModuloSchedule,
    /// The ASAP schedule was no worse, so it replaced the modulo schedule.
    pub fallback: bool,
}

#[derive(Clone, Debug)]
pub struct CaseReport {
    pub q: i64,
    pub rotations: i64,
    pub rounds: Vec<Round>,
    pub pre: Vec<Vec<Instruction>>,
    pub kernel: Vec<Vec<Instruction>>,
    pub post: Vec<Vec<Instruction>>,
    /// Kernel counter bounds, concrete for known ranges, else offsets from the case bounds.
    pub kernel_lo: i64,
    pub kernel_hi: i64,
}

impl CaseReport {
    pub fn ii(&self) -> i64 {
        self.rounds.last().map_or(0, |r| r.schedule.ii)
    }
}

#[derive(Clone, Debug)]
pub struct Compiled {
    pub output: OutputProgram,
    pub stats: Option<Stats>,
    pub cases: Vec<CaseReport>,
}

/// Modulo schedule of `body`, or the plain ASAP schedule when that is at least as short.
fn schedule_round(body: &[Instruction], t: IterRange, exception: bool, max_ii: Option<i64>) -> Round {
    let qdg = build(body, t, QdgOptions { antidiagonal_exception: exception });
    let mut s = search_ii(&qdg, t, max_ii);
    if exception {
        fix_inversions(&mut s, t);
    }
    let ticks = asap_ticks(body, t);
    let depth = ticks.iter().map(|x| x + 1).max().unwrap_or(0) as i64;
    if !body.is_empty() && s.ii >= depth {
        debug!("modulo schedule at II={} is no better than ASAP depth {depth}", s.ii);
        let s = ModuloSchedule {
            ii: depth,
            body: body.to_vec(),
            times: ticks.into_iter().map(|x| x as i64).collect(),
            inserted_z: Vec::new(),
            retries: s.retries,
        };
        return Round { qdg, schedule: s, fallback: true };
    }
    Round { qdg, schedule: s, fallback: false }
}

/// Two rounds when the first owes Zs, so that they get slots of their own.
fn schedule_stage(body: &[Instruction], t: Option<(i64, i64)>, opts: &CompileOptions) -> (Vec<Round>, Lowered) {
    let range = |t: Option<(i64, i64)>| t.map_or(IterRange::Unbounded, |(lo, hi)| IterRange::known(lo, hi));
    let lower = |s: &ModuloSchedule, t: Option<(i64, i64)>| match t {
        Some((lo, hi)) => lower_known(s, lo, hi),
        None => lower_symbolic(s),
    };
    let r1 = schedule_round(body, range(t), true, opts.max_ii);
    let l1 = lower(&r1.schedule, t);
    info!("round 1: II={} with {} inserted Z", r1.schedule.ii, r1.schedule.inserted_z.len());
    let kernel_range = t.map(|(lo, hi)| (lo + l1.lo_shift, hi + l1.hi_shift));
    let empty = matches!(kernel_range, Some((lo, hi)) if lo > hi);
    if r1.schedule.inserted_z.is_empty() || empty {
        return (vec![r1], l1);
    }
    let body2 = kernel_as_body(&l1.kernel);
    let r2 = schedule_round(&body2, range(kernel_range), false, opts.max_ii);
    let mut l2 = lower(&r2.schedule, kernel_range);
    if t.is_none() {
        // round-two fill and drain are relative to the round-one kernel bounds
        l2.pre = l2.pre.iter().map(|i| i.subst(1, l1.lo_shift)).collect();
        l2.post = l2.post.iter().map(|i| i.subst(1, l1.hi_shift)).collect();
    }
    info!("round 2: II={}", r2.schedule.ii);
    let mut pre = l1.pre;
    pre.extend(l2.pre);
    let mut post = l2.post;
    post.extend(l1.post);
    let lowered = Lowered {
        pre,
        kernel: l2.kernel,
        post,
        lo_shift: l1.lo_shift + l2.lo_shift,
        hi_shift: l1.hi_shift + l2.hi_shift,
    };
    (vec![r1, r2], lowered)
}

fn place_deltas(deltas: &[DeltaOp], lo: i64, hi: i64, concrete: bool) -> Vec<Instruction> {
    deltas
        .iter()
        .map(|d| {
            let j = match d.anchor {
                Anchor::Lo(o) => lo + o,
                Anchor::Hi(o) => hi + o,
            };
            if concrete {
                d.ins.subst(0, j)
            } else {
                d.ins.subst(1, j)
            }
        })
        .collect()
}

fn maybe_compact(body: &[Instruction], t: IterRange, on: bool) -> Vec<Instruction> {
    if on {
        compact_fixpoint(body, t)
    } else {
        body.to_vec()
    }
}

fn asap_stmts(em: &mut Emitter, ops: &[Instruction], t: IterRange, compact: bool, var: &Expr) -> (Vec<Stmt>, usize) {
    let ticks = schedule_segment(ops, t, compact);
    (em.ticks(&ticks, var), ticks.len())
}

fn header(p: &LoopProgram) -> OutputProgram {
    OutputProgram { qubits: p.qubit_arrays.clone(), gates: p.gate_defs.clone(), symbols: p.symbols.clone(), ..Default::default() }
}

/// The original loop with its (compacted) body ASAP-scheduled.
fn plain_loop(em: &mut Emitter, body: &[Instruction], var: &str, lo: Expr, hi: Expr, compact: bool) -> Stmt {
    let (b, _) = asap_stmts(em, body, IterRange::Unbounded, compact, &Expr::var(var));
    Stmt::For { var: var.to_string(), lo, hi, body: b }
}

fn straight(em: &mut Emitter, ops: &[Instruction], compact: bool) -> (Vec<Stmt>, usize) {
    asap_stmts(em, ops, IterRange::Unbounded, compact, &Expr::Int(0))
}

/// Every iteration of a known loop, unrolled and compacted.
pub fn unroll_concrete_loop(p: &LoopProgram) -> Option<Vec<Instruction>> {
    let LoopRange::Known { m, n } = p.loop_.range else { return None };
    Some((m..=n).flat_map(|i| p.loop_.body.iter().map(move |ins| ins.subst(0, i))).collect())
}

pub fn compile(p: &LoopProgram, opts: &CompileOptions) -> Result<Compiled, CompileError> {
    if opts.unroll < 1 {
        return Err(TransformError::BadFactor(opts.unroll).into());
    }
    match opts.emit {
        EmitMode::Pipelined => {}
        EmitMode::KernelAsap => return Ok(kernel_asap(p, opts)),
        EmitMode::UnrolledAsap => return unrolled_asap(p, opts),
    }
    match &p.loop_.range {
        LoopRange::Known { m, n } => compile_known(p, *m, *n, opts),
        LoopRange::Unknown { a, b } => compile_unknown(p, a, b, opts),
    }
}

fn wrap(p: &LoopProgram, em: Emitter, mut out: OutputProgram, body: Vec<Stmt>, opts: &CompileOptions) -> OutputProgram {
    let (pre, _) = straight_for(p, &p.pre_body, opts);
    let (post, _) = straight_for(p, &p.post_body, opts);
    let mut statements = Vec::new();
    let mut em2 = em;
    statements.extend(em2.ticks(&pre, &Expr::Int(0)));
    statements.extend(body);
    statements.extend(em2.ticks(&post, &Expr::Int(0)));
    out.composites = em2.composites;
    out.statements = statements;
    out
}

fn straight_for(_p: &LoopProgram, ops: &[Instruction], opts: &CompileOptions) -> (Vec<Vec<Instruction>>, usize) {
    let t = schedule_segment(ops, IterRange::Unbounded, opts.compact);
    let n = t.len();
    (t, n)
}

fn kernel_asap(p: &LoopProgram, opts: &CompileOptions) -> Compiled {
    let mut em = Emitter::new(p);
    let var = &p.loop_.iter_var;
    let (lo, hi) = range_exprs(&p.loop_.range);
    let body = maybe_compact(&p.loop_.body, IterRange::Unbounded, opts.compact);
    let lp = plain_loop(&mut em, &body, var, lo, hi, false);
    let out = wrap(p, em, header(p), vec![lp], opts);
    Compiled { output: out, stats: None, cases: Vec::new() }
}

fn unrolled_asap(p: &LoopProgram, opts: &CompileOptions) -> Result<Compiled, CompileError> {
    let ops = unroll_concrete_loop(p).ok_or(CompileError::NeedsKnownRange("unrolled ASAP emission"))?;
    let mut em = Emitter::new(p);
    let (stmts, _) = straight(&mut em, &ops, opts.compact);
    let out = wrap(p, em, header(p), stmts, opts);
    Ok(Compiled { output: out, stats: None, cases: Vec::new() })
}

fn range_exprs(r: &LoopRange) -> (Expr, Expr) {
    match r {
        LoopRange::Known { m, n } => (Expr::Int(*m), Expr::Int(*n)),
        LoopRange::Unknown { a, b } => (Expr::var(a), Expr::var(b)),
    }
}

fn compile_known(p: &LoopProgram, m: i64, n: i64, opts: &CompileOptions) -> Result<Compiled, CompileError> {
    let c = opts.unroll;
    let iters = (n - m + 1).max(0);
    let body = maybe_compact(&p.loop_.body, IterRange::Unbounded, opts.compact);
    let unrolled = unroll(&body, &p.loop_.range, c)?;
    let case = &unrolled.cases[0];
    let mut em = Emitter::new(p);
    let (jlo, jhi) = case.j_range.expect("known range");
    let full = jhi - jlo + 1;
    let ubody = maybe_compact(&case.body, IterRange::Unbounded, opts.compact);

    let mut pre_ops = Vec::new();
    let mut post_ops = Vec::new();
    let mut kernel = Vec::new();
    let (mut klo, mut khi) = (0, -1);
    let mut rounds = Vec::new();
    let mut rotations = 0;
    if full >= 1 {
        let t = IterRange::known(jlo, jhi);
        let rot = if opts.compact { rotate(&ubody, t) } else { no_rotation(&ubody) };
        rotations = rot.rotations;
        pre_ops.extend(place_deltas(&rot.prologue_delta, jlo, jhi, true));
        let shi = jhi - rot.rotations;
        let (rs, low) = schedule_stage(&rot.new_body, Some((jlo, shi)), opts);
        rounds = rs;
        pre_ops.extend(low.pre);
        post_ops.extend(low.post);
        post_ops.extend(place_deltas(&rot.epilogue_delta, jlo, jhi, true));
        (klo, khi) = (jlo + low.lo_shift, shi + low.hi_shift);
        if klo <= khi {
            kernel = low.kernel;
        }
    }
    post_ops.extend(case.remainder.iter().cloned());

    let pre = schedule_segment(&pre_ops, IterRange::Unbounded, opts.compact);
    let post = schedule_segment(&post_ops, IterRange::Unbounded, opts.compact);
    let mut body_stmts = em.ticks(&pre, &Expr::Int(0));
    let qsp_iters = if kernel.is_empty() { 0 } else { khi - klo + 1 };
    if qsp_iters > 0 {
        let v = &p.loop_.iter_var;
        let kb = em.ticks(&kernel, &Expr::var(v));
        body_stmts.push(Stmt::For { var: v.clone(), lo: Expr::Int(klo), hi: Expr::Int(khi), body: kb });
    }
    body_stmts.extend(em.ticks(&post, &Expr::Int(0)));
    let output = wrap(p, em, header(p), body_stmts, opts);

    let t_all = IterRange::Unbounded;
    let concrete = unroll_concrete_loop(p).unwrap_or_default();
    let unroll_total = schedule_segment(&concrete, t_all, opts.compact).len();
    let asap = asap_depth(&body, t_all);
    let stats = Stats {
        asap,
        c_asap: asap_depth(&ubody, t_all),
        pre_depth: pre.len(),
        kernel_depth: kernel.len(),
        post_depth: post.len(),
        iters,
        kernel_asap_total: asap as i64 * iters,
        unroll_total,
        qsp_iters,
        qsp_total: pre.len() as i64 + kernel.len() as i64 * qsp_iters + post.len() as i64,
    };
    let report = CaseReport { q: 0, rotations, rounds, pre, kernel, post, kernel_lo: klo, kernel_hi: khi };
    Ok(Compiled { output, stats: Some(stats), cases: vec![report] })
}

fn no_rotation(body: &[Instruction]) -> crate::loop_transform::RotationResult {
    crate::loop_transform::RotationResult {
        new_body: body.to_vec(),
        prologue_delta: Vec::new(),
        epilogue_delta: Vec::new(),
        marks: vec![false; body.len()],
        rotations: 0,
    }
}

fn compile_unknown(p: &LoopProgram, a: &str, b: &str, opts: &CompileOptions) -> Result<Compiled, CompileError> {
    let c = opts.unroll;
    let t = IterRange::Unbounded;
    let body = maybe_compact(&p.loop_.body, t, opts.compact);
    let unrolled = unroll(&body, &p.loop_.range, c)?;
    let mut em = Emitter::new(p);
    let (m, n) = (Expr::var(a), Expr::var(b));
    let v = p.loop_.iter_var.clone();
    let trips = Expr::add(Expr::sub(n.clone(), m.clone()), Expr::Int(1));
    let (jlo, jhi) = if c == 1 {
        (m.clone(), n.clone())
    } else {
        let lo = Expr::div(m.clone(), Expr::Int(c));
        let hi = Expr::sub(Expr::add(lo.clone(), Expr::div(trips.clone(), Expr::Int(c))), Expr::Int(1));
        (lo, hi)
    };
    let mut arms = Vec::new();
    let mut cases = Vec::new();
    for case in &unrolled.cases {
        let ubody = maybe_compact(&case.body, t, opts.compact);
        let rot = if opts.compact { rotate(&ubody, t) } else { no_rotation(&ubody) };
        let mut pre_ops = place_deltas(&rot.prologue_delta, 0, 0, false);
        let (rounds, low) = schedule_stage(&rot.new_body, None, opts);
        pre_ops.extend(low.pre);
        let mut post_ops = low.post.clone();
        // drain instances sit relative to the rotated bound `hi − r`
        post_ops = post_ops.into_iter().map(|i| i.subst(1, -rot.rotations)).collect();
        post_ops.extend(place_deltas(&rot.epilogue_delta, 0, 0, false));
        let pre = schedule_segment(&pre_ops, t, opts.compact);
        let post = schedule_segment(&post_ops, t, opts.compact);
        let klo = low.lo_shift;
        let khi = -rot.rotations + low.hi_shift;

        let mut arm = em.ticks(&pre, &jlo);
        let kb = em.ticks(&low.kernel, &Expr::var(&v));
        arm.push(Stmt::For {
            var: v.clone(),
            lo: Expr::affine(1, jlo.clone(), klo),
            hi: Expr::affine(1, jhi.clone(), khi),
            body: kb,
        });
        arm.extend(em.ticks(&post, &jhi));
        if c > 1 {
            let start = Expr::add(m.clone(), Expr::mul(Expr::Int(c), Expr::div(trips.clone(), Expr::Int(c))));
            arm.push(plain_loop(&mut em, &body, &v, start, n.clone(), false));
        }
        let min_trips = c * (klo - khi + 1);
        let mut cond = Vec::new();
        if c > 1 {
            cond.push(Compare::new(Expr::rem(m.clone(), Expr::Int(c)), CmpOp::Eq, Expr::Int(case.q)));
        }
        cond.push(Compare::new(trips.clone(), CmpOp::Ge, Expr::Int(min_trips.max(1))));
        arms.push((cond, arm));
        cases.push(CaseReport { q: case.q, rotations: rot.rotations, rounds, pre, kernel: low.kernel, post, kernel_lo: klo, kernel_hi: khi });
    }
    let otherwise = vec![plain_loop(&mut em, &body, &v, m, n, false)];
    let out = wrap(p, em, header(p), vec![Stmt::Guard { arms, otherwise }], opts);
    Ok(Compiled { output: out, stats: None, cases })
}
