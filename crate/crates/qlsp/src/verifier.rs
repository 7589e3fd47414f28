//! Desk-scale semantic oracle.
//!
//! Programs are unrolled into flat gate traces over concrete qubits, simulated densely
//! and compared up to a global phase. Symbolic gate arrays are bound to random
//! unitaries that honour their hints.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::frontend::{CompositeFactor, Expr, GateUse, OutOp, OutQubit, OutputProgram, Stmt};
use crate::gate_algebra::{builtin, Factor, Hint, Mat2, SqGate};
use crate::ir::{GateContent, Instruction, LoopProgram, LoopRange, Op, QubitRef};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("loop range is not known")]
    UnknownRange,
    #[error("unbound gate `{0}`")]
    Unbound(String),
    #[error("index {index} out of bounds for `{array}`")]
    OutOfBounds { array: String, index: i64 },
    #[error("index expression still depends on the loop counter")]
    NotConcrete,
    #[error("{0} qubits exceed the simulation cap of {1}")]
    TooManyQubits(usize, usize),
    #[error("{0}")]
    Eval(String),
}

/// Concrete matrices for every element of every gate array, in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct Bindings(pub Vec<Vec<Mat2>>);

/// Haar-distributed unitary from Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng) -> Mat2 {
    let mut g = || C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let (a, c, b, d) = (g(), g(), g(), g());
    let n1 = (a.norm_sqr() + c.norm_sqr()).sqrt();
    let (a, c) = (a / n1, c / n1);
    let proj = a.conj() * b + c.conj() * d;
    let (b, d) = (b - proj * a, d - proj * c);
    let n2 = (b.norm_sqr() + d.norm_sqr()).sqrt();
    Mat2([[a, b / n2], [c, d / n2]])
}

pub fn random_for_hint(hint: Hint, rng: &mut impl Rng) -> Mat2 {
    match hint {
        Hint::Diagonal => Mat2::rz(rng.random_range(0.0..TAU)),
        Hint::AntiDiagonal => Mat2::rz_plus(rng.random_range(0.0..TAU)),
        Hint::Unknown => random_unitary(rng),
    }
}

impl Bindings {
    /// Known arrays keep their matrices; symbolic ones are drawn from `rng`.
    pub fn random(p: &LoopProgram, rng: &mut impl Rng) -> Bindings {
        Bindings(
            p.gate_defs
                .iter()
                .map(|d| match &d.content {
                    GateContent::Known(ms) => ms.clone(),
                    GateContent::Symbolic(h) => (0..d.len).map(|_| random_for_hint(*h, rng)).collect(),
                })
                .collect(),
        )
    }

    fn get(&self, p_defs: &[String], def: usize, index: i64) -> Result<Mat2, VerifyError> {
        let row = self.0.get(def).ok_or_else(|| VerifyError::Unbound(p_defs.get(def).cloned().unwrap_or_default()))?;
        usize::try_from(index)
            .ok()
            .and_then(|i| row.get(i))
            .copied()
            .ok_or_else(|| VerifyError::OutOfBounds { array: p_defs[def].clone(), index })
    }
}

/// Physical qubit: array id and element.
pub type Addr = (usize, i64);

#[derive(Clone, Debug, PartialEq)]
pub enum TraceGate {
    Sq(Addr, Mat2),
    /// Diagonal two-qubit phase in the basis `|00⟩..|11⟩`, first operand high.
    Cz(Addr, Addr, [f64; 4]),
}

pub type Trace = Vec<TraceGate>;

struct Ctx<'a> {
    arrays: Vec<(String, usize)>,
    defs: Vec<String>,
    b: &'a Bindings,
}

impl Ctx<'_> {
    fn addr(&self, array: usize, index: i64) -> Result<Addr, VerifyError> {
        let (name, len) = &self.arrays[array];
        if index < 0 || index as usize >= *len {
            return Err(VerifyError::OutOfBounds { array: name.clone(), index });
        }
        Ok((array, index))
    }

    fn qref(&self, r: &QubitRef) -> Result<Addr, VerifyError> {
        if r.k != 0 {
            return Err(VerifyError::NotConcrete);
        }
        self.addr(r.array, r.b)
    }

    fn sq(&self, g: &SqGate) -> Result<Mat2, VerifyError> {
        match g {
            SqGate::Known(m) => Ok(*m),
            SqGate::Symbolic { factors, .. } => factors.iter().try_fold(Mat2::identity(), |acc, f| {
                let m = match f {
                    Factor::Fixed(m) => *m,
                    Factor::Elem { def, index, .. } => {
                        if index.k != 0 {
                            return Err(VerifyError::NotConcrete);
                        }
                        self.b.get(&self.defs, *def, index.b)?
                    }
                };
                Ok(m * acc)
            }),
        }
    }

    fn ins(&self, ins: &Instruction, out: &mut Trace) -> Result<(), VerifyError> {
        match &ins.op {
            Op::Sq { gate, target } => out.push(TraceGate::Sq(self.qref(target)?, self.sq(gate)?)),
            Op::Cz { a, b, variant } => out.push(TraceGate::Cz(self.qref(a)?, self.qref(b)?, variant.diagonal())),
        }
        Ok(())
    }
}

/// Flat trace of an input program with its range made concrete.
pub fn unroll_concrete(p: &LoopProgram, range: Option<(i64, i64)>, b: &Bindings) -> Result<Trace, VerifyError> {
    let (m, n) = match (range, &p.loop_.range) {
        (Some(r), _) => r,
        (None, LoopRange::Known { m, n }) => (*m, *n),
        (None, LoopRange::Unknown { .. }) => return Err(VerifyError::UnknownRange),
    };
    let ctx = Ctx {
        arrays: p.qubit_arrays.iter().map(|a| (a.name.clone(), a.len)).collect(),
        defs: p.gate_defs.iter().map(|d| d.name.clone()).collect(),
        b,
    };
    let mut out = Vec::new();
    for ins in &p.pre_body {
        ctx.ins(ins, &mut out)?;
    }
    for i in m..=n {
        for ins in &p.loop_.body {
            ctx.ins(&ins.subst(0, i), &mut out)?;
        }
    }
    for ins in &p.post_body {
        ctx.ins(ins, &mut out)?;
    }
    Ok(out)
}

struct OutCtx<'a> {
    base: Ctx<'a>,
    prog: &'a OutputProgram,
}

impl OutCtx<'_> {
    fn eval(&self, e: &Expr, env: &HashMap<String, i64>) -> Result<i64, VerifyError> {
        e.eval(env).map_err(VerifyError::Eval)
    }

    fn qubit(&self, q: &OutQubit, env: &HashMap<String, i64>) -> Result<Addr, VerifyError> {
        let a = self.base.arrays.iter().position(|(n, _)| *n == q.array).ok_or_else(|| VerifyError::Unbound(q.array.clone()))?;
        self.base.addr(a, self.eval(&q.index, env)?)
    }

    fn indexed(&self, name: &str, index: &Expr, env: &HashMap<String, i64>) -> Result<Mat2, VerifyError> {
        let def = self.base.defs.iter().position(|d| d == name).ok_or_else(|| VerifyError::Unbound(name.to_string()))?;
        self.base.b.get(&self.base.defs, def, self.eval(index, env)?)
    }

    fn gate(&self, g: &GateUse, env: &HashMap<String, i64>) -> Result<Mat2, VerifyError> {
        match g {
            GateUse::Named(n) => builtin(n).ok_or_else(|| VerifyError::Unbound(n.clone())),
            GateUse::Indexed { name, index } => self.indexed(name, index, env),
            GateUse::Composite { name, arg } => {
                let def = self.prog.composites.iter().find(|c| c.name == *name).ok_or_else(|| VerifyError::Unbound(name.clone()))?;
                let mut inner = HashMap::new();
                if let (Some(param), Some(arg)) = (&def.param, arg) {
                    inner.insert(param.clone(), self.eval(arg, env)?);
                }
                def.factors.iter().try_fold(Mat2::identity(), |acc, f| {
                    let m = match f {
                        CompositeFactor::Matrix(m) => *m,
                        CompositeFactor::Named(n) => builtin(n).ok_or_else(|| VerifyError::Unbound(n.clone()))?,
                        CompositeFactor::Indexed { name, index } => self.indexed(name, index, &inner)?,
                    };
                    Ok(m * acc)
                })
            }
        }
    }

    fn op(&self, op: &OutOp, env: &HashMap<String, i64>, out: &mut Trace) -> Result<(), VerifyError> {
        match op {
            OutOp::Sq { gate, target } => out.push(TraceGate::Sq(self.qubit(target, env)?, self.gate(gate, env)?)),
            OutOp::Cz { a, b } => out.push(TraceGate::Cz(self.qubit(a, env)?, self.qubit(b, env)?, [1.0, 1.0, 1.0, -1.0])),
        }
        Ok(())
    }

    fn block(&self, stmts: &[Stmt], env: &mut HashMap<String, i64>, out: &mut Trace) -> Result<(), VerifyError> {
        for s in stmts {
            match s {
                Stmt::Op(op) => self.op(op, env, out)?,
                Stmt::Parallel(ops) => {
                    for op in ops {
                        self.op(op, env, out)?;
                    }
                }
                Stmt::For { var, lo, hi, body } => {
                    let (lo, hi) = (self.eval(lo, env)?, self.eval(hi, env)?);
                    let saved = env.get(var).copied();
                    for i in lo..=hi {
                        env.insert(var.clone(), i);
                        self.block(body, env, out)?;
                    }
                    match saved {
                        Some(v) => env.insert(var.clone(), v),
                        None => env.remove(var),
                    };
                }
                Stmt::Guard { arms, otherwise } => {
                    let mut chosen = otherwise;
                    for (cond, body) in arms {
                        let mut all = true;
                        for c in cond {
                            all &= c.eval(env).map_err(VerifyError::Eval)?;
                        }
                        if all {
                            chosen = body;
                            break;
                        }
                    }
                    self.block(chosen, env, out)?;
                }
            }
        }
        Ok(())
    }
}

/// Flat trace of an output program; `env` binds its symbolic parameters.
pub fn run_output(p: &OutputProgram, env: &HashMap<String, i64>, b: &Bindings) -> Result<Trace, VerifyError> {
    let ctx = OutCtx {
        base: Ctx {
            arrays: p.qubits.iter().map(|a| (a.name.clone(), a.len)).collect(),
            defs: p.gates.iter().map(|d| d.name.clone()).collect(),
            b,
        },
        prog: p,
    };
    let mut out = Vec::new();
    let mut env = env.clone();
    ctx.block(&p.statements, &mut env, &mut out)?;
    Ok(out)
}

/// Circuit over qubits `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimCircuit {
    pub n: usize,
    pub gates: Vec<SimGate>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimGate {
    Sq(usize, Mat2),
    Diag2(usize, usize, [f64; 4]),
}

/// Maps the qubits touched by any trace onto `0..n`, shared by all traces.
pub fn to_circuits(traces: &[&Trace], cap: usize) -> Result<Vec<SimCircuit>, VerifyError> {
    let mut ids: BTreeMap<Addr, usize> = BTreeMap::new();
    for t in traces {
        for g in t.iter() {
            match g {
                TraceGate::Sq(a, _) => ids.entry(*a).or_insert(0),
                TraceGate::Cz(a, b, _) => {
                    ids.entry(*a).or_insert(0);
                    ids.entry(*b).or_insert(0)
                }
            };
        }
    }
    for (i, v) in ids.values_mut().enumerate() {
        *v = i;
    }
    let n = ids.len();
    if n > cap {
        return Err(VerifyError::TooManyQubits(n, cap));
    }
    Ok(traces
        .iter()
        .map(|t| SimCircuit {
            n,
            gates: t
                .iter()
                .map(|g| match g {
                    TraceGate::Sq(a, m) => SimGate::Sq(ids[a], *m),
                    TraceGate::Cz(a, b, d) => SimGate::Diag2(ids[a], ids[b], *d),
                })
                .collect(),
        })
        .collect())
}

impl SimCircuit {
    /// Applies the circuit in place; qubit `q` is bit `q` of the basis index.
    pub fn apply(&self, psi: &mut [C64]) {
        for g in &self.gates {
            match g {
                SimGate::Sq(q, m) => {
                    let bit = 1usize << q;
                    let [[a, b], [c, d]] = m.0;
                    for i in 0..psi.len() {
                        if i & bit == 0 {
                            let (x, y) = (psi[i], psi[i | bit]);
                            psi[i] = a * x + b * y;
                            psi[i | bit] = c * x + d * y;
                        }
                    }
                }
                SimGate::Diag2(qa, qb, d) => {
                    for (i, amp) in psi.iter_mut().enumerate() {
                        let k = ((i >> qa) & 1) << 1 | ((i >> qb) & 1);
                        if d[k] != 1.0 {
                            *amp *= d[k];
                        }
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Full unitary, column by column.
    Unitary,
    /// Random input states.
    StateVector { states: usize },
}

/// Max-norm distance after aligning the global phase on the largest entry of `a`.
pub fn phase_aligned_distance(a: &[C64], b: &[C64]) -> f64 {
    let Some((idx, _)) = a.iter().enumerate().max_by(|x, y| x.1.norm_sqr().total_cmp(&y.1.norm_sqr())) else { return 0.0 };
    let phase = if b[idx].norm() > 1e-12 && a[idx].norm() > 1e-12 { (a[idx] / b[idx]) / (a[idx] / b[idx]).norm() } else { C64::new(1.0, 0.0) };
    a.iter().zip(b).map(|(x, y)| (x - y * phase).norm()).fold(0.0, f64::max)
}

fn random_state(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..1usize << n).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Distance between two circuits' actions; one global phase for all inputs.
pub fn distance(c1: &SimCircuit, c2: &SimCircuit, mode: Mode, seed: u64) -> f64 {
    assert_eq!(c1.n, c2.n, "circuits over different qubit counts");
    let n = c1.n;
    let inputs: Vec<Vec<C64>> = match mode {
        Mode::Unitary => (0..1usize << n)
            .map(|col| {
                let mut v = vec![C64::new(0.0, 0.0); 1 << n];
                v[col] = C64::new(1.0, 0.0);
                v
            })
            .collect(),
        Mode::StateVector { states } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..states).map(|_| random_state(n, &mut rng)).collect()
        }
    };
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for v in inputs {
        let (mut x, mut y) = (v.clone(), v);
        c1.apply(&mut x);
        c2.apply(&mut y);
        a.extend(x);
        b.extend(y);
    }
    phase_aligned_distance(&a, &b)
}

pub fn equivalent(c1: &SimCircuit, c2: &SimCircuit, mode: Mode, tol: f64, seed: u64) -> bool {
    distance(c1, c2, mode, seed) <= tol
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub bindings: usize,
    pub states: usize,
    pub max_qubits: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { bindings: 8, states: 8, max_qubits: 14, seed: 0, tol: 1e-7 }
    }
}

/// Worst distance between `original` over `[m, n]` and `output` run with `env`.
pub fn check_output(
    original: &LoopProgram,
    range: (i64, i64),
    output: &OutputProgram,
    env: &HashMap<String, i64>,
    opts: &VerifyOptions,
) -> Result<f64, VerifyError> {
    let one = |k: usize| -> Result<f64, VerifyError> {
        let seed = opts.seed.wrapping_add(k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Bindings::random(original, &mut rng);
        let t1 = unroll_concrete(original, Some(range), &b)?;
        let t2 = run_output(output, env, &b)?;
        let cs = to_circuits(&[&t1, &t2], opts.max_qubits)?;
        Ok(distance(&cs[0], &cs[1], Mode::StateVector { states: opts.states }, seed ^ 0x9e37_79b9))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<f64, VerifyError>> = (0..opts.bindings).into_par_iter().map(one).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<f64, VerifyError>> = (0..opts.bindings).map(one).collect();
    results.into_iter().try_fold(0.0, |acc, r| r.map(|d| f64::max(acc, d)))
}

/// Symbol values that make an unknown loop range `[m, n]`; empty for known ranges.
pub fn range_env(p: &LoopProgram, m: i64, n: i64) -> HashMap<String, i64> {
    let mut env = HashMap::new();
    if let LoopRange::Unknown { a, b } = &p.loop_.range {
        env.insert(a.clone(), m);
        env.insert(b.clone(), n);
    }
    env
}
