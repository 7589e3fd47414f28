//! Loop program representation shared by every pass.

use std::fmt;

use crate::gate_algebra::{CzVariant, GateClass, Hint, Mat2, SqGate};

pub type ArrayId = usize;

/// Integer expression `k·i + b` in the loop variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Affine {
    pub k: i64,
    pub b: i64,
}

impl Affine {
    pub const fn new(k: i64, b: i64) -> Self {
        Affine { k, b }
    }

    pub const fn constant(b: i64) -> Self {
        Affine { k: 0, b }
    }

    pub fn eval(&self, i: i64) -> i64 {
        self.k * i + self.b
    }

    /// `k·(α·i + β) + b`.
    pub fn subst(&self, alpha: i64, beta: i64) -> Affine {
        Affine { k: self.k * alpha, b: self.k * beta + self.b }
    }
}

/// Reference `array[k·i + b]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitRef {
    pub array: ArrayId,
    pub k: i64,
    pub b: i64,
}

impl QubitRef {
    pub const fn new(array: ArrayId, k: i64, b: i64) -> Self {
        QubitRef { array, k, b }
    }

    pub fn eval(&self, i: i64) -> i64 {
        self.k * i + self.b
    }

    pub fn subst(&self, alpha: i64, beta: i64) -> QubitRef {
        QubitRef { array: self.array, k: self.k * alpha, b: self.k * beta + self.b }
    }

    /// The same reference seen from an iteration `p` steps later: `k·(i−p)+b`.
    pub fn shifted(&self, p: i64) -> QubitRef {
        self.subst(1, -p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Sq { gate: SqGate, target: QubitRef },
    Cz { a: QubitRef, b: QubitRef, variant: CzVariant },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instruction {
    pub op: Op,
    /// Position in the loop body this instruction was derived from.
    pub src: usize,
}

impl Instruction {
    pub fn sq(gate: SqGate, target: QubitRef, src: usize) -> Self {
        Instruction { op: Op::Sq { gate, target }, src }
    }

    pub fn cz(a: QubitRef, b: QubitRef, src: usize) -> Self {
        Instruction { op: Op::Cz { a, b, variant: CzVariant::STANDARD }, src }
    }

    pub fn known(m: Mat2, target: QubitRef, src: usize) -> Self {
        Instruction::sq(SqGate::Known(m), target, src)
    }

    pub fn is_cz(&self) -> bool {
        matches!(self.op, Op::Cz { .. })
    }

    pub fn refs(&self) -> Vec<QubitRef> {
        match &self.op {
            Op::Sq { target, .. } => vec![*target],
            Op::Cz { a, b, .. } => vec![*a, *b],
        }
    }

    /// `None` for CZ.
    pub fn class(&self) -> Option<GateClass> {
        match &self.op {
            Op::Sq { gate, .. } => Some(gate.classify()),
            Op::Cz { .. } => None,
        }
    }

    pub fn subst(&self, alpha: i64, beta: i64) -> Instruction {
        let op = match &self.op {
            Op::Sq { gate, target } => Op::Sq { gate: gate.subst(alpha, beta), target: target.subst(alpha, beta) },
            Op::Cz { a, b, variant } => Op::Cz { a: a.subst(alpha, beta), b: b.subst(alpha, beta), variant: *variant },
        };
        Instruction { op, src: self.src }
    }

    pub fn shifted(&self, p: i64) -> Instruction {
        self.subst(1, -p)
    }

    /// Structural equality with gate matrices compared to a tolerance.
    pub fn approx_eq(&self, other: &Instruction, tol: f64) -> bool {
        match (&self.op, &other.op) {
            (Op::Sq { gate: g1, target: t1 }, Op::Sq { gate: g2, target: t2 }) => t1 == t2 && g1.approx_eq(g2, tol),
            (Op::Cz { a: a1, b: b1, variant: v1 }, Op::Cz { a: a2, b: b2, variant: v2 }) => {
                a1 == a2 && b1 == b2 && v1 == v2
            }
            _ => false,
        }
    }

    /// CZ with the same operand pair in either order.
    pub fn same_cz(&self, other: &Instruction) -> bool {
        match (&self.op, &other.op) {
            (Op::Cz { a: a1, b: b1, variant: v1 }, Op::Cz { a: a2, b: b2, variant: v2 }) => {
                v1.is_standard() && v2.is_standard() && ((a1 == a2 && b1 == b2) || (a1 == b2 && b1 == a2))
            }
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QubitArray {
    pub name: String,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateContent {
    Known(Vec<Mat2>),
    Symbolic(Hint),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateDef {
    pub name: String,
    pub len: usize,
    pub content: GateContent,
}

impl GateDef {
    /// Common class of every element, as a hint.
    pub fn hint(&self) -> Hint {
        match &self.content {
            GateContent::Symbolic(h) => *h,
            GateContent::Known(ms) => {
                let mut classes = ms.iter().map(|m| m.classify());
                match classes.next() {
                    None => Hint::Unknown,
                    Some(first) => {
                        if classes.all(|c| c == first) {
                            Hint::from_class(first)
                        } else {
                            Hint::Unknown
                        }
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoopRange {
    Known { m: i64, n: i64 },
    /// Endpoints named by symbolic parameters of the program.
    Unknown { a: String, b: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopSpec {
    pub iter_var: String,
    pub range: LoopRange,
    pub body: Vec<Instruction>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopProgram {
    pub qubit_arrays: Vec<QubitArray>,
    pub gate_defs: Vec<GateDef>,
    pub symbols: Vec<String>,
    pub pre_body: Vec<Instruction>,
    pub loop_: LoopSpec,
    pub post_body: Vec<Instruction>,
}

impl LoopProgram {
    pub fn array_id(&self, name: &str) -> Option<ArrayId> {
        self.qubit_arrays.iter().position(|a| a.name == name)
    }

    pub fn gate_id(&self, name: &str) -> Option<usize> {
        self.gate_defs.iter().position(|g| g.name == name)
    }

    /// Copy of the program with the loop range replaced.
    pub fn with_range(&self, range: LoopRange) -> LoopProgram {
        let mut p = self.clone();
        if let LoopRange::Unknown { a, b } = &range {
            for s in [a, b] {
                if !p.symbols.contains(s) {
                    p.symbols.push(s.clone());
                }
            }
        }
        p.loop_.range = range;
        p
    }
}

impl fmt::Display for QubitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}[{}i{:+}]", self.array, self.k, self.b)
    }
}
