//! Quantum dependency graph with `(min, dif)` edges.
//!
//! An edge `u → v` with `(min, dif)` asks that `v` from `dif` iterations later starts
//! at least `min` ticks after `u`.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::aliasing::{across_loop_alias, in_loop_alias, AliasAnswer, IterRange};
use crate::gate_algebra::GateClass;
use crate::ir::{Instruction, Op, QubitRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QdgEdge {
    pub from: usize,
    pub to: usize,
    pub min: i64,
    pub dif: i64,
}

impl QdgEdge {
    /// Ordering key under which the smallest edge is the strongest constraint.
    pub fn key(&self) -> (i64, i64) {
        (self.dif, -self.min)
    }

    pub fn weight(&self, ii: i64) -> i64 {
        self.min - ii * self.dif
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Qdg {
    pub nodes: Vec<Instruction>,
    pub edges: Vec<QdgEdge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QdgOptions {
    /// Let antidiagonal gates commute with CZs on a same-slope operand.
    pub antidiagonal_exception: bool,
}

impl Default for QdgOptions {
    fn default() -> Self {
        QdgOptions { antidiagonal_exception: true }
    }
}

pub(crate) fn touches(r: &QubitRef, s: &QubitRef, t: IterRange) -> bool {
    in_loop_alias(r, s, t).aliases() || across_loop_alias(r, s, t).aliases() || across_loop_alias(s, r, t).aliases()
}

/// Is the pair free of dependencies regardless of aliasing?
pub(crate) fn independent(u: &Instruction, v: &Instruction, t: IterRange, opts: QdgOptions) -> bool {
    let (cz, sq) = match (&u.op, &v.op) {
        (Op::Cz { .. }, Op::Cz { .. }) => return true,
        (Op::Cz { .. }, Op::Sq { .. }) => (u, v),
        (Op::Sq { .. }, Op::Cz { .. }) => (v, u),
        _ => return false,
    };
    let Op::Sq { gate, target } = &sq.op else { unreachable!() };
    let Op::Cz { a, b, .. } = &cz.op else { unreachable!() };
    match gate.classify() {
        GateClass::Diagonal => true,
        GateClass::AntiDiagonal if opts.antidiagonal_exception => {
            // every operand the gate can meet must have its slope, and the other operand must stay clear
            let meets_a = touches(target, a, t);
            let meets_b = touches(target, b, t);
            let ok = |op: &QubitRef, other: &QubitRef| op.array == target.array && op.k == target.k && !touches(target, other, t);
            match (meets_a, meets_b) {
                (true, false) => ok(a, b),
                (false, true) => ok(b, a),
                _ => false,
            }
        }
        _ => false,
    }
}

fn edge_min(u: &Instruction, v: &Instruction, ru: &QubitRef, rv: &QubitRef) -> i64 {
    match (&u.op, &v.op) {
        (Op::Sq { .. }, Op::Sq { .. }) if ru.k == rv.k => 0,
        _ => 1,
    }
}

/// All dependency edges before multi-edge reduction.
pub fn build_multigraph(body: &[Instruction], t: IterRange, opts: QdgOptions) -> Qdg {
    let mut edges = Vec::new();
    for (ui, u) in body.iter().enumerate() {
        for (vi, v) in body.iter().enumerate() {
            if independent(u, v, t, opts) {
                continue;
            }
            for ru in u.refs() {
                for rv in v.refs() {
                    if ru.array != rv.array {
                        continue;
                    }
                    let min = edge_min(u, v, &ru, &rv);
                    if ui < vi && in_loop_alias(&ru, &rv, t).aliases() {
                        edges.push(QdgEdge { from: ui, to: vi, min, dif: 0 });
                    }
                    if let AliasAnswer::AcrossLoop { delta_i, .. } = across_loop_alias(&ru, &rv, t) {
                        edges.push(QdgEdge { from: ui, to: vi, min, dif: delta_i });
                    }
                }
            }
        }
    }
    Qdg { nodes: body.to_vec(), edges }
}

/// Keeps, per ordered pair, the edge with the smallest `(dif, −min)`.
pub fn reduce_multiedges(g: &Qdg) -> Qdg {
    let mut best: BTreeMap<(usize, usize), QdgEdge> = BTreeMap::new();
    for e in &g.edges {
        best.entry((e.from, e.to)).and_modify(|cur| if e.key() < cur.key() { *cur = *e }).or_insert(*e);
    }
    Qdg { nodes: g.nodes.clone(), edges: best.into_values().collect() }
}

pub fn build(body: &[Instruction], t: IterRange, opts: QdgOptions) -> Qdg {
    reduce_multiedges(&build_multigraph(body, t, opts))
}

impl Qdg {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&QdgEdge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    pub fn to_dot(&self, label: impl Fn(&Instruction) -> String) -> String {
        let mut s = String::from("digraph qdg {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "  n{i} [label=\"{i}: {}\"];", label(n).replace('"', "'"));
        }
        for e in &self.edges {
            let _ = writeln!(s, "  n{} -> n{} [label=\"({},{})\"];", e.from, e.to, e.min, e.dif);
        }
        s.push_str("}\n");
        s
    }
}
