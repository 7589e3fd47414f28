//! Loop unrolling and loop rotation.
//!
//! After unrolling by `C` the body runs over a fresh counter `j` with
//! `i = C·j + t + base` for copy `t`; rotation then moves leading movable
//! instructions to the tail so that merges between neighbouring iterations
//! become merges inside one iteration.

use serde::{Deserialize, Serialize};

use crate::aliasing::{across_loop_alias, in_loop_alias, AliasAnswer, IterRange};
use crate::compaction::{compact_once_marked, Direction, Marked};
use crate::ir::{Instruction, LoopRange, Op, QubitRef};

#[derive(Clone, Debug, PartialEq)]
pub struct UnrollCase {
    /// Residue `m mod C` this case is valid for; `0` for known ranges.
    pub q: i64,
    /// Unrolled body over `j`.
    pub body: Vec<Instruction>,
    /// Counter range of the unrolled loop: `Some` when known, possibly empty (`lo > hi`).
    pub j_range: Option<(i64, i64)>,
    /// Straight-line remainder for known ranges, in execution order.
    pub remainder: Vec<Instruction>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnrollResult {
    pub c: i64,
    pub cases: Vec<UnrollCase>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("unroll factor must be at least 1, got {0}")]
    BadFactor(i64),
}

/// Copies of `body` for `i = C·j + t + base`, `t = 0..C`.
pub fn unroll_body(body: &[Instruction], c: i64, base: i64) -> Vec<Instruction> {
    let l = body.len();
    let mut out = Vec::with_capacity(l * c as usize);
    for t in 0..c {
        for ins in body {
            let mut u = ins.subst(c, t + base);
            u.src = t as usize * l + ins.src;
            out.push(u);
        }
    }
    out
}

pub fn unroll(body: &[Instruction], range: &LoopRange, c: i64) -> Result<UnrollResult, TransformError> {
    if c < 1 {
        return Err(TransformError::BadFactor(c));
    }
    let cases = match range {
        LoopRange::Known { m, n } => {
            let trips = n - m + 1;
            let full = trips / c;
            let remainder = (m + c * full..=*n).flat_map(|i| body.iter().map(move |ins| ins.subst(0, i))).collect();
            vec![UnrollCase { q: 0, body: unroll_body(body, c, *m), j_range: Some((0, full - 1)), remainder }]
        }
        LoopRange::Unknown { .. } => (0..c)
            .map(|q| UnrollCase { q, body: unroll_body(body, c, q), j_range: None, remainder: Vec::new() })
            .collect(),
    };
    Ok(UnrollResult { c, cases })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateKind {
    Merge,
    Cancel,
}

/// `src` at iteration `j` merges with (or cancels) `dst` at iteration `j + t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub src: usize,
    pub dst: usize,
    pub t: i64,
    pub kind: CandidateKind,
}

fn enough_iterations(t: IterRange, shift: i64) -> bool {
    t.trip_count().is_none_or(|n| n > shift)
}

/// Iteration shift taking `dst` onto `src` on every iteration, when references share a slope.
fn ref_shift(src: &QubitRef, dst: &QubitRef, t: IterRange) -> Option<Shift> {
    if src.array != dst.array || src.k != dst.k {
        return None;
    }
    if src.k == 0 {
        return (src.b == dst.b).then_some(Shift::Any);
    }
    match across_loop_alias(src, dst, t) {
        AliasAnswer::AcrossLoop { delta_i, .. } => Some(Shift::Exactly(delta_i)),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shift {
    Any,
    Exactly(i64),
}

fn combine(a: Shift, b: Shift) -> Option<Shift> {
    match (a, b) {
        (Shift::Any, s) | (s, Shift::Any) => Some(s),
        (Shift::Exactly(x), Shift::Exactly(y)) => (x == y).then_some(a),
    }
}

/// Pairs that merge or cancel across `1..=max_t` iterations.
pub fn find_merge_candidates(body: &[Instruction], t: IterRange, max_t: i64) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (s, si) in body.iter().enumerate() {
        for (d, di) in body.iter().enumerate() {
            if s == d {
                continue;
            }
            let (shift, kind) = match (&si.op, &di.op) {
                (Op::Sq { target: rs, .. }, Op::Sq { target: rd, .. }) => (ref_shift(rs, rd, t), CandidateKind::Merge),
                (Op::Cz { a: a1, b: b1, variant: v1 }, Op::Cz { a: a2, b: b2, variant: v2 }) if v1.is_standard() && v2.is_standard() => {
                    let straight = ref_shift(a1, a2, t).zip(ref_shift(b1, b2, t)).and_then(|(x, y)| combine(x, y));
                    let crossed = ref_shift(a1, b2, t).zip(ref_shift(b1, a2, t)).and_then(|(x, y)| combine(x, y));
                    (straight.or(crossed), CandidateKind::Cancel)
                }
                _ => continue,
            };
            let step = match shift {
                Some(Shift::Any) => 1,
                Some(Shift::Exactly(x)) => x,
                None => continue,
            };
            if step >= 1 && step <= max_t && enough_iterations(t, step) {
                out.push(Candidate { src: s, dst: d, t: step, kind });
            }
        }
    }
    out
}

/// How an instruction may be rotated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Movable {
    No,
    Alone,
    /// Together with the single-qubit gate at this index, which sits on the CZ's only
    /// constant operand.
    With(usize),
}

fn alias(a: &QubitRef, b: &QubitRef, t: IterRange) -> bool {
    in_loop_alias(a, b, t).aliases()
}

pub fn is_movable(body: &[Instruction], idx: usize, t: IterRange) -> Movable {
    let ins = &body[idx];
    let before = &body[..idx];
    match &ins.op {
        Op::Sq { target, .. } => {
            let blocked = before.iter().any(|p| p.refs().iter().any(|r| alias(r, target, t)));
            if blocked {
                Movable::No
            } else {
                Movable::Alone
            }
        }
        Op::Cz { a, b, .. } => {
            let blockers: Vec<usize> = before
                .iter()
                .enumerate()
                .filter(|(_, p)| match &p.op {
                    Op::Sq { target, .. } => alias(target, a, t) || alias(target, b, t),
                    Op::Cz { .. } => false,
                })
                .map(|(j, _)| j)
                .collect();
            match blockers.as_slice() {
                [] => Movable::Alone,
                [s] => {
                    let constant = match (a.k == 0, b.k == 0) {
                        (true, false) => a,
                        (false, true) => b,
                        _ => return Movable::No,
                    };
                    let other = if constant == a { b } else { a };
                    let sref = body[*s].refs()[0];
                    if sref == *constant && !alias(&sref, other, t) && is_movable(body, *s, t) == Movable::Alone {
                        Movable::With(*s)
                    } else {
                        Movable::No
                    }
                }
                _ => Movable::No,
            }
        }
    }
}

/// Rotated-out instance evaluated relative to the loop bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Anchor {
    /// `j = lo + off`
    Lo(i64),
    /// `j = hi + off`, with `hi` the bound before any rotation.
    Hi(i64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaOp {
    pub ins: Instruction,
    pub anchor: Anchor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationResult {
    pub new_body: Vec<Instruction>,
    pub prologue_delta: Vec<DeltaOp>,
    pub epilogue_delta: Vec<DeltaOp>,
    pub marks: Vec<bool>,
    /// Number of rotations; the loop's upper bound shrinks by this much.
    pub rotations: i64,
}

/// Rotation budget: quadratic in the body length, as the procedure guarantees.
pub fn rotation_cap(len: usize) -> i64 {
    (len * len + len) as i64
}

/// Rotates movable instructions with a distance-1 partner to the tail.
///
/// `t` is the counter range before rotation; for known ranges at least one iteration is
/// always kept.
pub fn rotate(body: &[Instruction], t: IterRange) -> RotationResult {
    let mut items: Vec<Marked> = body.iter().cloned().map(|i| (i, false)).collect();
    let mut prologue = Vec::new();
    let mut epilogue: Vec<DeltaOp> = Vec::new();
    let cap = rotation_cap(body.len());
    let mut r = 0i64;
    loop {
        if r >= cap {
            break;
        }
        let cur_range = match t {
            IterRange::Known { lo, hi } => {
                if hi - r - lo < 1 {
                    break;
                }
                IterRange::known(lo, hi - r)
            }
            IterRange::Unbounded => IterRange::Unbounded,
        };
        let cur: Vec<Instruction> = items.iter().map(|(i, _)| i.clone()).collect();
        let cands = find_merge_candidates(&cur, cur_range, 1);
        let pick = (0..cur.len()).find_map(|d| {
            if items[d].1 || !cands.iter().any(|c| c.dst == d) {
                return None;
            }
            match is_movable(&cur, d, cur_range) {
                Movable::No => None,
                Movable::Alone => Some(vec![d]),
                Movable::With(s) => Some(vec![s, d]),
            }
        });
        let Some(unit) = pick else { break };
        for &u in &unit {
            prologue.push(DeltaOp { ins: cur[u].clone(), anchor: Anchor::Lo(0) });
        }
        let mut rest: Vec<Marked> = Vec::new();
        let mut tail: Vec<Marked> = Vec::new();
        let mut epi_now = Vec::new();
        for (idx, (ins, mark)) in items.into_iter().enumerate() {
            if unit.contains(&idx) {
                tail.push((ins.subst(1, 1), true));
            } else {
                epi_now.push(DeltaOp { ins: ins.clone(), anchor: Anchor::Hi(-r) });
                rest.push((ins, mark));
            }
        }
        epi_now.extend(epilogue);
        epilogue = epi_now;
        rest.extend(tail);
        items = rest;
        for _ in 0..3 {
            items = compact_once_marked(items, Direction::Left, cur_range);
        }
        r += 1;
    }
    RotationResult {
        new_body: items.iter().map(|(i, _)| i.clone()).collect(),
        marks: items.iter().map(|(_, m)| *m).collect(),
        prologue_delta: prologue,
        epilogue_delta: epilogue,
        rotations: r,
    }
}

/// Instances of a delta list for a known counter range `[lo, hi]` (bounds before rotation).
pub fn resolve_deltas(deltas: &[DeltaOp], lo: i64, hi: i64) -> Vec<Instruction> {
    deltas
        .iter()
        .map(|d| {
            let j = match d.anchor {
                Anchor::Lo(o) => lo + o,
                Anchor::Hi(o) => hi + o,
            };
            d.ins.subst(0, j)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate_algebra::Mat2;

    fn q(k: i64, b: i64) -> QubitRef {
        QubitRef::new(0, k, b)
    }

    fn hadamard_chain() -> Vec<Instruction> {
        vec![Instruction::known(Mat2::h(), q(1, 0), 0), Instruction::cz(q(1, 0), q(1, 1), 1), Instruction::known(Mat2::h(), q(1, 1), 2)]
    }

    #[test]
    fn unroll_identity_for_c1() {
        let body = hadamard_chain();
        let r = unroll(&body, &LoopRange::Known { m: 0, n: 6 }, 1).unwrap();
        assert_eq!(r.cases.len(), 1);
        assert_eq!(r.cases[0].body, body);
        assert_eq!(r.cases[0].j_range, Some((0, 6)));
        assert!(r.cases[0].remainder.is_empty());
    }

    #[test]
    fn unroll_seven_by_two() {
        let body = vec![Instruction::cz(q(1, 0), q(1, 1), 0); 3];
        let r = unroll(&body, &LoopRange::Known { m: 0, n: 6 }, 2).unwrap();
        let case = &r.cases[0];
        assert_eq!(case.body.len(), 6);
        assert_eq!(case.j_range, Some((0, 2)));
        assert_eq!(case.remainder.len(), 3);
        assert!(case.body.iter().all(|ins| ins.refs()[0].k == 2));
        assert_eq!(case.remainder[0].refs(), vec![q(0, 6), q(0, 7)]);
        assert_eq!(unroll(&body, &LoopRange::Known { m: 0, n: 6 }, 0), Err(TransformError::BadFactor(0)));
    }

    #[test]
    fn unknown_range_splits_by_residue() {
        let r = unroll(&hadamard_chain(), &LoopRange::Unknown { a: "m".into(), b: "n".into() }, 2).unwrap();
        assert_eq!(r.cases.iter().map(|c| c.q).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(r.cases[1].body[0].refs()[0], q(2, 1));
    }

    #[test]
    fn hadamard_chain_candidate() {
        let c = find_merge_candidates(&hadamard_chain(), IterRange::Unbounded, 2);
        assert_eq!(c, vec![Candidate { src: 2, dst: 0, t: 1, kind: CandidateKind::Merge }]);
    }

    #[test]
    fn candidate_distance_shrinks_with_unrolling() {
        // A at j merges with B four iterations later
        let body = vec![Instruction::known(Mat2::h(), q(1, 4), 0), Instruction::known(Mat2::h(), q(1, 0), 1)];
        let c = find_merge_candidates(&body, IterRange::Unbounded, 8);
        assert_eq!(c.iter().map(|c| c.t).collect::<Vec<_>>(), vec![4]);
        let u = unroll(&body, &LoopRange::Unknown { a: "m".into(), b: "n".into() }, 4).unwrap();
        let c = find_merge_candidates(&u.cases[0].body, IterRange::Unbounded, 8);
        assert!(!c.is_empty() && c.iter().all(|c| c.t == 1));
    }

    #[test]
    fn movability() {
        let body = hadamard_chain();
        assert_eq!(is_movable(&body, 0, IterRange::Unbounded), Movable::Alone);
        assert_eq!(is_movable(&body, 1, IterRange::Unbounded), Movable::No);
        let body = vec![Instruction::known(Mat2::h(), q(0, 0), 0), Instruction::cz(q(0, 0), q(1, 1), 1)];
        assert_eq!(is_movable(&body, 1, IterRange::known(0, 5)), Movable::With(0));
    }

    #[test]
    fn rotation_merges_hadamards() {
        let r = rotate(&hadamard_chain(), IterRange::known(0, 5));
        assert_eq!(r.rotations, 1);
        assert_eq!(r.new_body.len(), 1);
        assert!(r.new_body[0].is_cz());
        assert_eq!(r.prologue_delta.len(), 1);
        assert_eq!(r.epilogue_delta.len(), 2);
        let pro = resolve_deltas(&r.prologue_delta, 0, 5);
        assert_eq!(pro[0].refs(), vec![q(0, 0)]);
        let epi = resolve_deltas(&r.epilogue_delta, 0, 5);
        assert_eq!(epi[1].refs(), vec![q(0, 6)]);
    }

    #[test]
    fn nothing_to_rotate() {
        let body = vec![Instruction::cz(q(1, 0), q(1, 1), 0)];
        let r = rotate(&body, IterRange::Unbounded);
        assert_eq!(r.rotations, 0);
        assert_eq!(r.new_body, body);
        assert!(r.prologue_delta.is_empty() && r.epilogue_delta.is_empty());
    }
}
