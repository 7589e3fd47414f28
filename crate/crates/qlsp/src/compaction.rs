//! Greedy loop-kernel compaction.
//!
//! Each pass walks the body once. An incoming instruction scans the already placed
//! list from its tail: single-qubit gates merge into the nearest gate on the same
//! qubit expression when nothing in between blocks them, and identical CZs cancel.
//! Anything blocked, or with nothing to merge into, keeps its place at the end.

use crate::aliasing::{in_loop_alias, IterRange};
use crate::gate_algebra::{merge, GateClass, Mat2, SqGate, TOL};
use crate::ir::{Instruction, Op, QubitRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

/// Body item with a rotation mark. Merges and cancellations clear marks.
pub type Marked = (Instruction, bool);

#[derive(Clone, Debug)]
struct Slot {
    ins: Instruction,
    mark: bool,
    /// Cancelled CZ kept so that a third identical CZ can revive it.
    dead: bool,
}

fn aliases(a: &QubitRef, b: &QubitRef, t: IterRange) -> bool {
    in_loop_alias(a, b, t).aliases()
}

/// Left pass. With `reversed`, the list is in reverse time order and merges compose the
/// other way round.
fn pass(items: Vec<Marked>, t: IterRange, reversed: bool) -> Vec<Marked> {
    let mut placed: Vec<Slot> = Vec::with_capacity(items.len());
    for (ins, mark) in items {
        match &ins.op {
            Op::Sq { gate, target } => place_sq(&mut placed, ins.clone(), gate.clone(), *target, mark, t, reversed),
            Op::Cz { a, b, variant } => {
                if !variant.is_standard() {
                    // variants only appear in debugging paths; treat them as opaque
                    placed.push(Slot { ins, mark, dead: false });
                    continue;
                }
                place_cz(&mut placed, ins.clone(), *a, *b, mark, t)
            }
        }
    }
    placed.into_iter().filter(|s| !s.dead).map(|s| (s.ins, s.mark)).collect()
}

fn place_sq(placed: &mut Vec<Slot>, ins: Instruction, gate: SqGate, r: QubitRef, mark: bool, t: IterRange, reversed: bool) {
    if gate.is_identity() {
        return;
    }
    let class = gate.classify();
    // CZs crossed so far on an operand equal to `r`; an antidiagonal owes a Z on the other one
    let mut crossed: Vec<(usize, QubitRef)> = Vec::new();
    for j in (0..placed.len()).rev() {
        let slot = &placed[j];
        if slot.dead {
            continue;
        }
        match &slot.ins.op {
            Op::Sq { gate: bg, target } => {
                if *target == r {
                    let merged = if reversed { merge(&gate, bg) } else { merge(bg, &gate) };
                    // a merge that owes more Zs than it removes would grow the body
                    let removed = 1 + usize::from(merged.is_identity());
                    if crossed.len() > removed {
                        break;
                    }
                    // insert Zs first: they sit to the right of `j`
                    for &(pos, other) in crossed.iter() {
                        placed.insert(pos + 1, Slot { ins: Instruction::known(Mat2::z(), other, ins.src), mark: false, dead: false });
                    }
                    if merged.is_identity() {
                        placed.remove(j);
                    } else {
                        let src = placed[j].ins.src;
                        placed[j] = Slot { ins: Instruction::sq(merged, r, src), mark: false, dead: false };
                    }
                    return;
                }
                if aliases(target, &r, t) {
                    break;
                }
            }
            Op::Cz { a, b, .. } => {
                let (ha, hb) = (aliases(a, &r, t), aliases(b, &r, t));
                if !ha && !hb {
                    continue;
                }
                match class {
                    GateClass::Diagonal => continue,
                    GateClass::AntiDiagonal => {
                        if *a == r && !hb {
                            crossed.push((j, *b));
                        } else if *b == r && !ha {
                            crossed.push((j, *a));
                        } else {
                            break;
                        }
                    }
                    GateClass::General => break,
                }
            }
        }
    }
    placed.push(Slot { ins, mark, dead: false });
}

fn place_cz(placed: &mut Vec<Slot>, ins: Instruction, a: QubitRef, b: QubitRef, mark: bool, t: IterRange) {
    for j in (0..placed.len()).rev() {
        let slot = &placed[j];
        if slot.dead {
            if slot.ins.same_cz(&ins) {
                placed[j].dead = false;
                placed[j].mark = false;
                return;
            }
            continue;
        }
        match &slot.ins.op {
            Op::Sq { target, .. } => {
                if aliases(target, &a, t) || aliases(target, &b, t) {
                    break;
                }
            }
            Op::Cz { .. } => {
                if slot.ins.same_cz(&ins) {
                    placed[j].dead = true;
                    return;
                }
            }
        }
    }
    placed.push(Slot { ins, mark, dead: false });
}

/// One pass over marked items.
pub fn compact_once_marked(items: Vec<Marked>, dir: Direction, t: IterRange) -> Vec<Marked> {
    match dir {
        Direction::Left => pass(items, t, false),
        Direction::Right => {
            let mut rev = items;
            rev.reverse();
            let mut out = pass(rev, t, true);
            out.reverse();
            out
        }
    }
}

fn unmarked(body: &[Instruction]) -> Vec<Marked> {
    body.iter().cloned().map(|i| (i, false)).collect()
}

fn strip(items: Vec<Marked>) -> Vec<Instruction> {
    items.into_iter().map(|(i, _)| i).collect()
}

pub fn compact_once(body: &[Instruction], dir: Direction, t: IterRange) -> Vec<Instruction> {
    strip(compact_once_marked(unmarked(body), dir, t))
}

/// Structural equality with matrices compared to tolerance.
pub fn same_body(a: &[Instruction], b: &[Instruction]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.approx_eq(y, TOL))
}

/// Passes in one direction until nothing changes.
///
/// Three passes are normally enough. Z corrections owed by antidiagonals can open one
/// more merge when several of them chain through CZs on shared qubits, so we keep going;
/// the length never grows, and the pass count is capped by the body length.
pub fn compact_fixpoint_dir(body: &[Instruction], dir: Direction, t: IterRange) -> Vec<Instruction> {
    let mut cur = body.to_vec();
    for _ in 0..3 {
        cur = compact_once(&cur, dir, t);
    }
    for extra in 0..=body.len() {
        let next = compact_once(&cur, dir, t);
        if same_body(&next, &cur) {
            break;
        }
        log::debug!("compaction pass {} still changed the body", 4 + extra);
        cur = next;
    }
    cur
}

pub fn compact_fixpoint(body: &[Instruction], t: IterRange) -> Vec<Instruction> {
    compact_fixpoint_dir(body, Direction::Left, t)
}

/// Right fixpoint followed by a left fixpoint.
pub fn compact_bidirectional(body: &[Instruction], t: IterRange) -> Vec<Instruction> {
    let right = compact_fixpoint_dir(body, Direction::Right, t);
    compact_fixpoint_dir(&right, Direction::Left, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate_algebra::{Mat4, Operand};
    use crate::ir::QubitRef;

    const A: QubitRef = QubitRef::new(0, 0, 0);
    const B: QubitRef = QubitRef::new(0, 0, 1);
    const T: IterRange = IterRange::Unbounded;

    fn k(m: Mat2, r: QubitRef) -> Instruction {
        Instruction::known(m, r, 0)
    }

    fn sandwich() -> Vec<Instruction> {
        vec![
            k(Mat2::z(), A),
            k(Mat2::x(), B),
            Instruction::cz(A, B, 2),
            k(Mat2::h(), B),
            k(Mat2::z(), B),
            k(Mat2::h(), B),
        ]
    }

    fn unitary(body: &[Instruction]) -> Mat4 {
        body.iter().fold(Mat4::identity(), |acc, ins| {
            let g = match &ins.op {
                Op::Sq { gate: SqGate::Known(m), target } => Mat4::on(if *target == A { Operand::A } else { Operand::B }, m),
                Op::Cz { variant, .. } => Mat4::cz(*variant),
                _ => unreachable!(),
            };
            g * acc
        })
    }

    #[test]
    fn sandwich_needs_three_passes() {
        let mut cur = sandwich();
        let mut lens = Vec::new();
        for _ in 0..3 {
            cur = compact_once(&cur, Direction::Left, T);
            lens.push(cur.len());
        }
        assert_eq!(lens, vec![4, 3, 1]);
        assert!(cur[0].same_cz(&Instruction::cz(A, B, 0)));
        assert!(same_body(&compact_once(&cur, Direction::Left, T), &cur));
        assert!(unitary(&sandwich()).max_abs_diff(&unitary(&cur)) < 1e-9);
    }

    #[test]
    fn cz_pair_cancels_and_third_revives() {
        let cz = Instruction::cz(A, B, 0);
        assert!(compact_once(&[cz.clone(), cz.clone()], Direction::Left, T).is_empty());
        let swapped = Instruction::cz(B, A, 1);
        assert_eq!(compact_once(&[cz.clone(), swapped.clone(), cz.clone()], Direction::Left, T).len(), 1);
    }

    #[test]
    fn right_compaction_merges_through_cz() {
        // Z b; CZ a,b; H b: Z passes the CZ to the right and merges into H
        let body = vec![k(Mat2::z(), B), Instruction::cz(A, B, 1), k(Mat2::h(), B)];
        let left = compact_fixpoint(&body, T);
        assert_eq!(left.len(), 3);
        let both = compact_bidirectional(&body, T);
        assert_eq!(both.len(), 2);
        assert!(both[0].is_cz());
        assert!(unitary(&body).max_abs_diff(&unitary(&both)) < 1e-9);
    }

    #[test]
    fn no_in_loop_merge_across_iterations() {
        let q = |b| QubitRef::new(0, 1, b);
        let body = vec![k(Mat2::h(), q(0)), k(Mat2::h(), q(1)), k(Mat2::h(), q(2))];
        assert!(same_body(&compact_fixpoint(&body, T), &body));
    }

    #[test]
    fn chained_corrections_need_a_fourth_pass() {
        let f = |b: i64| SqGate::elem(0, crate::ir::Affine::constant(b), crate::gate_algebra::Hint::AntiDiagonal);
        let q = |b| QubitRef::new(0, 0, b);
        let sq = |g, r| Instruction::sq(g, r, 0);
        let cz = |a, b| Instruction::cz(q(a), q(b), 0);
        let body = vec![
            sq(f(0), q(2)),
            sq(f(0), q(2)),
            cz(1, 2),
            sq(f(1), q(2)),
            cz(1, 2),
            cz(4, 2),
            sq(f(2), q(2)),
            sq(f(2), q(4)),
            cz(1, 2),
            sq(f(3), q(2)),
        ];
        let mut three = body.clone();
        for _ in 0..3 {
            three = compact_once(&three, Direction::Right, T);
        }
        assert!(!same_body(&compact_once(&three, Direction::Right, T), &three));
        let fx = compact_fixpoint_dir(&body, Direction::Right, T);
        assert!(same_body(&compact_once(&fx, Direction::Right, T), &fx));
        assert!(fx.len() < three.len());
    }

    #[test]
    fn antidiagonal_through_cz_owes_z() {
        // X a; CZ a,b; X a == Z b; CZ a,b
        let body = vec![k(Mat2::x(), A), Instruction::cz(A, B, 1), k(Mat2::x(), A)];
        let out = compact_fixpoint(&body, T);
        assert!(unitary(&body).max_abs_diff(&unitary(&out)) < 1e-9);
        assert_eq!(out.len(), 2);
    }
}
