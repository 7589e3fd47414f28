//! Brute-force oracles shared by the property tests and the acceptance run.
#![allow(dead_code)]

use qlsp::aliasing::IterRange;
use qlsp::gate_algebra::{CzVariant, Mat2, Mat4, Operand};
use qlsp::ir::QubitRef;
use qlsp::qdg::{Qdg, QdgEdge};

/// Iterations searched when the range is unbounded. Wide enough that every solution
/// with `Δi ≤ 64` and the coefficient sizes used in the tests lies inside.
pub const WIDE: (i64, i64) = (-400, 400);
pub const MAX_DELTA: i64 = 64;

fn span(t: IterRange) -> (i64, i64) {
    match t {
        IterRange::Known { lo, hi } => (lo, hi),
        IterRange::Unbounded => WIDE,
    }
}

pub fn brute_in_loop(r1: &QubitRef, r2: &QubitRef, t: IterRange) -> bool {
    let (lo, hi) = span(t);
    r1.array == r2.array && (lo..=hi).any(|i| r1.eval(i) == r2.eval(i))
}

/// Smallest `Δi ∈ 1..=64` with `r1(i) = r2(i + Δi)` for valid `i` and `i + Δi`.
pub fn brute_across(r1: &QubitRef, r2: &QubitRef, t: IterRange) -> Option<i64> {
    if r1.array != r2.array {
        return None;
    }
    let (lo, hi) = span(t);
    (1..=MAX_DELTA).find(|&d| (lo..=hi).any(|i| i + d <= hi && r1.eval(i) == r2.eval(i + d)))
}

pub fn cz(v: CzVariant) -> Mat4 {
    Mat4::cz(v)
}

pub fn on(s: Operand, g: &Mat2) -> Mat4 {
    Mat4::on(s, g)
}

pub const VARIANTS: [CzVariant; 4] =
    [CzVariant { x: 0, y: 0 }, CzVariant { x: 0, y: 1 }, CzVariant { x: 1, y: 0 }, CzVariant { x: 1, y: 1 }];

/// For every ordered pair the kept edge must be at least as heavy as every dropped one.
pub fn reduction_dominates(full: &Qdg, reduced: &Qdg, ii: i64) -> bool {
    full.edges.iter().all(|e: &QdgEdge| {
        reduced.edge(e.from, e.to).is_some_and(|kept| kept.weight(ii) >= e.weight(ii))
    }) && reduced.edges.iter().all(|k| full.edges.contains(k))
}
