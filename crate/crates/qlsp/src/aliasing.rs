//! In-loop and across-loop aliasing of linear qubit indices.
//!
//! Everything here is exact integer arithmetic. Across-loop aliasing reduces to the
//! bounded two-variable equation `a·x + b·y = c` with `x ∈ T`, `x + y ∈ T`, `y ≥ 1`,
//! solved in constant time with the extended Euclidean algorithm.

use serde::{Deserialize, Serialize};

use crate::ir::QubitRef;

/// Set of valid iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IterRange {
    Known { lo: i64, hi: i64 },
    Unbounded,
}

impl IterRange {
    pub fn known(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "empty iteration range {lo}..{hi}");
        IterRange::Known { lo, hi }
    }

    pub fn contains(&self, i: i64) -> bool {
        match *self {
            IterRange::Known { lo, hi } => lo <= i && i <= hi,
            IterRange::Unbounded => true,
        }
    }

    /// Some element, for witnesses.
    pub fn any(&self) -> i64 {
        match *self {
            IterRange::Known { lo, .. } => lo,
            IterRange::Unbounded => 0,
        }
    }

    /// Iterations `x` for which both `x − p1` and `x − p2` lie in the range.
    pub fn shifted_window(&self, p1: i64, p2: i64) -> Option<IterRange> {
        match *self {
            IterRange::Unbounded => Some(IterRange::Unbounded),
            IterRange::Known { lo, hi } => {
                let l = lo + p1.max(p2);
                let h = hi + p1.min(p2);
                (l <= h).then_some(IterRange::Known { lo: l, hi: h })
            }
        }
    }

    pub fn trip_count(&self) -> Option<i64> {
        match *self {
            IterRange::Known { lo, hi } => Some(hi - lo + 1),
            IterRange::Unbounded => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AliasAnswer {
    NoAlias,
    InLoop { witness: i64 },
    AcrossLoop { delta_i: i64, witness: i64 },
}

impl AliasAnswer {
    pub fn aliases(&self) -> bool {
        !matches!(self, AliasAnswer::NoAlias)
    }
}

/// Do the two references hit the same qubit in one iteration?
pub fn in_loop_alias(r1: &QubitRef, r2: &QubitRef, t: IterRange) -> AliasAnswer {
    if r1.array != r2.array {
        return AliasAnswer::NoAlias;
    }
    if r1.k == r2.k {
        return if r1.b == r2.b { AliasAnswer::InLoop { witness: t.any() } } else { AliasAnswer::NoAlias };
    }
    let dk = r1.k - r2.k;
    let db = r2.b - r1.b;
    if db % dk != 0 {
        return AliasAnswer::NoAlias;
    }
    let i = db / dk;
    if t.contains(i) {
        AliasAnswer::InLoop { witness: i }
    } else {
        AliasAnswer::NoAlias
    }
}

/// Smallest `Δi ≥ 1` such that `r1` at iteration `i` and `r2` at iteration `i + Δi`
/// hit the same qubit, with both iterations valid.
pub fn across_loop_alias(r1: &QubitRef, r2: &QubitRef, t: IterRange) -> AliasAnswer {
    if r1.array != r2.array {
        return AliasAnswer::NoAlias;
    }
    // (k2 − k1)·i + k2·Δi = b1 − b2
    match min_positive_y(r2.k - r1.k, r2.k, r1.b - r2.b, t) {
        Some((y, x)) => AliasAnswer::AcrossLoop { delta_i: y, witness: x },
        None => AliasAnswer::NoAlias,
    }
}

/// In-loop aliasing of `r1` issued `p1` iterations late against `r2` issued `p2` late,
/// restricted to iterations where both source iterations exist.
pub fn shifted_alias(r1: &QubitRef, p1: i64, r2: &QubitRef, p2: i64, t: IterRange) -> AliasAnswer {
    match t.shifted_window(p1, p2) {
        None => AliasAnswer::NoAlias,
        Some(w) => in_loop_alias(&r1.shifted(p1), &r2.shifted(p2), w),
    }
}

/// Returns `(g, x, y)` with `a·x + b·y = g = gcd(a, b) ≥ 0`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        // b·x + (a mod b)·y = g, a mod b = a − b·(a div b)
        (g, y, x - a.div_euclid(b) * y)
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    let q = a / b;
    if a % b != 0 && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if a % b != 0 && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

/// Minimal `k` satisfying `lo ≤ base + k·step ≤ hi`; `None` bounds mean open.
fn k_interval(base: i128, step: i128, lo: i128, hi: i128) -> Option<(Option<i128>, Option<i128>)> {
    if step == 0 {
        return (lo <= base && base <= hi).then_some((None, None));
    }
    if step > 0 {
        Some((Some(div_ceil(lo - base, step)), Some(div_floor(hi - base, step))))
    } else {
        Some((Some(div_ceil(hi - base, step)), Some(div_floor(lo - base, step))))
    }
}

/// Solves `a·x + b·y = c`, `x ∈ T`, `x + y ∈ T`, `y ≥ 1` for the minimal `y`.
/// Returns `(y, x)`.
pub fn min_positive_y(a: i64, b: i64, c: i64, t: IterRange) -> Option<(i64, i64)> {
    let (a, b, c) = (a as i128, b as i128, c as i128);
    let window = match t {
        IterRange::Known { lo, hi } => Some((lo as i128, hi as i128)),
        IterRange::Unbounded => None,
    };
    let in_t = |v: i128| window.is_none_or(|(lo, hi)| lo <= v && v <= hi);
    let out = |y: i128, x: i128| Some((y as i64, x as i64));
    match (a == 0, b == 0) {
        (true, true) => {
            if c != 0 {
                return None;
            }
            match window {
                None => out(1, 0),
                Some((lo, hi)) => (lo < hi).then_some((1, lo as i64)),
            }
        }
        (true, false) => {
            if c % b != 0 {
                return None;
            }
            let y = c / b;
            if y < 1 {
                return None;
            }
            match window {
                None => out(y, 0),
                Some((lo, hi)) => (lo + y <= hi).then_some((y as i64, lo as i64)),
            }
        }
        (false, true) => {
            if c % a != 0 {
                return None;
            }
            let x = c / a;
            if !in_t(x) || !in_t(x + 1) {
                return None;
            }
            out(1, x)
        }
        (false, false) => {
            let (g, s, r) = ext_gcd(a, b);
            if c % g != 0 {
                return None;
            }
            let scale = c / g;
            let (x0, y0) = (s * scale, r * scale);
            let (mut dx, mut dy) = (b / g, -a / g);
            if dy < 0 {
                dx = -dx;
                dy = -dy;
            }
            // y = y0 + k·dy ≥ 1
            let mut k_lo = div_ceil(1 - y0, dy);
            let mut k_hi: Option<i128> = None;
            if let Some((lo, hi)) = window {
                for (base, step) in [(x0, dx), (x0 + y0, dx + dy)] {
                    let (l, h) = k_interval(base, step, lo, hi)?;
                    if let Some(l) = l {
                        k_lo = k_lo.max(l);
                    }
                    if let Some(h) = h {
                        k_hi = Some(k_hi.map_or(h, |cur: i128| cur.min(h)));
                    }
                }
            }
            if k_hi.is_some_and(|h| k_lo > h) {
                return None;
            }
            out(y0 + k_lo * dy, x0 + k_lo * dx)
        }
    }
}
