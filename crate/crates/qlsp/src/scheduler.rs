//! Modulo scheduling of a loop body.
//!
//! Instruction `c` of the body sits at tick `t = p·II + q`: in kernel iteration `k` it
//! executes for source iteration `k − p` in slot `q`. Placement follows the classic
//! recipe (Floyd feasibility, Tarjan components, list scheduling of the condensed
//! graph) with a quantum resource check that tells conflicts a later iteration can
//! dodge from conflicts that stay put.

use std::fmt::Write;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::aliasing::{in_loop_alias, shifted_alias, IterRange};
use crate::gate_algebra::GateClass;
use crate::ir::{Instruction, Op, QubitRef};
use crate::qdg::{independent, Qdg, QdgOptions};

const NONE: i64 = i64::MIN / 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Conflict {
    None,
    /// Goes away once one side comes from another iteration.
    False,
    /// Persists under any iteration shift.
    True,
}

/// Z gate owed by an inverted antidiagonal/CZ pair. It sits at the CZ's tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InsertedZ {
    pub cz: usize,
    pub anti: usize,
    /// The antidiagonal instance comes from `lag` iterations before the CZ's.
    pub lag: i64,
    /// The CZ operand the antidiagonal does not touch, in the CZ's iteration.
    pub target: QubitRef,
}

/// One insertion into the reservation table. Sizes count qubit operands, the resources
/// the conflict check compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryRecord {
    pub inserted: usize,
    pub table: usize,
    pub ii: i64,
    pub retries: u64,
}

impl RetryRecord {
    /// `retries ≤ m·n·II`.
    pub fn bound(&self) -> u64 {
        (self.inserted * self.table) as u64 * self.ii as u64
    }

    pub fn within_bound(&self) -> bool {
        self.retries <= self.bound()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModuloSchedule {
    pub ii: i64,
    pub body: Vec<Instruction>,
    pub times: Vec<i64>,
    pub inserted_z: Vec<InsertedZ>,
    pub retries: Vec<RetryRecord>,
}

impl ModuloSchedule {
    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    pub fn p(&self, c: usize) -> i64 {
        self.times[c].div_euclid(self.ii)
    }

    pub fn q(&self, c: usize) -> i64 {
        self.times[c].rem_euclid(self.ii)
    }

    pub fn max_p(&self) -> i64 {
        (0..self.len()).map(|c| self.p(c)).max().unwrap_or(0)
    }

    /// `c − p·L`: the instance's position in the original program, minus `k·L`.
    pub fn abs_key(&self, c: usize) -> i64 {
        c as i64 - self.p(c) * self.len() as i64
    }

    /// Every edge satisfied: `t_to + II·dif − t_from ≥ min`.
    pub fn is_legal(&self, g: &Qdg) -> bool {
        g.edges.iter().all(|e| self.times[e.to] + self.ii * e.dif - self.times[e.from] >= e.min)
    }

    /// Instructions per slot, in absolute order.
    pub fn slots(&self) -> Vec<Vec<usize>> {
        let mut slots = vec![Vec::new(); self.ii as usize];
        for c in 0..self.len() {
            slots[self.q(c) as usize].push(c);
        }
        for s in &mut slots {
            s.sort_by_key(|&c| self.abs_key(c));
        }
        slots
    }

    /// Reservation table: one row per slot listing `c@p`.
    pub fn table(&self) -> String {
        let mut out = format!("II={} L={}\n", self.ii, self.len());
        for (q, s) in self.slots().iter().enumerate() {
            let cells: Vec<String> = s.iter().map(|&c| format!("{}@{}", c, self.p(c))).collect();
            let _ = writeln!(out, "  q={q}: {}", cells.join(" "));
        }
        for z in &self.inserted_z {
            let _ = writeln!(out, "  Z for ({}, {}) lag {}", z.cz, z.anti, z.lag);
        }
        out
    }
}

/// Longest-path matrix for weights `min − II·dif`, or `None` on a positive cycle.
pub fn longest_paths(g: &Qdg, ii: i64) -> Option<Vec<Vec<i64>>> {
    let n = g.len();
    let mut d = vec![vec![NONE; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for e in &g.edges {
        d[e.from][e.to] = d[e.from][e.to].max(e.weight(ii));
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == NONE {
                continue;
            }
            for j in 0..n {
                if d[k][j] != NONE {
                    let via = d[i][k] + d[k][j];
                    if via > d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
    }
    (0..n).all(|i| d[i][i] <= 0).then_some(d)
}

pub fn feasibility_check(g: &Qdg, ii: i64) -> bool {
    ii >= 1 && longest_paths(g, ii).is_some()
}

/// Conflict between a placed instruction issued `pp` iterations late and a new one
/// issued `pn` late, in the same slot.
pub fn classify_pair(placed: &Instruction, pp: i64, new: &Instruction, pn: i64, t: IterRange) -> Conflict {
    let both_sq = !placed.is_cz() && !new.is_cz();
    let mut worst = Conflict::None;
    for r1 in placed.refs() {
        for r2 in new.refs() {
            if !shifted_alias(&r1, pp, &r2, pn, t).aliases() {
                continue;
            }
            let (k1, k2) = (r1.k, r2.k);
            let c = if k1 == k2 {
                if k1 == 0 {
                    Conflict::True
                } else if both_sq {
                    // merged into one gate when the kernel is emitted
                    Conflict::None
                } else {
                    Conflict::False
                }
            } else if k2 % (k2 - k1) == 0 {
                Conflict::True
            } else {
                Conflict::False
            };
            worst = worst.max(c);
        }
    }
    worst
}

/// Worst conflict of `new` at tick `tick` against a table of `(instruction, tick)`.
pub fn resource_check(new: &Instruction, tick: i64, table: &[(&Instruction, i64)], ii: i64, t: IterRange) -> Conflict {
    let pn = tick.div_euclid(ii);
    table
        .iter()
        .filter(|(_, tp)| (tp - tick).rem_euclid(ii) == 0)
        .map(|(ins, tp)| classify_pair(ins, tp.div_euclid(ii), new, pn, t))
        .max()
        .unwrap_or(Conflict::None)
}

/// Smallest `k ≥ 0` with `A ∩ (B − k) = ∅`.
pub fn min_shift(a: &[i64], b: &[i64]) -> usize {
    (0..).find(|&k| b.iter().all(|x| !a.contains(&(x - k as i64)))).unwrap()
}

struct Table<'a> {
    body: &'a [Instruction],
    ii: i64,
    t: IterRange,
    placed: Vec<(usize, i64)>,
    operands: usize,
    log: Vec<RetryRecord>,
}

impl<'a> Table<'a> {
    fn new(body: &'a [Instruction], ii: i64, t: IterRange) -> Self {
        Table { body, ii, t, placed: Vec::new(), operands: 0, log: Vec::new() }
    }

    fn conflict(&self, group: &[(usize, i64)], s: i64) -> Conflict {
        let entries: Vec<(&Instruction, i64)> = self.placed.iter().map(|&(c, t)| (&self.body[c], t)).collect();
        group
            .iter()
            .map(|&(v, l)| resource_check(&self.body[v], s + l, &entries, self.ii, self.t))
            .max()
            .unwrap_or(Conflict::None)
    }

    /// Places `group` (local ticks) at the first offset in `[lo, hi]` free of conflicts.
    fn insert(&mut self, group: &[(usize, i64)], lo: i64, hi: Option<i64>) -> Option<i64> {
        let group_ops: usize = group.iter().map(|&(v, _)| self.body[v].refs().len()).sum();
        let ceiling = (self.operands * group_ops) as u64 * self.ii as u64;
        let mut s = lo;
        let mut retries = 0u64;
        let mut countdown: Option<i64> = None;
        let outcome = loop {
            if hi.is_some_and(|h| s > h) {
                break None;
            }
            match self.conflict(group, s) {
                Conflict::None => break Some(s),
                c => {
                    if c == Conflict::True && countdown.is_none() {
                        countdown = Some(self.ii - 1);
                    }
                    if let Some(n) = countdown.as_mut() {
                        if *n == 0 {
                            break None;
                        }
                        *n -= 1;
                    }
                    retries += 1;
                    if retries > ceiling {
                        break None;
                    }
                    s += 1;
                }
            }
        };
        self.log.push(RetryRecord { inserted: group_ops, table: self.operands, ii: self.ii, retries });
        let s = outcome?;
        self.placed.extend(group.iter().map(|&(v, l)| (v, s + l)));
        self.operands += group_ops;
        Some(s)
    }
}

/// Strongly connected components, each sorted, in reverse topological order.
fn components(g: &Qdg) -> Vec<Vec<usize>> {
    let mut pg: DiGraph<(), ()> = DiGraph::new();
    let nodes: Vec<NodeIndex> = (0..g.len()).map(|_| pg.add_node(())).collect();
    for e in &g.edges {
        pg.add_edge(nodes[e.from], nodes[e.to], ());
    }
    tarjan_scc(&pg)
        .into_iter()
        .map(|mut c| {
            c.sort();
            c.into_iter().map(|n| n.index()).collect()
        })
        .collect()
}

/// One attempt at a given II.
pub fn schedule_at(g: &Qdg, ii: i64, t: IterRange) -> Option<ModuloSchedule> {
    let body = &g.nodes;
    let n = body.len();
    let dist = longest_paths(g, ii)?;
    let sccs = components(g);
    let mut log = Vec::new();

    // each component on its own, members in program order inside their Floyd windows
    let mut locals: Vec<Vec<(usize, i64)>> = Vec::with_capacity(sccs.len());
    for comp in &sccs {
        let mut local = Table::new(body, ii, t);
        for (idx, &v) in comp.iter().enumerate() {
            if idx == 0 {
                local.insert(&[(v, 0)], 0, None)?;
                continue;
            }
            let lo = local.placed.iter().filter(|&&(u, _)| dist[u][v] != NONE).map(|&(u, tu)| tu + dist[u][v]).max().unwrap_or(0);
            let hi = local.placed.iter().filter(|&&(u, _)| dist[v][u] != NONE).map(|&(u, tu)| tu - dist[v][u]).min();
            local.insert(&[(v, 0)], lo, hi)?;
        }
        log.append(&mut local.log);
        locals.push(local.placed);
    }

    let mut scc_of = vec![0usize; n];
    for (s, comp) in sccs.iter().enumerate() {
        for &v in comp {
            scc_of[v] = s;
        }
    }
    let mut succs = vec![Vec::new(); sccs.len()];
    let mut npreds = vec![0usize; sccs.len()];
    for e in &g.edges {
        let (a, b) = (scc_of[e.from], scc_of[e.to]);
        if a != b && !succs[a].contains(&b) {
            succs[a].push(b);
            npreds[b] += 1;
        }
    }
    // reverse topological order: successors come first
    let mut height = vec![0usize; sccs.len()];
    for s in 0..sccs.len() {
        height[s] = succs[s].iter().map(|&x| height[x] + 1).max().unwrap_or(0);
    }

    let mut table = Table::new(body, ii, t);
    let mut times = vec![NONE; n];
    let mut done = vec![false; sccs.len()];
    for _ in 0..sccs.len() {
        let s = (0..sccs.len())
            .filter(|&s| !done[s] && npreds[s] == 0)
            .max_by_key(|&s| (height[s], std::cmp::Reverse(sccs[s][0])))
            .expect("condensed graph is acyclic");
        let group = &locals[s];
        let local_of = |v: usize| group.iter().find(|&&(u, _)| u == v).map(|&(_, l)| l).unwrap();
        let min_local = group.iter().map(|&(_, l)| l).min().unwrap_or(0);
        let lo = g
            .edges
            .iter()
            .filter(|e| scc_of[e.to] == s && scc_of[e.from] != s)
            .map(|e| times[e.from] + e.weight(ii) - local_of(e.to))
            .max()
            .unwrap_or(-min_local);
        let off = table.insert(group, lo, None)?;
        for &(v, l) in group {
            times[v] = off + l;
        }
        done[s] = true;
        for &x in &succs[s] {
            npreds[x] -= 1;
        }
    }
    log.append(&mut table.log);

    let base = times.iter().copied().min().unwrap_or(0);
    for x in &mut times {
        *x -= base;
    }
    let sched = ModuloSchedule { ii, body: body.clone(), times, inserted_z: Vec::new(), retries: log };
    debug_assert!(sched.is_legal(g), "placement violates a dependency edge");
    sched.is_legal(g).then_some(sched)
}

/// `t_c = c` at `II = L`: always legal.
pub fn trivial_schedule(body: &[Instruction]) -> ModuloSchedule {
    ModuloSchedule {
        ii: body.len().max(1) as i64,
        body: body.to_vec(),
        times: (0..body.len() as i64).collect(),
        inserted_z: Vec::new(),
        retries: Vec::new(),
    }
}

pub fn linear_scan_sequential(g: &Qdg, t: IterRange, hi: i64) -> Option<ModuloSchedule> {
    (1..=hi).find_map(|ii| schedule_at(g, ii, t))
}

#[cfg(feature = "parallel")]
pub fn linear_scan_parallel(g: &Qdg, t: IterRange, hi: i64) -> Option<ModuloSchedule> {
    use rayon::prelude::*;
    (1..=hi).into_par_iter().find_map_first(|ii| schedule_at(g, ii, t))
}

fn linear_scan(g: &Qdg, t: IterRange, hi: i64) -> Option<ModuloSchedule> {
    #[cfg(feature = "parallel")]
    {
        linear_scan_parallel(g, t, hi)
    }
    #[cfg(not(feature = "parallel"))]
    {
        linear_scan_sequential(g, t, hi)
    }
}

/// Smallest workable II in `[1, min(L, max_ii)]`: binary search, then a check that
/// `II − 1` really fails, with a linear scan when it does not.
pub fn search_ii(g: &Qdg, t: IterRange, max_ii: Option<i64>) -> ModuloSchedule {
    let l = g.len() as i64;
    if l == 0 {
        return trivial_schedule(&[]);
    }
    let top = max_ii.map_or(l, |m| m.clamp(1, l));
    let (mut lo, mut hi) = (1, top);
    let mut best: Option<ModuloSchedule> = None;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match schedule_at(g, mid, t) {
            Some(s) => {
                best = Some(s);
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    let found = match best {
        Some(s) if s.ii == lo => Some(s),
        _ => schedule_at(g, lo, t),
    };
    match found {
        Some(s) if s.ii == 1 || schedule_at(g, s.ii - 1, t).is_none() => s,
        _ => {
            log::debug!("II search frontier inconsistent, scanning linearly");
            linear_scan(g, t, top).unwrap_or_else(|| trivial_schedule(&g.nodes))
        }
    }
}

/// Iteration lags at which `anti` meets CZ operand `x` (CZ iteration minus gate iteration).
fn meeting_lags(anti: &QubitRef, x: &QubitRef, span: i64, t: IterRange) -> Vec<i64> {
    if anti.array != x.array || anti.k != x.k {
        return Vec::new();
    }
    let reach = match t {
        IterRange::Known { lo, hi } => hi - lo,
        IterRange::Unbounded => i64::MAX,
    };
    if anti.k == 0 {
        if anti.b != x.b {
            return Vec::new();
        }
        let r = span.min(reach);
        return (-r..=r).collect();
    }
    let diff = anti.b - x.b;
    if diff % anti.k != 0 || (diff / anti.k).abs() > reach {
        return Vec::new();
    }
    vec![diff / anti.k]
}

/// Records a Z for every antidiagonal/CZ pair whose order the schedule flipped.
pub fn fix_inversions(s: &mut ModuloSchedule, t: IterRange) {
    let opts = QdgOptions { antidiagonal_exception: true };
    let l = s.len() as i64;
    let span = s.times.iter().copied().max().unwrap_or(0) / s.ii + 2;
    let mut owed = Vec::new();
    for (z, cz) in s.body.iter().enumerate() {
        let Op::Cz { a, b, variant } = &cz.op else { continue };
        if !variant.is_standard() {
            continue;
        }
        for (an, g) in s.body.iter().enumerate() {
            let Op::Sq { gate, target } = &g.op else { continue };
            if gate.classify() != GateClass::AntiDiagonal || !independent(g, cz, t, opts) {
                continue;
            }
            for (x, y) in [(a, b), (b, a)] {
                for lag in meeting_lags(target, x, span, t) {
                    let orig_first = lag * l + z as i64 > an as i64;
                    let sched_first = s.times[an] < s.times[z] + s.ii * lag;
                    if orig_first != sched_first {
                        owed.push(InsertedZ { cz: z, anti: an, lag, target: *y });
                    }
                }
            }
        }
    }
    s.inserted_z = owed;
}

/// Earliest-tick placement inside one iteration, antidiagonals kept in order.
pub fn asap_ticks(body: &[Instruction], t: IterRange) -> Vec<usize> {
    let opts = QdgOptions { antidiagonal_exception: false };
    let shares = |u: &Instruction, v: &Instruction| {
        u.refs().iter().any(|r| v.refs().iter().any(|s| in_loop_alias(r, s, t).aliases()))
    };
    let mut ticks: Vec<usize> = Vec::with_capacity(body.len());
    let mut by_tick: Vec<Vec<usize>> = Vec::new();
    for (v, ins) in body.iter().enumerate() {
        let mut tick = (0..v)
            .filter(|&u| shares(&body[u], ins) && !independent(&body[u], ins, t, opts))
            .map(|u| ticks[u] + 1)
            .max()
            .unwrap_or(0);
        while by_tick.get(tick).is_some_and(|w| w.iter().any(|&u| shares(&body[u], ins))) {
            tick += 1;
        }
        if by_tick.len() <= tick {
            by_tick.resize(tick + 1, Vec::new());
        }
        by_tick[tick].push(v);
        ticks.push(tick);
    }
    ticks
}

pub fn asap_depth(body: &[Instruction], t: IterRange) -> usize {
    asap_ticks(body, t).into_iter().map(|x| x + 1).max().unwrap_or(0)
}
