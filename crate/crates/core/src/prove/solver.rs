//! Finite-domain search over rule tables.
//!
//! One variable per non-empty occupied set `S` (indexed by its mask), with
//! domain `PE(S)` as a vertex bitmask. Two sets `X`, `Y` constrain each
//! other when an agent in one can reach the other: the agents of `M` at
//! `X` reach `Y` iff `X \ Y ⊆ {v}` for each `v` in `M`, i.e. `M = X` when
//! `X ⊆ Y` and `M = X \ Y` when that difference is a single vertex. No agent
//! in `M` may strictly prefer `f(Y)` to `f(X)`.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use crate::prefs::{BitIter, PrefTable, PreferenceKind};

use crate::graph::Graph;

/// Graphs above this size make `2^n` variables impractical.
pub const PROVER_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagation {
    #[default]
    ForwardChecking,
    /// Forward checking followed by arc-consistency revision of the
    /// neighbours of every shrunk domain.
    ArcConsistency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchOrder {
    /// Tie-break among equally constrained variables by mask.
    pub variables: Direction,
    /// Order in which vertex values are tried.
    pub values: Direction,
}

/// Precomputed constraint structure for one (graph, preference kind).
pub struct Problem {
    n: usize,
    full: u64,
    kind: PreferenceKind,
    initial: Vec<u64>,
    // [a << n | m]: union over agents in m of the vertices they strictly
    // prefer to (resp. find strictly worse than) outcome a
    better_union: Vec<u64>,
    worse_union: Vec<u64>,
    nb_offsets: Vec<u32>,
    nb_flat: Vec<u16>,
}

impl Problem {
    /// Panics if `g` exceeds [`PROVER_CAP`]; callers check first.
    pub fn new(g: &Graph, kind: PreferenceKind) -> Problem {
        let n = g.n();
        assert!(n <= PROVER_CAP, "graph too large for the prover");
        let full = g.full_mask();
        let size = 1usize << n;
        let prefs = PrefTable::new(g, kind);
        let initial: Vec<u64> = (0..size as u64)
            .map(|s| if s == 0 { 0 } else { prefs.pe_mask(s) })
            .collect();
        let mut better_union = vec![0u64; n * size];
        let mut worse_union = vec![0u64; n * size];
        for a in 0..n {
            for m in 1..size {
                let v = m.trailing_zeros() as usize;
                let rest = m & (m - 1);
                better_union[a << n | m] = better_union[a << n | rest] | prefs.better(v, a);
                worse_union[a << n | m] = worse_union[a << n | rest] | prefs.worse(v, a);
            }
        }
        let mut nb_offsets = Vec::with_capacity(size + 1);
        let mut nb_flat = Vec::new();
        nb_offsets.push(0);
        nb_offsets.push(0);
        for x in 1..size as u64 {
            push_neighbors(x, full, &mut nb_flat);
            nb_offsets.push(nb_flat.len() as u32);
        }
        Problem {
            n,
            full,
            kind,
            initial,
            better_union,
            worse_union,
            nb_offsets,
            nb_flat,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> PreferenceKind {
        self.kind
    }

    pub fn full(&self) -> u64 {
        self.full
    }

    pub fn variables(&self) -> usize {
        (1usize << self.n) - 1
    }

    pub fn constraints(&self) -> usize {
        self.nb_flat.len() / 2
    }

    /// Values of `y` incompatible with `x = a`.
    #[inline]
    pub fn forbidden(&self, x: u64, a: usize, y: u64) -> u64 {
        let mut f = 0;
        let xy = x & !y;
        if xy.count_ones() <= 1 {
            let m = if xy == 0 { x } else { xy };
            f |= self.better_union[a << self.n | m as usize];
        }
        let yx = y & !x;
        if yx.count_ones() <= 1 {
            let m = if yx == 0 { y } else { yx };
            f |= self.worse_union[a << self.n | m as usize];
        }
        f
    }

    #[inline]
    fn neighbors(&self, x: u64) -> &[u16] {
        let x = x as usize;
        &self.nb_flat[self.nb_offsets[x] as usize..self.nb_offsets[x + 1] as usize]
    }
}

/// Every `y ∉ {0, x}` with `|x \ y| <= 1` or `|y \ x| <= 1`, each once.
fn push_neighbors(x: u64, full: u64, out: &mut Vec<u16>) {
    let outside = full & !x;
    // |x \ y| <= 1: drop at most one member of x, add any outside subset
    let mut drops: Vec<u64> = vec![0];
    drops.extend(BitIter(x).map(|v| 1u64 << v));
    for drop in drops {
        let base = x & !drop;
        let mut t = outside;
        loop {
            let y = base | t;
            if y != 0 && y != x {
                out.push(y as u16);
            }
            if t == 0 {
                break;
            }
            t = (t - 1) & outside;
        }
    }
    // |y \ x| <= 1 with |x \ y| >= 2
    let mut sub = x;
    loop {
        if (x & !sub).count_ones() >= 2 {
            if sub != 0 {
                out.push(sub as u16);
            }
            for u in BitIter(outside) {
                out.push((sub | 1 << u) as u16);
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & x;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub nodes: u64,
    pub propagations: u64,
}

impl std::ops::AddAssign for Stats {
    fn add_assign(&mut self, rhs: Stats) {
        self.nodes += rhs.nodes;
        self.propagations += rhs.propagations;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Sat,
    Exhausted,
    Stopped,
}

/// A decision: variable mask and the vertex assigned to it.
pub type Decision = (u16, u8);

pub struct Limits<'a> {
    pub deadline: Option<Instant>,
    pub cancel: Option<&'a (dyn Fn() -> bool + Sync)>,
    pub timed_out: &'a AtomicBool,
}

/// Backtracking state: current domains plus an undo trail.
pub struct Search<'p> {
    p: &'p Problem,
    dom: Vec<u64>,
    assigned: Vec<bool>,
    trail: Vec<(u16, u64)>,
    assigned_stack: Vec<u16>,
    queue: Vec<u16>,
    pub propagation: Propagation,
    pub order: SearchOrder,
    pub stats: Stats,
}

impl<'p> Search<'p> {
    pub fn new(p: &'p Problem) -> Search<'p> {
        let size = 1usize << p.n;
        let mut assigned = vec![false; size];
        assigned[0] = true;
        Search {
            p,
            dom: p.initial.clone(),
            assigned,
            trail: Vec::new(),
            assigned_stack: Vec::new(),
            queue: Vec::new(),
            propagation: Propagation::default(),
            order: SearchOrder::default(),
            stats: Stats::default(),
        }
    }

    #[inline]
    pub fn domain(&self, var: u64) -> u64 {
        self.dom[var as usize]
    }

    pub fn is_assigned(&self, var: u64) -> bool {
        self.assigned[var as usize]
    }

    /// Narrows a domain before search (symmetry breaking, forced roots).
    /// Returns false on wipe-out.
    pub fn restrict(&mut self, var: u64, allowed: u64) -> bool {
        let i = var as usize;
        let nd = self.dom[i] & allowed;
        if nd != self.dom[i] {
            self.trail.push((var as u16, self.dom[i]));
            self.dom[i] = nd;
        }
        nd != 0
    }

    fn mark(&self) -> (usize, usize) {
        (self.trail.len(), self.assigned_stack.len())
    }

    fn undo(&mut self, mark: (usize, usize)) {
        while self.trail.len() > mark.0 {
            let (v, d) = self.trail.pop().unwrap();
            self.dom[v as usize] = d;
        }
        while self.assigned_stack.len() > mark.1 {
            let v = self.assigned_stack.pop().unwrap();
            self.assigned[v as usize] = false;
        }
    }

    #[inline]
    fn set_domain(&mut self, var: u16, nd: u64) {
        let i = var as usize;
        self.trail.push((var, self.dom[i]));
        self.dom[i] = nd;
        self.stats.propagations += 1;
    }

    /// Assigns `var = value` and propagates. Returns false if some domain
    /// is wiped out; the caller must then undo to an earlier mark.
    pub fn assign(&mut self, var: u64, value: usize) -> bool {
        if self.dom[var as usize] >> value & 1 == 0 {
            return false;
        }
        let p = self.p;
        self.set_domain(var as u16, 1 << value);
        self.assigned[var as usize] = true;
        self.assigned_stack.push(var as u16);
        self.queue.clear();
        for &y in p.neighbors(var) {
            if self.assigned[y as usize] {
                continue;
            }
            let cur = self.dom[y as usize];
            let nd = cur & !p.forbidden(var, value, y as u64);
            if nd != cur {
                self.set_domain(y, nd);
                if nd == 0 {
                    return false;
                }
                self.queue.push(y);
            }
        }
        if self.propagation == Propagation::ArcConsistency {
            return self.revise_queue();
        }
        true
    }

    fn revise_queue(&mut self) -> bool {
        let p = self.p;
        while let Some(y) = self.queue.pop() {
            let dy = self.dom[y as usize];
            for &z in p.neighbors(y as u64) {
                if self.assigned[z as usize] {
                    continue;
                }
                let cur = self.dom[z as usize];
                let mut nd = cur;
                for c in BitIter(cur) {
                    if dy & !p.forbidden(z as u64, c, y as u64) == 0 {
                        nd &= !(1 << c);
                    }
                }
                if nd != cur {
                    self.set_domain(z, nd);
                    if nd == 0 {
                        return false;
                    }
                    self.queue.push(z);
                }
            }
        }
        true
    }

    /// Most constrained unassigned variable.
    fn select(&self) -> Option<u64> {
        let size = self.dom.len() as u64;
        let mut best: Option<(u32, u64)> = None;
        let mut consider = |x: u64| {
            if self.assigned[x as usize] {
                return false;
            }
            let c = self.dom[x as usize].count_ones();
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, x));
            }
            c <= 1
        };
        match self.order.variables {
            Direction::Ascending => {
                for x in 1..size {
                    if consider(x) {
                        break;
                    }
                }
            }
            Direction::Descending => {
                for x in (1..size).rev() {
                    if consider(x) {
                        break;
                    }
                }
            }
        }
        best.map(|(_, x)| x)
    }

    fn values(&self, var: u64) -> Vec<usize> {
        let mut vals: Vec<usize> = BitIter(self.dom[var as usize]).collect();
        if self.order.values == Direction::Descending {
            vals.reverse();
        }
        vals
    }

    /// Replays decisions from the current state.
    pub fn replay(&mut self, path: &[Decision]) -> bool {
        path.iter().all(|&(x, a)| self.assign(x as u64, a as usize))
    }

    /// Decision paths of the search tree cut at `depth`, in depth-first
    /// order; dead branches are dropped.
    pub fn frontier(&mut self, depth: usize) -> Vec<Vec<Decision>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.frontier_rec(depth, &mut path, &mut out);
        out
    }

    fn frontier_rec(
        &mut self,
        depth: usize,
        path: &mut Vec<Decision>,
        out: &mut Vec<Vec<Decision>>,
    ) {
        self.stats.nodes += 1;
        let var = match self.select() {
            Some(x) if depth > 0 => x,
            _ => {
                out.push(path.clone());
                return;
            }
        };
        for a in self.values(var) {
            let mark = self.mark();
            if self.assign(var, a) {
                path.push((var as u16, a as u8));
                self.frontier_rec(depth - 1, path, out);
                path.pop();
            }
            self.undo(mark);
        }
    }

    /// Depth-first search. `on_solution` sees each complete assignment and
    /// returns true to stop.
    pub fn run<F>(&mut self, limits: &Limits<'_>, on_solution: &mut F) -> Outcome
    where
        F: FnMut(&[u64]) -> bool,
    {
        self.stats.nodes += 1;
        if self.stats.nodes.is_multiple_of(512) {
            if limits.deadline.is_some_and(|d| Instant::now() >= d) {
                limits.timed_out.store(true, Ordering::Relaxed);
                return Outcome::Stopped;
            }
            if limits.timed_out.load(Ordering::Relaxed) || limits.cancel.is_some_and(|c| c()) {
                return Outcome::Stopped;
            }
        }
        let Some(var) = self.select() else {
            return if on_solution(&self.dom) {
                Outcome::Sat
            } else {
                Outcome::Exhausted
            };
        };
        for a in self.values(var) {
            let mark = self.mark();
            if self.assign(var, a) {
                match self.run(limits, on_solution) {
                    Outcome::Exhausted => {}
                    other => {
                        self.undo(mark);
                        return other;
                    }
                }
            }
            self.undo(mark);
        }
        Outcome::Exhausted
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbor_lists_match_definition() {
        for n in 1..=5usize {
            let full = (1u64 << n) - 1;
            for x in 1..=full {
                let mut got = Vec::new();
                push_neighbors(x, full, &mut got);
                got.sort_unstable();
                let want: Vec<u16> = (1..=full)
                    .filter(|&y| {
                        y != x && ((x & !y).count_ones() <= 1 || (y & !x).count_ones() <= 1)
                    })
                    .map(|y| y as u16)
                    .collect();
                assert_eq!(got, want, "n={n} x={x:b}");
            }
        }
    }

    #[test]
    fn forbidden_matches_pairwise_definition() {
        let g = Graph::cycle(5).unwrap();
        for kind in PreferenceKind::ALL {
            let p = Problem::new(&g, kind);
            for x in 1..32u64 {
                for y in 1..32u64 {
                    for a in 0..5 {
                        let mut want = 0u64;
                        for b in 0..5 {
                            // agent v in x reaches y, or agent u in y reaches x
                            let bad_xy = BitIter(x).any(|v| {
                                (x & !(1 << v)) & !y == 0
                                    && kind.strictly_prefers(g.dist(v, b), g.dist(v, a))
                            });
                            let bad_yx = BitIter(y).any(|u| {
                                (y & !(1 << u)) & !x == 0
                                    && kind.strictly_prefers(g.dist(u, a), g.dist(u, b))
                            });
                            if bad_xy || bad_yx {
                                want |= 1 << b;
                            }
                        }
                        assert_eq!(p.forbidden(x, a, y), want, "{kind} x={x:b} y={y:b} a={a}");
                    }
                }
            }
        }
    }

    #[test]
    fn forced_step_on_six_cycle() {
        // with f(V) = v1, agents at v2 and v5 pin f({v2,v3,v4,v5}) to v3
        let g = Graph::cycle(6).unwrap();
        let p = Problem::new(&g, PreferenceKind::Peaked);
        let mut s = Search::new(&p);
        assert_eq!(s.domain(0b011110), 0b011110);
        assert!(s.assign(0b111111, 0));
        assert_eq!(s.domain(0b011110), 0b000100);
    }
}
