//! Single-peaked / single-dipped preferences over graph vertices, Pareto
//! dominance and Pareto-efficient sets.
//!
//! Every query collapses a profile to its occupied set: dominance only
//! depends on which vertices host at least one agent.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreferenceKind {
    /// Closer is better (the facility is a public good).
    Peaked,
    /// Farther is better (the facility is a public bad).
    Dipped,
}

impl PreferenceKind {
    pub const ALL: [PreferenceKind; 2] = [PreferenceKind::Peaked, PreferenceKind::Dipped];

    pub fn as_str(self) -> &'static str {
        match self {
            PreferenceKind::Peaked => "peaked",
            PreferenceKind::Dipped => "dipped",
        }
    }

    /// True iff an agent at distance `dw` from `w` and `dx` from `x` strictly
    /// prefers `w`.
    #[inline]
    pub fn strictly_prefers(self, dw: u32, dx: u32) -> bool {
        match self {
            PreferenceKind::Peaked => dw < dx,
            PreferenceKind::Dipped => dw > dx,
        }
    }
}

impl fmt::Display for PreferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PreferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "peaked" | "single-peaked" => Ok(PreferenceKind::Peaked),
            "dipped" | "single-dipped" => Ok(PreferenceKind::Dipped),
            other => Err(Error::InvalidSpec(format!(
                "unknown preference kind `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preference {
    Better,
    Worse,
    Indifferent,
}

/// How an agent at `v` ranks alternative `w` against `x`.
pub fn compare(kind: PreferenceKind, g: &Graph, v: usize, w: usize, x: usize) -> Preference {
    let (dw, dx) = (g.dist(v, w), g.dist(v, x));
    if kind.strictly_prefers(dw, dx) {
        Preference::Better
    } else if kind.strictly_prefers(dx, dw) {
        Preference::Worse
    } else {
        Preference::Indifferent
    }
}

/// Non-empty set of occupied vertices, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupiedSet(u64);

impl OccupiedSet {
    pub fn new(bits: u64) -> Result<Self> {
        if bits == 0 {
            Err(Error::EmptyOccupiedSet)
        } else {
            Ok(OccupiedSet(bits))
        }
    }

    /// Checks that every member is a vertex of `g`.
    pub fn for_graph(g: &Graph, bits: u64) -> Result<Self> {
        if bits & !g.full_mask() != 0 {
            let vertex = 63 - (bits & !g.full_mask()).leading_zeros() as usize;
            return Err(Error::InvalidVertex { vertex, n: g.n() });
        }
        Self::new(bits)
    }

    pub fn from_vertices<I: IntoIterator<Item = usize>>(vertices: I) -> Result<Self> {
        let mut bits = 0u64;
        for v in vertices {
            if v >= 64 {
                return Err(Error::InvalidVertex { vertex: v, n: 64 });
            }
            bits |= 1 << v;
        }
        Self::new(bits)
    }

    pub fn singleton(v: usize) -> Self {
        OccupiedSet(1 << v)
    }

    pub fn all(g: &Graph) -> Self {
        OccupiedSet(g.full_mask())
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn contains(self, v: usize) -> bool {
        self.0 >> v & 1 == 1
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// `I(θ) \ {v}`; `None` if that leaves nobody.
    pub fn without(self, v: usize) -> Option<Self> {
        let rest = self.0 & !(1 << v);
        (rest != 0).then_some(OccupiedSet(rest))
    }

    pub fn with(self, v: usize) -> Self {
        OccupiedSet(self.0 | 1 << v)
    }

    pub fn is_subset(self, other: OccupiedSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> BitIter {
        BitIter(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Every non-empty subset of `g`'s vertices in increasing bitmask order.
    pub fn enumerate(g: &Graph) -> impl Iterator<Item = OccupiedSet> {
        (1..=g.full_mask()).map(OccupiedSet)
    }

    pub fn display<'a>(&self, g: &'a Graph) -> LabeledSet<'a> {
        LabeledSet {
            graph: g,
            bits: self.0,
        }
    }
}

impl fmt::Debug for OccupiedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Iterator over the set bits of a mask, lowest first.
#[derive(Debug, Clone)]
pub struct BitIter(pub u64);

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let v = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(v)
    }
}

/// `{v3, v4, v5}`-style rendering with graph labels.
pub struct LabeledSet<'a> {
    graph: &'a Graph,
    bits: u64,
}

impl fmt::Display for LabeledSet<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in BitIter(self.bits).enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(self.graph.label(v))?;
        }
        f.write_str("}")
    }
}

/// A multiset of agent locations together with the preference kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    counts: BTreeMap<usize, usize>,
    kind: PreferenceKind,
}

impl Profile {
    pub fn new(locations: &[usize], kind: PreferenceKind) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::EmptyOccupiedSet);
        }
        let mut counts = BTreeMap::new();
        for &v in locations {
            *counts.entry(v).or_insert(0) += 1;
        }
        Ok(Profile { counts, kind })
    }

    pub fn kind(&self) -> PreferenceKind {
        self.kind
    }

    pub fn agents(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn count_at(&self, v: usize) -> usize {
        self.counts.get(&v).copied().unwrap_or(0)
    }

    /// Agent locations in sorted order, one entry per agent.
    pub fn locations(&self) -> Vec<usize> {
        self.counts
            .iter()
            .flat_map(|(&v, &c)| std::iter::repeat_n(v, c))
            .collect()
    }

    pub fn occupied(&self) -> OccupiedSet {
        OccupiedSet(self.counts.keys().fold(0, |m, &v| m | 1 << v))
    }
}

/// True iff `v` Pareto dominates `w` for the agents on `occ`.
pub fn pareto_dominates(
    g: &Graph,
    occ: OccupiedSet,
    kind: PreferenceKind,
    v: usize,
    w: usize,
) -> bool {
    let mut strict = false;
    for a in occ.iter() {
        match compare(kind, g, a, v, w) {
            Preference::Worse => return false,
            Preference::Better => strict = true,
            Preference::Indifferent => {}
        }
    }
    strict
}

/// Vertices not Pareto dominated by any vertex, as a bitmask.
pub fn pe_mask(g: &Graph, occ: OccupiedSet, kind: PreferenceKind) -> u64 {
    let mut mask = 0u64;
    for w in 0..g.n() {
        if !(0..g.n()).any(|v| pareto_dominates(g, occ, kind, v, w)) {
            mask |= 1 << w;
        }
    }
    mask
}

pub fn pe_set(g: &Graph, occ: OccupiedSet, kind: PreferenceKind) -> Vec<usize> {
    BitIter(pe_mask(g, occ, kind)).collect()
}

/// Per-(graph, kind) lookup tables: which alternatives an agent at `v`
/// strictly prefers to, or finds strictly worse than, a given outcome, and
/// the weak/strict dominance masks behind a word-parallel PE computation.
#[derive(Debug, Clone)]
pub struct PrefTable {
    n: usize,
    kind: PreferenceKind,
    better: Vec<u64>,
    worse: Vec<u64>,
    // weak[x * n + w]: agents that weakly prefer x to w
    weak: Vec<u64>,
    strict: Vec<u64>,
}

impl PrefTable {
    pub fn new(g: &Graph, kind: PreferenceKind) -> Self {
        let n = g.n();
        let mut better = vec![0u64; n * n];
        let mut worse = vec![0u64; n * n];
        let mut weak = vec![0u64; n * n];
        let mut strict = vec![0u64; n * n];
        for v in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let (da, db) = (g.dist(v, a), g.dist(v, b));
                    if kind.strictly_prefers(db, da) {
                        better[v * n + a] |= 1 << b;
                        strict[b * n + a] |= 1 << v;
                    }
                    if kind.strictly_prefers(da, db) {
                        worse[v * n + a] |= 1 << b;
                    } else {
                        weak[b * n + a] |= 1 << v;
                    }
                }
            }
        }
        PrefTable {
            n,
            kind,
            better,
            worse,
            weak,
            strict,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> PreferenceKind {
        self.kind
    }

    /// Alternatives an agent at `v` strictly prefers to `outcome`.
    #[inline]
    pub fn better(&self, v: usize, outcome: usize) -> u64 {
        self.better[v * self.n + outcome]
    }

    /// Alternatives an agent at `v` finds strictly worse than `outcome`.
    #[inline]
    pub fn worse(&self, v: usize, outcome: usize) -> u64 {
        self.worse[v * self.n + outcome]
    }

    #[inline]
    pub fn dominates(&self, occ: u64, x: usize, w: usize) -> bool {
        let i = x * self.n + w;
        occ & !self.weak[i] == 0 && occ & self.strict[i] != 0
    }

    pub fn pe_mask(&self, occ: u64) -> u64 {
        let mut mask = 0u64;
        for w in 0..self.n {
            if !(0..self.n).any(|x| self.dominates(occ, x, w)) {
                mask |= 1 << w;
            }
        }
        mask
    }
}
