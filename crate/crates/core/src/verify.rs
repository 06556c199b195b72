//! Pareto efficiency and false-name-proofness checks with self-validating
//! certificates.
//!
//! Two independent routes decide false-name-proofness:
//!
//! * [`verify_fnp_idb`] quantifies over occupied sets. An agent alone or not
//!   alone at `v` in `S` can, by misreporting and adding fake identities,
//!   reach exactly the non-empty supersets of `S \ {v}`.
//! * [`verify_fnp_bruteforce`] enumerates explicit agent multisets,
//!   misreports and fake-identity multisets within small bounds.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::Graph;
use crate::prefs::{BitIter, OccupiedSet, PrefTable, PreferenceKind, Profile};
use crate::rules::{as_table, Rule, RuleTable};

/// Largest graph the set-based verifiers will enumerate.
pub const VERIFY_CAP: usize = 20;
/// Largest graph for the explicit brute force.
pub const BRUTEFORCE_CAP: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PeVerdict {
    Holds,
    Violated {
        occ: OccupiedSet,
        outcome: usize,
        dominator: usize,
    },
}

impl PeVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, PeVerdict::Holds)
    }
}

/// A profitable deviation: the agent alone at `manipulator` turns the
/// occupied set `before` into `after`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub before: OccupiedSet,
    pub manipulator: usize,
    pub after: OccupiedSet,
    pub outcome_before: usize,
    pub outcome_after: usize,
    /// Hop distance from the manipulator to each outcome.
    pub dist_before: u32,
    pub dist_after: u32,
}

impl Counterexample {
    /// Builds the certificate if `after` is reachable from `before` by the
    /// agent at `manipulator` and strictly benefits them.
    pub fn new_checked(
        g: &Graph,
        rule: &Rule,
        kind: PreferenceKind,
        before: OccupiedSet,
        manipulator: usize,
        after: OccupiedSet,
    ) -> Option<Counterexample> {
        if !before.contains(manipulator) {
            return None;
        }
        let rest = before.bits() & !(1 << manipulator);
        if after.bits() & rest != rest {
            return None;
        }
        let outcome_before = rule.eval(g, before);
        let outcome_after = rule.eval(g, after);
        let dist_before = g.dist(manipulator, outcome_before);
        let dist_after = g.dist(manipulator, outcome_after);
        kind.strictly_prefers(dist_after, dist_before)
            .then_some(Counterexample {
                before,
                manipulator,
                after,
                outcome_before,
                outcome_after,
                dist_before,
                dist_after,
            })
    }

    /// Re-derives the certificate from scratch.
    pub fn is_valid(&self, g: &Graph, rule: &Rule, kind: PreferenceKind) -> bool {
        Counterexample::new_checked(g, rule, kind, self.before, self.manipulator, self.after)
            .as_ref()
            == Some(self)
    }

    /// Signed improvement in hops for the manipulator.
    pub fn gain(&self, kind: PreferenceKind) -> i64 {
        let (b, a) = (self.dist_before as i64, self.dist_after as i64);
        match kind {
            PreferenceKind::Peaked => b - a,
            PreferenceKind::Dipped => a - b,
        }
    }

    /// Vertices the manipulation adds beyond the truthful set.
    pub fn added(&self) -> u64 {
        self.after.bits() & !self.before.bits()
    }

    /// `|after △ before|`.
    pub fn size(&self) -> u32 {
        (self.after.bits() ^ self.before.bits()).count_ones()
    }

    /// An explicit agent-level manipulation realizing this certificate:
    /// one agent per vertex of `before`, the manipulator reports a vertex
    /// of `after` and fake identities cover the rest.
    pub fn to_manipulation(&self) -> Manipulation {
        let truthful = self.before.to_vec();
        let agent = truthful
            .iter()
            .position(|&v| v == self.manipulator)
            .unwrap();
        let rest = self.before.bits() & !(1 << self.manipulator);
        let new_vertices = self.after.bits() & !rest;
        let report = if self.after.contains(self.manipulator) {
            self.manipulator
        } else if new_vertices != 0 {
            new_vertices.trailing_zeros() as usize
        } else {
            self.after.bits().trailing_zeros() as usize
        };
        let fakes = BitIter(new_vertices & !(1 << report)).collect();
        Manipulation {
            truthful,
            agent,
            report,
            fakes,
        }
    }

    pub fn to_json(&self, g: &Graph, kind: PreferenceKind) -> Value {
        json!({
            "before": labels(g, self.before.bits()),
            "manipulator": g.label(self.manipulator),
            "after": labels(g, self.after.bits()),
            "outcome_before": g.label(self.outcome_before),
            "outcome_after": g.label(self.outcome_after),
            "dist_before": self.dist_before,
            "dist_after": self.dist_after,
            "gain": self.gain(kind),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FnpVerdict {
    Holds,
    Violated(Counterexample),
}

impl FnpVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, FnpVerdict::Holds)
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            FnpVerdict::Holds => None,
            FnpVerdict::Violated(c) => Some(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub pe: PeVerdict,
    pub fnp: FnpVerdict,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.pe.holds() && self.fnp.holds()
    }

    pub fn to_json(&self, g: &Graph, kind: PreferenceKind) -> Value {
        let pe = match &self.pe {
            PeVerdict::Holds => json!("holds"),
            PeVerdict::Violated {
                occ,
                outcome,
                dominator,
            } => json!({
                "occ": labels(g, occ.bits()),
                "outcome": g.label(*outcome),
                "dominator": g.label(*dominator),
            }),
        };
        let fnp = match &self.fnp {
            FnpVerdict::Holds => json!("holds"),
            FnpVerdict::Violated(c) => c.to_json(g, kind),
        };
        json!({ "pe": pe, "fnp": fnp })
    }
}

fn labels(g: &Graph, bits: u64) -> Vec<String> {
    BitIter(bits).map(|v| g.label(v).to_string()).collect()
}

fn check_cap(g: &Graph) -> Result<()> {
    if g.n() > VERIFY_CAP {
        Err(Error::GraphTooLarge {
            n: g.n(),
            cap: VERIFY_CAP,
        })
    } else {
        Ok(())
    }
}

/// Both checks with one table materialization.
pub fn verify(g: &Graph, rule: &Rule, kind: PreferenceKind, exec: &Exec) -> Result<Verdict> {
    check_cap(g)?;
    let table = as_table(g, rule)?;
    let prefs = PrefTable::new(g, kind);
    Ok(Verdict {
        pe: pe_on_table(g, &table, &prefs, exec),
        fnp: fnp_on_table(g, rule, &table, &prefs, exec),
    })
}

/// Holds iff the rule picks a Pareto-efficient vertex on every occupied
/// set; otherwise the first failing set in bitmask order and its
/// smallest-id dominator.
pub fn verify_pe(g: &Graph, rule: &Rule, kind: PreferenceKind, exec: &Exec) -> Result<PeVerdict> {
    check_cap(g)?;
    let table = as_table(g, rule)?;
    let prefs = PrefTable::new(g, kind);
    Ok(pe_on_table(g, &table, &prefs, exec))
}

fn pe_on_table(g: &Graph, table: &RuleTable, prefs: &PrefTable, exec: &Exec) -> PeVerdict {
    let found = exec.find_map_first(1..g.full_mask() + 1, |s| {
        let outcome = table.get(OccupiedSet::new(s).unwrap());
        (0..g.n())
            .find(|&x| prefs.dominates(s, x, outcome))
            .map(|dominator| (s, outcome, dominator))
    });
    match found {
        None => PeVerdict::Holds,
        Some((s, outcome, dominator)) => PeVerdict::Violated {
            occ: OccupiedSet::new(s).unwrap(),
            outcome,
            dominator,
        },
    }
}

/// Set-based false-name-proofness check. The certificate comes from the
/// smallest violating `before` in bitmask order, and within it minimizes
/// `|after △ before|`, then manipulator id, then `after` mask.
pub fn verify_fnp_idb(
    g: &Graph,
    rule: &Rule,
    kind: PreferenceKind,
    exec: &Exec,
) -> Result<FnpVerdict> {
    check_cap(g)?;
    let table = as_table(g, rule)?;
    let prefs = PrefTable::new(g, kind);
    Ok(fnp_on_table(g, rule, &table, &prefs, exec))
}

fn fnp_on_table(
    g: &Graph,
    rule: &Rule,
    table: &RuleTable,
    prefs: &PrefTable,
    exec: &Exec,
) -> FnpVerdict {
    let full = g.full_mask();
    let found = exec.find_map_first(1..full + 1, |s| best_deviation(table, prefs, full, s));
    match found {
        None => FnpVerdict::Holds,
        Some((s, v, after)) => {
            let c = Counterexample::new_checked(
                g,
                rule,
                prefs.kind(),
                OccupiedSet::new(s).unwrap(),
                v,
                OccupiedSet::new(after).unwrap(),
            )
            .expect("table and rule agree");
            FnpVerdict::Violated(c)
        }
    }
}

/// Minimal profitable deviation from occupied set `s`, if any.
fn best_deviation(
    table: &RuleTable,
    prefs: &PrefTable,
    full: u64,
    s: u64,
) -> Option<(u64, usize, u64)> {
    let outcome = table.get(OccupiedSet::new(s).unwrap());
    let mut best: Option<(u32, usize, u64)> = None;
    for v in BitIter(s) {
        let better = prefs.better(v, outcome);
        if better == 0 {
            continue;
        }
        let base = s & !(1 << v);
        let free = full & !base;
        // all subsets of `free`, including the empty one
        let mut t = free;
        loop {
            let after = base | t;
            if after != 0 && better >> table.get(OccupiedSet::new(after).unwrap()) & 1 == 1 {
                let key = ((after ^ s).count_ones(), v, after);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
            if t == 0 {
                break;
            }
            t = (t - 1) & free;
        }
    }
    best.map(|(_, v, after)| (s, v, after))
}

/// Every profitable deviation, sorted by `(before, |△|, manipulator,
/// after)`. Intended for small graphs.
pub fn all_counterexamples(
    g: &Graph,
    rule: &Rule,
    kind: PreferenceKind,
) -> Result<Vec<Counterexample>> {
    check_cap(g)?;
    let table = as_table(g, rule)?;
    let prefs = PrefTable::new(g, kind);
    let full = g.full_mask();
    let mut out = Vec::new();
    for s in 1..=full {
        let outcome = table.get(OccupiedSet::new(s).unwrap());
        for v in BitIter(s) {
            let better = prefs.better(v, outcome);
            let base = s & !(1 << v);
            for after in 1..=full {
                if after & base == base
                    && better >> table.get(OccupiedSet::new(after).unwrap()) & 1 == 1
                {
                    out.extend(Counterexample::new_checked(
                        g,
                        rule,
                        kind,
                        OccupiedSet::new(s).unwrap(),
                        v,
                        OccupiedSet::new(after).unwrap(),
                    ));
                }
            }
        }
    }
    out.sort_by_key(|c| (c.before, c.size(), c.manipulator, c.after));
    Ok(out)
}

/// Pairs `(occ, v)` where the outcome survives in `occ \ {v}` but the rule
/// changes its choice after removing `v`. A false-name-proof rule under
/// peaked preferences has none.
pub fn removal_violations(g: &Graph, rule: &Rule) -> Result<Vec<(OccupiedSet, usize)>> {
    check_cap(g)?;
    let table = as_table(g, rule)?;
    let mut out = Vec::new();
    for s in OccupiedSet::enumerate(g) {
        let outcome = table.get(s);
        for v in s.iter() {
            if let Some(rest) = s.without(v) {
                if rest.contains(outcome) && table.get(rest) != outcome {
                    out.push((s, v));
                }
            }
        }
    }
    Ok(out)
}

/// Agent-level manipulation: agent `agent` of the truthful profile reports
/// `report` and adds one fake identity per entry of `fakes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manipulation {
    pub truthful: Vec<usize>,
    pub agent: usize,
    pub report: usize,
    pub fakes: Vec<usize>,
}

impl Manipulation {
    pub fn manipulated(&self) -> Vec<usize> {
        let mut locs: Vec<usize> = self
            .truthful
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.agent)
            .map(|(_, &v)| v)
            .collect();
        locs.push(self.report);
        locs.extend_from_slice(&self.fakes);
        locs.sort_unstable();
        locs
    }

    /// Evaluates the rule on both explicit profiles and reports whether the
    /// manipulating agent strictly gains.
    pub fn is_profitable(&self, g: &Graph, rule: &Rule, kind: PreferenceKind) -> bool {
        let home = self.truthful[self.agent];
        let truthful = Profile::new(&self.truthful, kind).expect("non-empty");
        let deviated = Profile::new(&self.manipulated(), kind).expect("non-empty");
        let before = rule.eval_profile(g, &truthful);
        let after = rule.eval_profile(g, &deviated);
        kind.strictly_prefers(g.dist(home, after), g.dist(home, before))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_agents: usize,
    pub max_fakes: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_agents: 3,
            max_fakes: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteforceVerdict {
    Holds,
    Violated(Manipulation),
}

impl BruteforceVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, BruteforceVerdict::Holds)
    }
}

/// Explicit enumeration of agent multisets of size `1..=max_agents`, every
/// agent, every misreport and every multiset of at most `max_fakes` fake
/// identities. Fewer fakes are tried first, so a pure misreport is found
/// before a fake-identity attack on the same profile.
pub fn verify_fnp_bruteforce(
    g: &Graph,
    rule: &Rule,
    kind: PreferenceKind,
    bounds: Bounds,
) -> Result<BruteforceVerdict> {
    if g.n() > BRUTEFORCE_CAP {
        return Err(Error::BoundsTooLarge(format!(
            "graph has {} vertices, brute force allows {BRUTEFORCE_CAP}",
            g.n()
        )));
    }
    if bounds.max_agents == 0 || bounds.max_agents > 4 || bounds.max_fakes > 4 {
        return Err(Error::BoundsTooLarge(format!(
            "max_agents must be 1..=4 and max_fakes 0..=4, got {} and {}",
            bounds.max_agents, bounds.max_fakes
        )));
    }
    let n = g.n();
    for agents in 1..=bounds.max_agents {
        for truthful in multisets(n, agents) {
            for agent in 0..agents {
                // agents sharing a location are interchangeable
                if agent > 0 && truthful[agent] == truthful[agent - 1] {
                    continue;
                }
                for fake_count in 0..=bounds.max_fakes {
                    for fakes in multisets(n, fake_count) {
                        for report in 0..n {
                            let m = Manipulation {
                                truthful: truthful.clone(),
                                agent,
                                report,
                                fakes: fakes.clone(),
                            };
                            if m.is_profitable(g, rule, kind) {
                                return Ok(BruteforceVerdict::Violated(m));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(BruteforceVerdict::Holds)
}

/// Non-decreasing tuples of length `len` over `0..n`, lexicographic.
fn multisets(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(n: usize, len: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(n, len, v, cur, out);
            cur.pop();
        }
    }
    rec(n, len, 0, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use PreferenceKind::*;

    fn occ(v: &[usize]) -> OccupiedSet {
        OccupiedSet::from_vertices(v.iter().copied()).unwrap()
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(multisets(4, 0), vec![Vec::<usize>::new()]);
        assert_eq!(multisets(4, 2).len(), 10);
        assert_eq!(multisets(7, 3).len(), 84);
    }

    #[test]
    fn presets_verify() {
        let exec = Exec::sequential();
        for (k, name) in [
            (4, "c4-peaked"),
            (5, "c5-peaked"),
            (4, "c4-dipped"),
            (5, "c5-dipped"),
        ] {
            let g = Graph::cycle(k).unwrap();
            let rule = Rule::preset(name, &g).unwrap();
            let kind = if name.ends_with("peaked") {
                Peaked
            } else {
                Dipped
            };
            let v = verify(&g, &rule, kind, &exec).unwrap();
            assert!(v.holds(), "{name}: {v:?}");
        }
    }

    #[test]
    fn constant_rule_is_not_efficient() {
        let c6 = Graph::cycle(6).unwrap();
        let rule = Rule::Table(RuleTable::from_fn(&c6, Peaked, |_| 0).unwrap());
        let v = verify_pe(&c6, &rule, Peaked, &Exec::sequential()).unwrap();
        assert_eq!(
            v,
            PeVerdict::Violated {
                occ: occ(&[1]),
                outcome: 0,
                dominator: 1
            }
        );
        // the agent alone at v4 is another witness
        let prefs = PrefTable::new(&c6, Peaked);
        assert!(prefs.dominates(occ(&[3]).bits(), 3, 0));
    }

    #[test]
    fn example_one_order_is_manipulable() {
        let c5 = Graph::cycle(5).unwrap();
        let rule = Rule::sequential_pareto(&c5, vec![0, 1, 2, 3, 4], Peaked).unwrap();
        let FnpVerdict::Violated(c) =
            verify_fnp_idb(&c5, &rule, Peaked, &Exec::sequential()).unwrap()
        else {
            panic!("expected a violation");
        };
        assert!(c.is_valid(&c5, &rule, Peaked));
        assert_eq!(c.manipulator, 4);
        assert_eq!((c.dist_before, c.dist_after), (2, 1));

        let misreport =
            Counterexample::new_checked(&c5, &rule, Peaked, occ(&[2, 3, 4]), 4, occ(&[0, 2, 3]))
                .expect("reporting v1 from v5 pays off");
        assert_eq!((misreport.outcome_before, misreport.outcome_after), (2, 0));
        assert_eq!(misreport.gain(Peaked), 1);
        let m = misreport.to_manipulation();
        assert_eq!(m.truthful, vec![2, 3, 4]);
        assert_eq!(m.report, 0);
        assert!(m.fakes.is_empty());
        assert!(m.is_profitable(&c5, &rule, Peaked));
    }

    #[test]
    fn certificate_is_minimal() {
        let c5 = Graph::cycle(5).unwrap();
        let rule = Rule::sequential_pareto(&c5, vec![0, 1, 2, 3, 4], Peaked).unwrap();
        let all = all_counterexamples(&c5, &rule, Peaked).unwrap();
        assert_eq!(all.len(), 15);
        let c = verify_fnp_idb(&c5, &rule, Peaked, &Exec::sequential())
            .unwrap()
            .counterexample()
            .cloned()
            .unwrap();
        assert_eq!(&c, &all[0]);
        for v in BitIter(c.added()) {
            let smaller = OccupiedSet::new(c.after.bits() & !(1 << v)).unwrap();
            assert!(Counterexample::new_checked(
                &c5,
                &rule,
                Peaked,
                c.before,
                c.manipulator,
                smaller
            )
            .is_none());
        }
    }

    #[test]
    fn bruteforce_bounds() {
        let g = Graph::cycle(8).unwrap();
        let rule = Rule::sequential_pareto(&g, (0..8).collect(), Peaked).unwrap();
        assert!(matches!(
            verify_fnp_bruteforce(&g, &rule, Peaked, Bounds::default()),
            Err(Error::BoundsTooLarge(_))
        ));
        let g = Graph::cycle(4).unwrap();
        let rule = Rule::preset("c4-peaked", &g).unwrap();
        assert!(verify_fnp_bruteforce(
            &g,
            &rule,
            Peaked,
            Bounds {
                max_agents: 5,
                max_fakes: 0
            }
        )
        .is_err());
        assert!(verify_fnp_bruteforce(&g, &rule, Peaked, Bounds::default())
            .unwrap()
            .holds());
    }

    #[test]
    fn single_vertex_graph() {
        let g = Graph::path(1).unwrap();
        let rule = Rule::target(&g, 0).unwrap();
        assert!(verify_fnp_bruteforce(&g, &rule, Peaked, Bounds::default())
            .unwrap()
            .holds());
        assert!(verify(&g, &rule, Peaked, &Exec::sequential())
            .unwrap()
            .holds());
    }

    #[test]
    fn longest_path_rule_on_branching_tree() {
        let t = crate::prove::instances::pendant_tree();
        let rule = Rule::longest_path(&t).unwrap();
        assert!(verify(&t, &rule, Dipped, &Exec::sequential())
            .unwrap()
            .holds());
    }
}
