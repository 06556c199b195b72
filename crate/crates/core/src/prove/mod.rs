//! Existence engine: exhaustive search over all duplicate-ignoring rule
//! tables that are Pareto efficient and false-name-proof, plus impossibility
//! transfer through distance-preserving embeddings (peaked preferences).

pub mod instances;
pub mod report;
pub mod solver;

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{find_dp_embedding, vertex_orbits, Embedding, Graph, GraphSpec};
use crate::prefs::PreferenceKind;
use crate::rules::{Rule, RuleTable};
use crate::verify::{verify, Verdict};

use solver::{Decision, Limits, Outcome, Problem, Search};
pub use solver::{Direction, Propagation, SearchOrder, Stats, PROVER_CAP};

/// Largest graph for which enumeration of all witnesses is allowed.
pub const ENUMERATION_CAP: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Sat(RuleTable),
    Unsat,
    Timeout(Duration),
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Sat(_) => "sat",
            Status::Unsat => "unsat",
            Status::Timeout(_) => "timeout",
        }
    }

    pub fn is_sat(&self) -> bool {
        matches!(self, Status::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, Status::Unsat)
    }
}

#[derive(Debug, Clone)]
pub struct ProverResult {
    pub status: Status,
    pub stats: Stats,
    pub elapsed: Duration,
    /// Witnesses collected in enumeration mode, in search order.
    pub solutions: Vec<RuleTable>,
    /// True when enumeration stopped at its limit before exhausting.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct ProveOptions {
    pub timeout: Option<Duration>,
    /// Restrict `f(V)` to one vertex per automorphism orbit.
    pub symmetry_breaking: bool,
    pub propagation: Propagation,
    pub order: SearchOrder,
    /// Allowed values for `f(V)`, as a vertex mask.
    pub root_values: Option<u64>,
    /// Collect up to this many witnesses instead of stopping at the first.
    pub enumerate: Option<usize>,
}

impl Default for ProveOptions {
    fn default() -> Self {
        ProveOptions {
            timeout: Some(Duration::from_secs(300)),
            symmetry_breaking: true,
            propagation: Propagation::ForwardChecking,
            order: SearchOrder::default(),
            root_values: None,
            enumerate: None,
        }
    }
}

fn decode(dom: &[u64], g: &Graph, kind: PreferenceKind) -> RuleTable {
    let entries = dom
        .iter()
        .enumerate()
        .map(|(i, &d)| if i == 0 { 0 } else { d.trailing_zeros() as u8 })
        .collect();
    RuleTable::from_entries(g, kind, entries).expect("complete assignment")
}

/// Searches for a false-name-proof, Pareto-efficient rule table on `g`.
/// `Unsat` is only reported after the search space is exhausted.
pub fn prove_existence(
    g: &Graph,
    kind: PreferenceKind,
    opts: &ProveOptions,
    exec: &Exec,
) -> Result<ProverResult> {
    if g.n() > PROVER_CAP {
        return Err(Error::GraphTooLarge {
            n: g.n(),
            cap: PROVER_CAP,
        });
    }
    if opts.enumerate.is_some() && g.n() > ENUMERATION_CAP {
        return Err(Error::GraphTooLarge {
            n: g.n(),
            cap: ENUMERATION_CAP,
        });
    }
    let start = Instant::now();
    let deadline = opts.timeout.map(|t| start + t);
    let problem = Problem::new(g, kind);
    let full = g.full_mask();

    let mut root = full;
    if let Some(allowed) = opts.root_values {
        root &= allowed;
    }
    if opts.symmetry_breaking && opts.enumerate.is_none() {
        root &= vertex_orbits(g)
            .iter()
            .fold(0, |m, orbit| m | 1 << orbit[0]);
    }

    let fresh = || {
        let mut s = Search::new(&problem);
        s.propagation = opts.propagation;
        s.order = opts.order;
        let ok = s.restrict(full, root);
        (s, ok)
    };

    let timed_out = AtomicBool::new(false);
    let finish = |status: Status, stats: Stats, solutions: Vec<RuleTable>, truncated: bool| {
        if let Status::Sat(t) = &status {
            let verdict = verify(g, &Rule::Table(t.clone()), kind, &Exec::sequential())
                .expect("witness within verification cap");
            assert!(
                verdict.holds(),
                "prover witness failed verification: {verdict:?}"
            );
        }
        ProverResult {
            status,
            stats,
            elapsed: start.elapsed(),
            solutions,
            truncated,
        }
    };

    if let Some(limit) = opts.enumerate {
        let (mut s, ok) = fresh();
        let mut solutions = Vec::new();
        let mut truncated = false;
        if ok {
            let limits = Limits {
                deadline,
                cancel: None,
                timed_out: &timed_out,
            };
            s.run(&limits, &mut |dom| {
                if solutions.len() == limit {
                    truncated = true;
                    return true;
                }
                solutions.push(decode(dom, g, kind));
                false
            });
        }
        let status = if let Some(first) = solutions.first() {
            Status::Sat(first.clone())
        } else if timed_out.load(Ordering::Relaxed) {
            Status::Timeout(start.elapsed())
        } else {
            Status::Unsat
        };
        return Ok(finish(status, s.stats, solutions, truncated));
    }

    let (mut splitter, ok) = fresh();
    if !ok {
        return Ok(finish(Status::Unsat, splitter.stats, Vec::new(), false));
    }
    let subproblems = split(&mut splitter, exec.jobs());
    let mut stats = splitter.stats;

    // Lowest-index satisfiable subproblem wins, which is the first witness of
    // a plain depth-first search whatever the worker count.
    let best = AtomicUsize::new(usize::MAX);
    let results = {
        let indexed: Vec<(usize, &Vec<Decision>)> = subproblems.iter().enumerate().collect();
        exec.map(&indexed, |&(idx, path)| {
            if best.load(Ordering::Relaxed) < idx {
                return (Outcome::Stopped, None, Stats::default());
            }
            let (mut s, _) = fresh();
            if !s.replay(path) {
                return (Outcome::Exhausted, None, s.stats);
            }
            let cancel = || best.load(Ordering::Relaxed) < idx;
            let limits = Limits {
                deadline,
                cancel: Some(&cancel),
                timed_out: &timed_out,
            };
            let mut witness = None;
            let outcome = s.run(&limits, &mut |dom| {
                witness = Some(decode(dom, g, kind));
                true
            });
            if outcome == Outcome::Sat {
                best.fetch_min(idx, Ordering::Relaxed);
            }
            (outcome, witness, s.stats)
        })
    };
    let mut witness = None;
    let mut stopped = false;
    for (outcome, w, st) in results {
        stats += st;
        match outcome {
            Outcome::Sat if witness.is_none() => witness = w,
            Outcome::Stopped if witness.is_none() => stopped = true,
            _ => {}
        }
    }
    let status = match witness {
        Some(t) => Status::Sat(t),
        None if stopped || timed_out.load(Ordering::Relaxed) => Status::Timeout(start.elapsed()),
        None => Status::Unsat,
    };
    Ok(finish(status, stats, Vec::new(), false))
}

/// Cuts the tree deep enough to give every worker several subtrees.
fn split(s: &mut Search<'_>, jobs: usize) -> Vec<Vec<Decision>> {
    if jobs <= 1 {
        return vec![Vec::new()];
    }
    let want = 8 * jobs;
    let mut depth = 1;
    loop {
        let f = s.frontier(depth);
        if f.len() >= want || depth >= 24 || f.is_empty() {
            return f;
        }
        depth += 1;
    }
}

/// Verifies a rule and wraps the verdict.
pub fn check_rule(g: &Graph, rule: &Rule, kind: PreferenceKind, exec: &Exec) -> Result<Verdict> {
    verify(g, rule, kind, exec)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reduction {
    UnsatByReduction {
        pattern: GraphSpec,
        embedding: Embedding,
    },
    Inconclusive,
}

/// Patterns known to admit no false-name-proof, Pareto-efficient rule
/// under peaked preferences.
pub fn unsat_patterns() -> Vec<GraphSpec> {
    let mut out: Vec<GraphSpec> = (6..=9).map(|k| GraphSpec::Cycle { k }).collect();
    out.push(GraphSpec::Hypergrid { dims: vec![3, 3] });
    out
}

/// Looks for a known-impossible pattern inside `host` as a
/// distance-preserving induced subgraph. Only sound for peaked preferences.
pub fn prove_via_embedding(host: &Graph, kind: PreferenceKind) -> Result<Reduction> {
    if kind != PreferenceKind::Peaked {
        return Err(Error::InvalidSpec(
            "embedding reduction only transfers impossibility for peaked preferences".into(),
        ));
    }
    for spec in unsat_patterns() {
        let pattern = spec.build()?;
        if pattern.n() > host.n() {
            continue;
        }
        if let Some(embedding) = find_dp_embedding(&pattern, host) {
            return Ok(Reduction::UnsatByReduction {
                pattern: spec,
                embedding,
            });
        }
    }
    Ok(Reduction::Inconclusive)
}
