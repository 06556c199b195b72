//! Verification and synthesis of false-name-proof, Pareto-efficient
//! facility-location rules on discrete graphs.
//!
//! * [`graph`]: location spaces and distance-preserving embeddings
//! * [`prefs`]: single-peaked / single-dipped preferences, Pareto sets
//! * [`rules`]: sequential Pareto, target and longest-path rules, tables
//! * [`verify`]: certificate-producing property checks
//! * [`prove`]: exhaustive existence search and embedding reductions
//! * [`cli`]: the `fnpw` command-line front end

pub mod cli;
pub mod error;
pub mod exec;
pub mod graph;
pub mod prefs;
pub mod prove;
pub mod rules;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
pub use graph::{find_dp_embedding, Embedding, Graph, GraphSpec};
pub use prefs::{
    compare, pareto_dominates, pe_set, OccupiedSet, Preference, PreferenceKind, Profile,
};
pub use rules::{as_table, Rule, RuleSpec, RuleTable};
