//! Deciding simultaneous unboundedness of higher-order recursion schemes.
//!
//! The pipeline: parse a scheme, run a flow analysis over rule bodies,
//! saturate a table of productivity-flagged intersection types for the
//! nonterminals, build the derivation graph, and answer UNBOUNDED /
//! BOUNDED / UNKNOWN by searching for a reachable cycle that is productive
//! in every important letter. An independent oracle (finite expansion of
//! the generated tree plus a naive full-enumeration saturator) cross-checks
//! the engine.

pub mod corpus;
pub mod flow;
pub mod oracle;
pub mod parser;
pub mod report;
pub mod saturation;
pub mod scheme;
pub mod sort;
pub mod term;
pub mod types;
pub mod typing;
pub mod verdict;

pub use parser::{letters_for, parse_scheme, ParseError};
pub use scheme::{scheme_is_homogeneous, scheme_is_safe, Scheme, SchemeBuilder};
pub use verdict::{analyze, Analysis, Outcome, Verdict};
