//! Temporal generalized discrimination networks.

mod exec;
mod network;
mod report;
pub mod rules;

pub use exec::{Binding, Engine, EngineError, Marking, MarkingState};
pub use network::{Dependency, GdnNetwork, GdnNode, NodeId, NodeKind, Role, Src};
pub use report::{classify_matches, definite_part, Classification, Classified, MatchEntry, MatchReport};

#[cfg(test)]
mod tests;
