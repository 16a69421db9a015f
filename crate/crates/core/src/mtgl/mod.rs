//! Metric temporal graph conditions: syntax, parsing and static analysis.

mod analysis;
mod ast;
mod parse;

pub use analysis::{cutoff, cutoff_all, future_horizon};
pub use ast::{CompiledQuery, Cond, Mtgc, OpInterval, Query, QueryFile};
pub use parse::{parse, parse_condition, render, render_condition, ParseError};
