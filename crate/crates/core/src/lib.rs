//! Exact solver toolkit for simple assembly line balancing (SALBP-1) and
//! its task-division extension (TDALBP): instance modeling, graph
//! expansion, combinatorial lower bounds, a constructive heuristic, a
//! branch-bound-and-remember search, a brute-force oracle, an LP-format
//! model exporter and instance generators.

pub mod bounds;
pub mod expand;
pub mod instance;
pub mod io;
pub mod oracle;
pub mod solution;

#[cfg(test)]
pub(crate) mod testdata;
pub mod hoffmann;
pub mod solver;
pub(crate) mod search;
