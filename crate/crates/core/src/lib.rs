//! Optimal scheduling of task graphs with communication delays on identical
//! processors, by best-first search over two state spaces.
//!
//! * [`els`]: exhaustive list scheduling, placing one ready task at a time.
//! * [`ao`]: allocation then ordering, which never produces duplicate states.
//!
//! [`solver::solve`] picks a model, seeds an upper bound and returns a
//! validated [`schedule::Schedule`].

pub mod ao;
pub mod cli;
pub mod els;
pub mod generator;
pub mod graph;
pub mod oracle;
pub mod schedule;
pub mod search;
pub mod solver;
