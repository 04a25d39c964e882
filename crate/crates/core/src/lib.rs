//! Solver for the technician routing and scheduling problem: multi-depot
//! routing with skills, tools, spare-part inventories and a single central
//! replenishment depot, minimizing total route duration.
//!
//! The crate provides the problem model, an O(1) move-evaluation kernel
//! built on concatenable segment summaries, classical removal/repair and
//! local-search operators, and an iterated local search driver with an
//! elite solution pool. Instance generation from Solomon-style layouts,
//! text serialization and a benchmark harness live in [`io`] and [`bench`].

pub mod audit;
pub mod bench;
pub mod construct;
pub mod error;
pub mod eval;
pub mod io;
pub mod meta;
pub mod model;
pub mod route;
pub mod search;
pub mod solution;

pub use error::{Result, TrspError};
