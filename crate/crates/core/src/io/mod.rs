//! Reading, writing and generating problem data: Solomon-style VRPTW
//! layouts, derivation of full instances from them, the native instance
//! text format, and solution files.

pub mod format;
pub mod generator;
pub mod solomon;
pub mod solution_io;
