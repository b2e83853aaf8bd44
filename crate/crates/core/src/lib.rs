//! Extract-method refactoring analysis for MIMPL programs.

pub mod lang;
pub mod facts;
pub mod graphs;
pub mod error;
pub mod regions;
pub mod analysis;
pub mod outputs;
pub mod slicer;
pub mod interp;
pub mod extract;
pub mod rules;
pub mod suggest;
pub mod metrics;
pub mod eval;
pub mod cli;
