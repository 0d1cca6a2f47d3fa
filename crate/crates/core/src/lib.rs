//! Word ordering as constrained sequence generation.

pub mod cli;
pub mod constraint_tree;
pub mod decoder;
pub mod dep_linearizer;
pub mod evalkit;
pub mod pipeline;
pub mod probe;
pub mod rng;
pub mod scorers;
pub mod textprep;
