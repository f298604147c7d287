//! Dataset files, generation, scoring and the command line on top of
//! `polyproof-core`.

pub mod cli;
pub mod evaluate;
pub mod generate;
pub mod records;
pub mod schedule;
pub mod settings;
