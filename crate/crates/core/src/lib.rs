//! Single-assignment multi-level facility location: instance model, random
//! instance generator, k-flip neighborhoods, variable neighborhood descent
//! variants and the nonparametric tests used to compare them.

pub mod generator;
pub mod model;
pub mod neighborhoods;
pub mod seeding;
pub mod vnd;
pub mod stats;
pub mod experiment;
pub mod cli;
