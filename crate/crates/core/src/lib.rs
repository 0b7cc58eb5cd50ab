//! Clue capture, classification, tag retrieval and interpretation graphs
//! for game story analysis.

pub mod capture;
pub mod model;
pub mod classify;
pub mod retrieval;
pub mod graph;
pub mod store;
pub mod config;
pub mod service;
pub mod cli;
