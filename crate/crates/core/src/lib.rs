//! Simulation laboratory for systemic cyber risk on networks.
//!
//! Random graphs and fixtures ([`graph`]), centralities ([`centrality`]),
//! SIR contagion ([`epidemic`]), the security investment game
//! ([`secgame`]), budget allocation ([`allocate`]) and topology
//! interventions with risk allocation ([`topoctl`]).

pub mod allocate;
pub mod centrality;
pub mod epidemic;
pub mod error;
pub mod graph;
pub mod rng;
pub mod secgame;
pub mod topoctl;

pub use error::{Error, Result};
