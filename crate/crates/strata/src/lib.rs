//! Level graphs, boundary strata and tautological classes of generalised
//! strata of meromorphic differentials.

pub mod bic_generation;
pub mod canonical;
pub mod clutch_split;
pub mod degeneration_graph;
pub mod embedded_graph;
pub mod error;
pub mod euler;
pub mod evaluation_cache;
pub mod level_graph;
pub mod strata_core;
pub mod taut_ring;

pub use embedded_graph::{EmbeddedLevelGraph, LevelStratum};
pub use error::{Result, StrataError};
pub use level_graph::{Leg, LevelGraph};
pub use strata_core::{GeneralisedStratum, PointRef, ResidueCondition, Signature, StratumData};
