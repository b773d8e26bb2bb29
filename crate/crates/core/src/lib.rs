//! Compiles a SQL subset into PLONKish circuits, generates witnesses from a
//! private database and checks constraint satisfaction.

pub mod circuit;
pub mod commitment;
pub mod compile;
mod error;
pub mod field;
pub mod data;
pub mod gadgets;
pub mod gates;
pub mod pipeline;
pub mod reference;
pub mod report;
pub mod sql;
pub mod tpch;
pub mod witness;

pub use error::{Error, Result};

/// The scalar field used throughout the pipeline.
pub use field::Fr;
