pub mod anonymise;
pub mod corpus;
pub mod entities;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod forest;
pub mod labels;
pub mod lexica;
pub mod metrics;
pub mod pipeline;
pub mod synth;
pub mod text;
pub mod tree;

pub use error::{Error, Result};
