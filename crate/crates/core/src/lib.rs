//! Linguistic geometries over a vocabulary: build word-similarity transforms,
//! apply them to term-frequency vectors, reduce documents to the plane and
//! score how well the resulting picture separates labeled groups.

pub mod corpus;
pub mod diffusion;
pub mod error;
pub mod evaluate;
pub mod geometry;
pub mod matrix;
pub mod pipeline;
pub mod reduce;
pub mod stem;
pub mod synth;
pub mod taxonomy;

pub use error::{Error, Result};
