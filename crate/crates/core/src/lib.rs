pub mod app;
pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod pipeline;
pub mod recommender;
pub mod synth;
pub mod textprep;
pub mod topics;

pub use error::{Error, Result};
