pub mod data;
pub mod error;
pub mod evaluation;
pub mod forest;
pub mod imputation;
pub mod instruments;
pub mod labeling;
pub mod linalg;
pub mod logit;
pub mod matrix;
pub mod pipeline;
pub mod schema;
pub mod selection;
pub mod stats;
pub mod rng;

pub use error::{Error, Result};
