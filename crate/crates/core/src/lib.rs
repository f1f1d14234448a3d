pub mod align;
pub mod confmat;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod simulate;
pub mod synthetic;
pub mod wfst;

pub use error::{Error, ErrorCategory, Result};
