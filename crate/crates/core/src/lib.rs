pub mod abc;
pub mod coreset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod measure;
pub mod partition;
pub mod prior;
pub mod transport;
pub mod urn;

pub use error::{Error, Result};
