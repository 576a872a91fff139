pub mod assembly;
pub mod companion;
pub mod counting;
pub mod densela;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod oracles;
pub mod synthetic;

pub use error::{Error, Result};
