pub mod error;
pub mod hydro;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod polytopic;
pub mod reformulate;
pub mod solve;

pub use error::{Error, Result};
