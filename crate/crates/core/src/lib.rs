pub mod classical;
pub mod coherent;
pub mod error;
pub mod geometry;
pub mod ode;
pub mod operator;
pub mod oracle;
pub mod quantum;
pub mod state;
pub mod verification;

pub use error::{Error, Result};
