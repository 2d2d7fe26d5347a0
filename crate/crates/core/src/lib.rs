pub mod channel;
pub mod density_evolution;
pub mod error;
pub mod harness;
pub mod ldpc;
pub mod multidim;
pub mod outer;
pub mod reconcile;
pub mod security;

pub use error::{Error, Result};
