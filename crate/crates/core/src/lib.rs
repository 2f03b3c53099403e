pub mod classify;
pub mod error;
pub mod expr;
pub mod frame;
pub mod invariants;
pub mod manifold;
pub mod normalize;

pub use error::{Error, Result};
