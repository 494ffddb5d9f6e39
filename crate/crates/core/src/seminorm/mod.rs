//! Seminorm expressions and the Lip-norm machinery built on them.

mod lip;
mod spec;

pub use lip::*;
pub use spec::*;
