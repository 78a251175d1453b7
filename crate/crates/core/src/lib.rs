//! Discovery of decision requirement diagrams and decision logic from
//! data-aware object-centric event logs.

pub mod docel;
pub mod shift;
pub mod ml;
pub mod discovery;
pub mod generate;
pub mod export;
