//! Symbolic engine for the functional Borel hierarchy: set and function
//! codes, the standard constructions on them, and extension of `K_α`
//! mappings from subspaces.

pub mod class;
pub mod construct;
pub mod dsl;
pub mod error;
pub mod extend;
pub mod func;
pub mod num;
pub mod oracle;
pub mod point;
pub mod report;
pub mod sample;
pub mod set;
pub mod space;

pub use class::{ClassTag, Kind};
pub use error::{Error, Result};
pub use num::{Rational, Surd};
pub use point::{CantorPoint, Point};
pub use set::{classify, member, SetExpr};
