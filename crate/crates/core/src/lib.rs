//! Exact relative sectional category of cospans of finite T0 spaces.

pub mod bits;
pub mod certificate;
pub mod cohomology;
pub mod engine;
pub mod error;
pub mod homotopy;
pub mod instance;
pub mod invariants;
pub mod poset;
pub mod propcheck;

pub use bits::BitSet;
pub use engine::{Bracket, Cospan, Engine, EngineConfig, InvariantValue, Mode, Value};
pub use error::{Error, Result};
pub use poset::{FiniteSpace, PosetMap, Subset};
