//! Superposed squeezed and displaced number states, compass states and their
//! phase-space sensitivity, computed in a truncated Fock space.

pub mod error;
pub mod fock;
pub mod hermite;
pub mod metrology;
pub mod phase_space;
pub mod preparation;
pub mod states;
pub mod table;

pub use error::{Error, Result};
pub use fock::{FockVector, OperatorMatrix, TruncationPolicy};
pub use num_complex::Complex64 as C64;
pub use states::{Sign, StateSpec};
pub use table::{Cell, Table};
