// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod idempotent;
pub mod json;
pub mod linalg;
pub mod norm;
pub mod poly;
pub mod pick;
pub mod presentation;
pub mod repsearch;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use poly::{MultiPoly, RationalFn, RationalMatrix};
pub use presentation::{preset, Presentation, PresetParams};
