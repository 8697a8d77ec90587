//! Discrete martingale-difference systems on `[0, 1)` with exact rational
//! data, the Chang–Wilson–Wolff square function, sharp Khintchine-type
//! constants, the transforms that push a system towards Haar and Rademacher
//! form without decreasing `||sum d_k||_p / ||S(d)||_inf`, and numerical
//! oracles and searches around those constants.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod generators;
pub mod json;
pub mod lemmas;
pub mod measure;
pub mod norms;
pub mod rational;
pub mod search;
pub mod special;
pub mod square;
pub mod suites;
pub mod system;
pub mod transforms;

pub use error::{Error, Result};
pub use measure::{AtomGrid, CellLabeling, StepFunction};
pub use rational::Rational;
pub use system::{MdSystem, ValidationReport, Violation, ViolationKind};
