//! Numerics for variable-exponent Lebesgue spaces on [0, 1].
//!
//! Quantities such as `e^{-e^{40}}` are carried as [`LogReal`]s, deep points
//! as structural [`Point`]s, and the verification suites report per-k series.

pub mod error;
pub mod exponents;
pub mod integrate;
pub mod logscale;
pub mod operators;
pub mod oscillation;
pub mod report;
pub mod sequences;
pub mod verify;
pub mod vexnorm;

pub use error::{Result, VexError};
pub use exponents::ExponentSpec;
pub use integrate::{Interval, Point, QuadratureResult, Side};
pub use logscale::{LogReal, Rational};
pub use report::{Row, SeriesReport};
