//! Randomly switched vector fields: the defective linear pair and the
//! logistic pair on the trapping interval `[1, 2]`.

mod linear;
mod logistic;

pub use linear::*;
pub use logistic::*;
