//! Symbolic and numeric verification of exact solutions in general
//! relativity built from null fields.

pub mod catalog;
pub mod expr;
pub mod fd;
pub mod fields;
pub mod geometry;
pub mod report;
pub mod transport;
pub mod verify;

pub use expr::{
    is_probably_zero, parse, Chart, Differentiator, EvalError, EvalPoint, Expr, Func, HalfSpace,
    Node, Number, ParseError, SampleBox, SampleBoxError, Tape, Var, ZeroTest,
};
pub use report::{CheckReport, Status};
