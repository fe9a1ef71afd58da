//! Expression language and complex-matrix kernel shared by every deterministic check.
//!
//! The grammar is documented in `docs/expr-grammar.md`.

mod ast;
mod dimension;
mod eigen;
mod eval;
mod matrix;
mod parse;

use thiserror::Error;

pub use ast::{BinOp, Constant, Expr, Func};
pub use dimension::{infer_dimension, BaseQuantity, Dimension, DimensionError};
pub use eigen::{hermitian_eigen, hermitian_eigenvalues, jacobi_symmetric, HermitianEigen, MAX_DIMENSION};
pub use eval::{equiv_probe, eval_expr, Bindings, ProbeConfig, HBAR_KEY};
pub use matrix::{format_complex, ComplexMatrix, LinalgError};
pub use parse::parse_expr;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
}
