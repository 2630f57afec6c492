//! Exact symbolic toolkit for bi-Hamiltonian structures of KdV type:
//! jet-space differential calculus, matrix differential operators,
//! flat-pencil geometry, Schouten-bracket compatibility, the catalog of
//! canonical operators and metric families with their varieties and pencil
//! tables, Casimir-generated flows, and central invariants of deformed
//! pencils.

pub mod catalog;
pub mod diffop;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod hierarchy;
pub mod invariants;
pub mod jet;
pub mod linalg;
pub mod poisson;
pub mod poly;
pub mod rat;
pub mod sym;
pub mod text;

pub use error::{Error, Result};
pub use expr::Expr;
pub use sym::{JetCtx, Symbol, Var};
