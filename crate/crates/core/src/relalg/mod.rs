//! Relational-algebra AST, static description, canonical form and the
//! native evaluator.

mod canonical;
mod describe;
mod eval;
mod expr;

pub use canonical::{canonicalize, CanonicalQuery};
pub use describe::describe;
pub use eval::{evaluate, evaluate_described};
pub use expr::{
    AggFn, ArithOp, CmpOp, ColumnInfo, JoinCondition, JoinKind, Lineage, MeasureType, Predicate, ProjectItem,
    QueryExpr, ScalarExpr, Translation,
};
