//! Composition, decomposition and comparison of aggregation views.
//!
//! A view pairs a group-by aggregation query with a visual mapping. Views
//! compose statistically (`⊖`, `⊕`, ...) and by union, decompose by
//! extraction and explosion, and lift into per-group linear models. Every
//! composed view is again a relational query, which [`sqlgen::emit_sql`]
//! turns into SQL.
//!
//! Start with `examples/flights_difference.rs`.

pub mod compose;
pub mod dsl;
pub mod error;
pub mod modelview;
pub mod relalg;
pub mod relcore;
pub mod safety;
pub mod session;
pub mod sqlgen;
pub mod value;

pub use compose::{ChartSpec, ComposeOptions, Env, MarkType, View, ViewDef, ViewSet, VisualMapping};
pub use error::{Result, VcaError};
pub use modelview::{ModelView, Sampling};
pub use relalg::{AggFn, ArithOp, Predicate, QueryExpr};
pub use relcore::{Database, Hierarchy, Table};
pub use safety::{SafetyVerdict, Status};
pub use value::{DataType, Value};
