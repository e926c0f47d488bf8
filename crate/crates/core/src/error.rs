use thiserror::Error;

use crate::dsl::{Span, SyntaxError};
use crate::safety::SafetyVerdict;

pub type Result<T, E = VcaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum VcaError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed csv at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },

    #[error("ambiguous measure: candidates {0:?}; supply a role hint")]
    AmbiguousMeasure(Vec<String>),

    #[error("table {table} has no measure attribute")]
    NoMeasure { table: String },

    #[error("null value in base table {table}, column {column}, row {row}")]
    NullValue { table: String, column: String, row: usize },

    #[error("hierarchy contains a cycle through {0:?}")]
    CycleDetected(Vec<String>),

    #[error("unknown attribute {0}")]
    UnknownAttribute(String),

    #[error("no functional dependency path from {from} to {to}")]
    NoPath { from: String, to: String },

    #[error("functional dependency {fine} -> {coarse} violated: {value} maps to {coarse_values:?}")]
    FdViolated { fine: String, coarse: String, value: String, coarse_values: Vec<String> },

    #[error("unknown table {0}")]
    UnknownTable(String),

    #[error("unknown column {column} in {context}")]
    UnknownColumn { column: String, context: String },

    #[error("duplicate column {0}")]
    DuplicateColumn(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("type error: {0}")]
    TypeError(String),

    #[error("query is not in canonical form: {0}")]
    NonCanonical(String),

    #[error("view {0} does not have a canonical query")]
    NonCanonicalView(String),

    #[error("unknown aggregate {0}")]
    UnknownAggregate(String),

    #[error("unknown operator {0}")]
    UnknownOp(String),

    #[error("unsafe composition ({}): {}", .0.status, .0.reasons.join("; "))]
    UnsafeComposition(Box<SafetyVerdict>),

    #[error("invalid visual mapping: {0}")]
    InvalidMapping(String),

    #[error("no free visual attribute for qid (color, shape, size and detail are mapped)")]
    NoFreeVisualAttr,

    #[error("{0} is not a grouping attribute of the view")]
    NotAGroupingAttr(String),

    #[error("predicate type error: {0}")]
    PredicateTypeError(String),

    #[error("feature attribute {0} is not quantitative")]
    NonQuantitativeFeature(String),

    #[error("group {group} has {rows} rows, needs at least {needed}")]
    InsufficientRows { group: String, rows: usize, needed: usize },

    #[error("normal equations are singular for group {0}")]
    SingularFit(String),

    #[error("empty sampling domain for {0}")]
    EmptyDomain(String),

    #[error("model view has no fitted groups")]
    NoFittedGroups,

    #[error("viewset is empty")]
    EmptyViewSet,

    #[error("unsupported construct: {0}")]
    UnsupportedConstruct(String),

    #[error(transparent)]
    Syntax(#[from] SyntaxError),

    #[error("name {0} is already taken")]
    DuplicateName(String),

    #[error("unbound view {0}")]
    UnboundView(String),

    #[error("viewset member {index}: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<VcaError>,
    },

    #[error("{source} (at {span})")]
    At {
        span: Span,
        #[source]
        source: Box<VcaError>,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl VcaError {
    /// Strip `At` / `Member` wrappers.
    pub fn root(&self) -> &VcaError {
        match self {
            VcaError::At { source, .. } | VcaError::Member { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn verdict(&self) -> Option<&SafetyVerdict> {
        match self.root() {
            VcaError::UnsafeComposition(v) => Some(v),
            _ => None,
        }
    }
}
