//! A small textual language for naming views and composing them.
//!
//! ```text
//! SFO - OAK
//! union(explode(ALL, src))
//! compose(daily, monthly, op="-", reagg=sum)
//! lift(extract(ALL, src = 'SFO'), linear, [date], [])
//! ```
//!
//! The full grammar is in `docs/grammar.ebnf`.

mod eval;
mod lexer;
mod parser;
mod print;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modelview::ModelKind;
use crate::relalg::{AggFn, ArithOp, Predicate};

pub use eval::{eval_expr, eval_str, DslEnv, EvalValue};
pub use parser::{parse, parse_predicate};
pub use print::quote_ident;

/// Byte range plus the 1-based line and column of its start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("syntax error at {line}:{col}: expected {expected}, found {found}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub expected: String,
    pub found: String,
}

/// Options for hierarchy-aware and overridden compositions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierOpts {
    pub reagg: Option<AggFn>,
    #[serde(rename = "override")]
    pub override_: bool,
}

impl HierOpts {
    pub fn is_default(&self) -> bool {
        *self == HierOpts::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ExprKind {
    ViewRef { name: String },
    StatCompose { left: Box<VcaExpr>, right: Box<VcaExpr>, op: ArithOp, opts: HierOpts },
    UnionCompose { left: Box<VcaExpr>, right: Box<VcaExpr>, opts: HierOpts },
    Extract { input: Box<VcaExpr>, pred: Predicate },
    Explode { input: Box<VcaExpr>, attrs: Vec<String> },
    Lift { input: Box<VcaExpr>, model: ModelKind, ad: Vec<String>, ac: Vec<String> },
    ViewsetStat { input: Box<VcaExpr>, agg: AggFn },
    ViewsetUnion { input: Box<VcaExpr> },
    List { items: Vec<VcaExpr> },
}

/// A parsed expression. Equality ignores spans.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VcaExpr {
    pub kind: ExprKind,
    #[serde(default)]
    pub span: Span,
}

impl PartialEq for VcaExpr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl VcaExpr {
    pub fn new(kind: ExprKind) -> Self {
        VcaExpr { kind, span: Span::default() }
    }

    pub fn view(name: impl Into<String>) -> Self {
        VcaExpr::new(ExprKind::ViewRef { name: name.into() })
    }

    pub fn stat(left: VcaExpr, right: VcaExpr, op: ArithOp) -> Self {
        VcaExpr::new(ExprKind::StatCompose {
            left: Box::new(left),
            right: Box::new(right),
            op,
            opts: HierOpts::default(),
        })
    }

    /// View names referenced anywhere in the expression.
    pub fn view_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.kind {
            ExprKind::ViewRef { name } => out.push(name),
            ExprKind::StatCompose { left, right, .. } | ExprKind::UnionCompose { left, right, .. } => {
                left.collect_refs(out);
                right.collect_refs(out);
            }
            ExprKind::Extract { input, .. }
            | ExprKind::Explode { input, .. }
            | ExprKind::Lift { input, .. }
            | ExprKind::ViewsetStat { input, .. }
            | ExprKind::ViewsetUnion { input } => input.collect_refs(out),
            ExprKind::List { items } => items.iter().for_each(|i| i.collect_refs(out)),
        }
    }
}
