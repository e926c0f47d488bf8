use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::VcaError;
use crate::relcore::{Role, TranslationMap};
use crate::value::{DataType, Value};

/// Aggregation functions usable in a group-by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFn {
    Avg,
    Min,
    Max,
    Sum,
    Count,
    /// Population standard deviation.
    Std,
}

impl AggFn {
    pub const ALL: [AggFn; 6] = [AggFn::Avg, AggFn::Min, AggFn::Max, AggFn::Sum, AggFn::Count, AggFn::Std];

    pub fn name(self) -> &'static str {
        match self {
            AggFn::Avg => "avg",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::Sum => "sum",
            AggFn::Count => "count",
            AggFn::Std => "std",
        }
    }
}

impl FromStr for AggFn {
    type Err = VcaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "avg" | "average" | "mean" => AggFn::Avg,
            "min" => AggFn::Min,
            "max" => AggFn::Max,
            "sum" => AggFn::Sum,
            "count" => AggFn::Count,
            "std" | "stddev" | "stddev_pop" => AggFn::Std,
            _ => return Err(VcaError::UnknownAggregate(s.to_string())),
        })
    }
}

impl fmt::Display for AggFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Binary arithmetic used in projections and statistical composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    /// `y1 op y2 == y2 op y1`.
    pub fn is_symmetric(self) -> bool {
        matches!(self, ArithOp::Add | ArithOp::Mul)
    }
}

impl FromStr for ArithOp {
    type Err = VcaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "+" | "add" => ArithOp::Add,
            "-" | "sub" => ArithOp::Sub,
            "*" | "mul" => ArithOp::Mul,
            "/" | "div" => ArithOp::Div,
            _ => return Err(VcaError::UnknownOp(s.to_string())),
        })
    }
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

/// Boolean filter over a single row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Predicate {
    True,
    Cmp { attr: String, op: CmpOp, value: Value },
    In { attr: String, values: Vec<Value> },
    And { left: Box<Predicate>, right: Box<Predicate> },
    Or { left: Box<Predicate>, right: Box<Predicate> },
    Not { inner: Box<Predicate> },
}

impl Predicate {
    pub fn eq(attr: impl Into<String>, value: impl Into<Value>) -> Self {
        Predicate::Cmp { attr: attr.into(), op: CmpOp::Eq, value: value.into() }
    }

    pub fn cmp(attr: impl Into<String>, op: CmpOp, value: impl Into<Value>) -> Self {
        Predicate::Cmp { attr: attr.into(), op, value: value.into() }
    }

    pub fn and(self, other: Predicate) -> Self {
        match (self, other) {
            (Predicate::True, p) | (p, Predicate::True) => p,
            (a, b) => Predicate::And { left: Box::new(a), right: Box::new(b) },
        }
    }

    pub fn or(self, other: Predicate) -> Self {
        Predicate::Or { left: Box::new(self), right: Box::new(other) }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Predicate::Not { inner: Box::new(self) }
    }

    /// Conjunction of `attr = value` atoms.
    pub fn all_eq(pairs: impl IntoIterator<Item = (String, Value)>) -> Self {
        pairs.into_iter().fold(Predicate::True, |p, (a, v)| p.and(Predicate::eq(a, v)))
    }

    pub fn attrs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_attrs(&mut out);
        out
    }

    fn collect_attrs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Predicate::True => {}
            Predicate::Cmp { attr, .. } | Predicate::In { attr, .. } => out.push(attr),
            Predicate::And { left, right } | Predicate::Or { left, right } => {
                left.collect_attrs(out);
                right.collect_attrs(out);
            }
            Predicate::Not { inner } => inner.collect_attrs(out),
        }
    }

    /// Coerce literals to the datatypes of the attributes they are compared with.
    pub fn resolve(&self, columns: &[ColumnInfo]) -> Result<Predicate, VcaError> {
        let ty = |attr: &str| {
            columns
                .iter()
                .find(|c| c.name == attr)
                .map(|c| c.datatype)
                .ok_or_else(|| VcaError::UnknownColumn { column: attr.to_string(), context: "predicate".into() })
        };
        let coerce = |v: &Value, t: DataType, attr: &str| {
            v.coerce_to(t).ok_or_else(|| {
                VcaError::PredicateTypeError(format!("literal {v} is not comparable with {attr} ({t})"))
            })
        };
        Ok(match self {
            Predicate::True => Predicate::True,
            Predicate::Cmp { attr, op, value } => {
                Predicate::Cmp { attr: attr.clone(), op: *op, value: coerce(value, ty(attr)?, attr)? }
            }
            Predicate::In { attr, values } => {
                let t = ty(attr)?;
                Predicate::In {
                    attr: attr.clone(),
                    values: values.iter().map(|v| coerce(v, t, attr)).collect::<Result<_, _>>()?,
                }
            }
            Predicate::And { left, right } => {
                Predicate::And { left: Box::new(left.resolve(columns)?), right: Box::new(right.resolve(columns)?) }
            }
            Predicate::Or { left, right } => {
                Predicate::Or { left: Box::new(left.resolve(columns)?), right: Box::new(right.resolve(columns)?) }
            }
            Predicate::Not { inner } => Predicate::Not { inner: Box::new(inner.resolve(columns)?) },
        })
    }
}

/// Projection expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScalarExpr {
    Col { name: String },
    Lit { value: Value },
    Arith { op: ArithOp, left: Box<ScalarExpr>, right: Box<ScalarExpr> },
    Coalesce { args: Vec<ScalarExpr> },
}

impl ScalarExpr {
    pub fn col(name: impl Into<String>) -> Self {
        ScalarExpr::Col { name: name.into() }
    }

    pub fn lit(value: impl Into<Value>) -> Self {
        ScalarExpr::Lit { value: value.into() }
    }

    pub fn arith(op: ArithOp, left: ScalarExpr, right: ScalarExpr) -> Self {
        ScalarExpr::Arith { op, left: Box::new(left), right: Box::new(right) }
    }

    pub fn coalesce(args: Vec<ScalarExpr>) -> Self {
        ScalarExpr::Coalesce { args }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectItem {
    pub expr: ScalarExpr,
    pub name: String,
}

impl ProjectItem {
    pub fn new(expr: ScalarExpr, name: impl Into<String>) -> Self {
        ProjectItem { expr, name: name.into() }
    }

    /// Pass a column through, optionally renamed.
    pub fn column(from: &str, to: &str) -> Self {
        ProjectItem { expr: ScalarExpr::col(from), name: to.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JoinKind {
    Inner,
    Left,
    Full,
}

/// Hierarchy join atom: the left column's value translates to the right
/// column's value under `map` (left is the finer attribute).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Translation {
    pub left: String,
    pub right: String,
    pub map: TranslationMap,
}

/// Conjunction of column equalities and translation atoms. An empty condition
/// matches every pair of rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JoinCondition {
    #[serde(default)]
    pub equalities: Vec<(String, String)>,
    #[serde(default)]
    pub translations: Vec<Translation>,
}

impl JoinCondition {
    pub fn on(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        JoinCondition { equalities: pairs.into_iter().collect(), translations: Vec::new() }
    }
}

/// Measure lineage type: what base attribute a measure derives from and
/// through which statistic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeasureType {
    /// The raw base attribute.
    Base { attr: String },
    /// A statistic whose output type is the attribute itself (avg, min, ...).
    SameAs { attr: String },
    /// A parameterized custom type such as `count<attr>`.
    Param { func: String, attr: String },
}

impl MeasureType {
    pub fn attr(&self) -> &str {
        match self {
            MeasureType::Base { attr } | MeasureType::SameAs { attr } | MeasureType::Param { attr, .. } => attr,
        }
    }
}

impl fmt::Display for MeasureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureType::Base { attr } | MeasureType::SameAs { attr } => f.write_str(attr),
            MeasureType::Param { func, attr } => write!(f, "{func}<{attr}>"),
        }
    }
}

/// Where an output column comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Lineage {
    /// A dimension copied from the named base attribute.
    Attr { origin: String },
    /// A dimension with no base attribute (qid, computed keys).
    Synthetic,
    /// A measure with its type.
    Measure { ty: MeasureType },
    /// A measure computed from other measures; typed by its left operand.
    Derived { ty: MeasureType },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub name: String,
    pub datatype: DataType,
    pub lineage: Lineage,
}

impl ColumnInfo {
    pub fn dimension(name: impl Into<String>, datatype: DataType) -> Self {
        let name = name.into();
        ColumnInfo { lineage: Lineage::Attr { origin: name.clone() }, name, datatype }
    }

    pub fn measure(name: impl Into<String>, datatype: DataType, ty: MeasureType) -> Self {
        ColumnInfo { name: name.into(), datatype, lineage: Lineage::Measure { ty } }
    }

    pub fn role(&self) -> Role {
        match self.lineage {
            Lineage::Measure { .. } | Lineage::Derived { .. } => Role::Measure,
            _ => Role::Dimension,
        }
    }

    pub fn measure_type(&self) -> Option<&MeasureType> {
        match &self.lineage {
            Lineage::Measure { ty } | Lineage::Derived { ty } => Some(ty),
            _ => None,
        }
    }

    pub fn origin(&self) -> Option<&str> {
        match &self.lineage {
            Lineage::Attr { origin } => Some(origin),
            _ => None,
        }
    }

    pub fn renamed(&self, name: &str) -> Self {
        ColumnInfo { name: name.to_string(), ..self.clone() }
    }
}

/// Relational-algebra query tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum QueryExpr {
    Base {
        table: String,
    },
    /// Inline relation, used for rendered model predictions.
    Values {
        name: String,
        columns: Vec<ColumnInfo>,
        rows: Vec<Vec<Value>>,
    },
    Select {
        pred: Predicate,
        input: Box<QueryExpr>,
    },
    Project {
        items: Vec<ProjectItem>,
        input: Box<QueryExpr>,
    },
    #[serde(rename = "groupby")]
    GroupBy {
        keys: Vec<String>,
        agg: AggFn,
        measure: String,
        output: String,
        input: Box<QueryExpr>,
    },
    Join {
        kind: JoinKind,
        on: JoinCondition,
        left: Box<QueryExpr>,
        right: Box<QueryExpr>,
    },
    Union {
        left: Box<QueryExpr>,
        right: Box<QueryExpr>,
    },
}

impl QueryExpr {
    pub fn base(table: impl Into<String>) -> Self {
        QueryExpr::Base { table: table.into() }
    }

    pub fn select(self, pred: Predicate) -> Self {
        QueryExpr::Select { pred, input: Box::new(self) }
    }

    pub fn project(self, items: Vec<ProjectItem>) -> Self {
        QueryExpr::Project { items, input: Box::new(self) }
    }

    pub fn group_by(self, keys: &[&str], agg: AggFn, measure: &str, output: &str) -> Self {
        QueryExpr::GroupBy {
            keys: keys.iter().map(|k| k.to_string()).collect(),
            agg,
            measure: measure.to_string(),
            output: output.to_string(),
            input: Box::new(self),
        }
    }

    pub fn join(self, kind: JoinKind, on: JoinCondition, right: QueryExpr) -> Self {
        QueryExpr::Join { kind, on, left: Box::new(self), right: Box::new(right) }
    }

    pub fn union(self, right: QueryExpr) -> Self {
        QueryExpr::Union { left: Box::new(self), right: Box::new(right) }
    }

    /// True when no group-by occurs anywhere in the tree.
    pub fn is_aggregation_free(&self) -> bool {
        match self {
            QueryExpr::Base { .. } | QueryExpr::Values { .. } => true,
            QueryExpr::GroupBy { .. } => false,
            QueryExpr::Select { input, .. } | QueryExpr::Project { input, .. } => input.is_aggregation_free(),
            QueryExpr::Join { left, right, .. } | QueryExpr::Union { left, right } => {
                left.is_aggregation_free() && right.is_aggregation_free()
            }
        }
    }

    /// Base tables referenced by the query.
    pub fn sources(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_sources(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_sources<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            QueryExpr::Base { table } => out.push(table),
            QueryExpr::Values { .. } => {}
            QueryExpr::Select { input, .. } | QueryExpr::Project { input, .. } | QueryExpr::GroupBy { input, .. } => {
                input.collect_sources(out)
            }
            QueryExpr::Join { left, right, .. } | QueryExpr::Union { left, right } => {
                left.collect_sources(out);
                right.collect_sources(out);
            }
        }
    }
}
