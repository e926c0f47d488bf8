//! The canonical query form `γ_{A, f(a)→y}(σ_p(q))` with `q` free of
//! aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VcaError};
use crate::relalg::expr::{AggFn, Predicate, QueryExpr};

/// A group-by over an aggregation-free input, with the outermost filters
/// pulled out into `pred`. When `source` is a base table this is exactly
/// `γ_{A_gb, f(a_y)→y}(σ_p(D))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalQuery {
    pub group_by: Vec<String>,
    pub agg: AggFn,
    pub measure: String,
    pub output: String,
    pub pred: Predicate,
    pub source: QueryExpr,
}

impl CanonicalQuery {
    /// Name of the base table when the source is one.
    pub fn source_table(&self) -> Option<&str> {
        match &self.source {
            QueryExpr::Base { table } => Some(table),
            _ => None,
        }
    }

    /// `σ_p(source)`, the rows that feed the aggregate.
    pub fn pre_aggregation(&self) -> QueryExpr {
        match self.pred {
            Predicate::True => self.source.clone(),
            _ => self.source.clone().select(self.pred.clone()),
        }
    }

    pub fn to_query(&self) -> QueryExpr {
        QueryExpr::GroupBy {
            keys: self.group_by.clone(),
            agg: self.agg,
            measure: self.measure.clone(),
            output: self.output.clone(),
            input: Box::new(self.pre_aggregation()),
        }
    }

    /// Same aggregate with different filter and grouping.
    pub fn with(&self, pred: Predicate, group_by: Vec<String>) -> CanonicalQuery {
        CanonicalQuery { group_by, pred, ..self.clone() }
    }
}

/// Decompose `q` into canonical form, or fail with `NonCanonical`.
pub fn canonicalize(q: &QueryExpr) -> Result<CanonicalQuery> {
    let QueryExpr::GroupBy { keys, agg, measure, output, input } = q else {
        return Err(VcaError::NonCanonical("outermost operator is not a group-by".into()));
    };
    if !input.is_aggregation_free() {
        return Err(VcaError::NonCanonical("aggregation occurs below the outermost group-by".into()));
    }
    let mut pred = Predicate::True;
    let mut source = input.as_ref();
    while let QueryExpr::Select { pred: p, input } = source {
        pred = p.clone().and(pred);
        source = input;
    }
    Ok(CanonicalQuery {
        group_by: keys.clone(),
        agg: *agg,
        measure: measure.clone(),
        output: output.clone(),
        pred,
        source: source.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relalg::expr::{JoinCondition, JoinKind};

    #[test]
    fn recognizes_filtered_group_by() {
        let q = QueryExpr::base("D").select(Predicate::eq("src", "SFO")).group_by(&["date"], AggFn::Avg, "delay", "y");
        let c = canonicalize(&q).unwrap();
        assert_eq!(c.group_by, vec!["date"]);
        assert_eq!(c.agg, AggFn::Avg);
        assert_eq!(c.measure, "delay");
        assert_eq!(c.pred, Predicate::eq("src", "SFO"));
        assert_eq!(c.source_table(), Some("D"));
        assert_eq!(c.to_query(), q);
    }

    #[test]
    fn missing_filter_is_true() {
        let q = QueryExpr::base("D").group_by(&["date"], AggFn::Avg, "delay", "y");
        assert_eq!(canonicalize(&q).unwrap().pred, Predicate::True);
    }

    #[test]
    fn joined_aggregates_are_not_canonical() {
        let a = QueryExpr::base("D").group_by(&["date"], AggFn::Avg, "delay", "y");
        let q = a.clone().join(JoinKind::Full, JoinCondition::default(), a);
        assert!(matches!(canonicalize(&q), Err(VcaError::NonCanonical(_))));
        let nested = QueryExpr::base("D")
            .group_by(&["date", "src"], AggFn::Avg, "delay", "delay")
            .group_by(&["date"], AggFn::Avg, "delay", "y");
        assert!(matches!(canonicalize(&nested), Err(VcaError::NonCanonical(_))));
    }
}
