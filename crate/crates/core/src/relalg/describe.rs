//! Static analysis: output columns, datatypes and lineage of a query,
//! rejecting ill-formed trees before evaluation.

use std::collections::BTreeSet;

use crate::error::{Result, VcaError};
use crate::relalg::expr::{
    AggFn, ArithOp, ColumnInfo, JoinCondition, Lineage, MeasureType, Predicate, QueryExpr, ScalarExpr,
};
use crate::relcore::{Database, Role};
use crate::value::DataType;

/// Output columns of `q`, validated against `db`.
pub fn describe(q: &QueryExpr, db: &Database) -> Result<Vec<ColumnInfo>> {
    let inputs = match q {
        QueryExpr::Base { .. } | QueryExpr::Values { .. } => Vec::new(),
        QueryExpr::Select { input, .. } | QueryExpr::Project { input, .. } | QueryExpr::GroupBy { input, .. } => {
            vec![describe(input, db)?]
        }
        QueryExpr::Join { left, right, .. } | QueryExpr::Union { left, right } => {
            vec![describe(left, db)?, describe(right, db)?]
        }
    };
    derive(q, inputs, db)
}

/// Output columns of the root node of `q` given its inputs' columns.
pub(crate) fn derive(q: &QueryExpr, inputs: Vec<Vec<ColumnInfo>>, db: &Database) -> Result<Vec<ColumnInfo>> {
    let mut inputs = inputs.into_iter();
    let mut next = || inputs.next().expect("input columns for every child");
    match q {
        QueryExpr::Base { table } => {
            let t = db.get(table)?;
            Ok(t.schema
                .attributes
                .iter()
                .map(|a| match a.role {
                    Role::Dimension => ColumnInfo::dimension(&a.name, a.datatype),
                    Role::Measure => {
                        ColumnInfo::measure(&a.name, a.datatype, MeasureType::Base { attr: a.name.clone() })
                    }
                })
                .collect())
        }
        QueryExpr::Values { name, columns, rows } => {
            check_unique(columns)?;
            if let Some(r) = rows.iter().find(|r| r.len() != columns.len()) {
                return Err(VcaError::SchemaMismatch(format!(
                    "inline relation {name} row has {} cells, expected {}",
                    r.len(),
                    columns.len()
                )));
            }
            Ok(columns.clone())
        }
        QueryExpr::Select { pred, .. } => {
            let cols = next();
            check_predicate(pred, &cols)?;
            Ok(cols)
        }
        QueryExpr::Project { items, .. } => {
            let cols = next();
            let out = items
                .iter()
                .map(|item| {
                    let (datatype, lineage) = scalar_type(&item.expr, &cols)?;
                    Ok(ColumnInfo { name: item.name.clone(), datatype, lineage })
                })
                .collect::<Result<Vec<_>>>()?;
            check_unique(&out)?;
            Ok(out)
        }
        QueryExpr::GroupBy { keys, agg, measure, output, .. } => {
            let cols = next();
            let mut out = Vec::with_capacity(keys.len() + 1);
            for k in keys {
                let c = find(&cols, k, "group by")?;
                if c.role() == Role::Measure {
                    return Err(VcaError::SchemaMismatch(format!("cannot group by measure {k}")));
                }
                out.push(c.clone());
            }
            let m = find(&cols, measure, "aggregate")?;
            let datatype = agg_type(*agg, m.datatype)?;
            let lineage = agg_lineage(*agg, m);
            out.push(ColumnInfo { name: output.clone(), datatype, lineage });
            check_unique(&out)?;
            Ok(out)
        }
        QueryExpr::Join { on, .. } => {
            let l = next();
            let r = next();
            check_condition(on, &l, &r)?;
            let mut out = l;
            out.extend(r);
            check_unique(&out)?;
            Ok(out)
        }
        QueryExpr::Union { .. } => {
            let l = next();
            let r = next();
            if l.len() != r.len() || l.iter().zip(&r).any(|(a, b)| a.name != b.name) {
                return Err(VcaError::SchemaMismatch(format!(
                    "union inputs differ: [{}] vs [{}]",
                    names(&l),
                    names(&r)
                )));
            }
            l.iter()
                .zip(&r)
                .map(|(a, b)| {
                    let datatype = a.datatype.unify(b.datatype).ok_or_else(|| {
                        VcaError::SchemaMismatch(format!(
                            "union column {} is {} on the left and {} on the right",
                            a.name, a.datatype, b.datatype
                        ))
                    })?;
                    if a.role() != b.role() {
                        return Err(VcaError::SchemaMismatch(format!("union column {} changes role", a.name)));
                    }
                    Ok(ColumnInfo { datatype, ..a.clone() })
                })
                .collect()
        }
    }
}

fn names(cols: &[ColumnInfo]) -> String {
    cols.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn find<'a>(cols: &'a [ColumnInfo], name: &str, context: &str) -> Result<&'a ColumnInfo> {
    cols.iter()
        .find(|c| c.name == name)
        .ok_or_else(|| VcaError::UnknownColumn { column: name.to_string(), context: context.to_string() })
}

fn check_unique(cols: &[ColumnInfo]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for c in cols {
        if !seen.insert(c.name.as_str()) {
            return Err(VcaError::DuplicateColumn(c.name.clone()));
        }
    }
    Ok(())
}

pub(crate) fn check_predicate(pred: &Predicate, cols: &[ColumnInfo]) -> Result<()> {
    match pred {
        Predicate::True => Ok(()),
        Predicate::Cmp { attr, value, .. } => check_literal(find(cols, attr, "predicate")?, value),
        Predicate::In { attr, values } => {
            let c = find(cols, attr, "predicate")?;
            values.iter().try_for_each(|v| check_literal(c, v))
        }
        Predicate::And { left, right } | Predicate::Or { left, right } => {
            check_predicate(left, cols)?;
            check_predicate(right, cols)
        }
        Predicate::Not { inner } => check_predicate(inner, cols),
    }
}

fn check_literal(col: &ColumnInfo, value: &crate::value::Value) -> Result<()> {
    match value.datatype() {
        None => Err(VcaError::PredicateTypeError(format!("null literal compared with {}", col.name))),
        Some(_) if value.coerce_to(col.datatype).is_some() => Ok(()),
        Some(t) => Err(VcaError::PredicateTypeError(format!(
            "{} is {}, literal {value} is {t}",
            col.name, col.datatype
        ))),
    }
}

fn check_condition(on: &JoinCondition, left: &[ColumnInfo], right: &[ColumnInfo]) -> Result<()> {
    for (l, r) in &on.equalities {
        let a = find(left, l, "join left")?;
        let b = find(right, r, "join right")?;
        if !a.datatype.comparable(b.datatype) {
            return Err(VcaError::TypeError(format!(
                "join key {l} ({}) is not comparable with {r} ({})",
                a.datatype, b.datatype
            )));
        }
    }
    for t in &on.translations {
        find(left, &t.left, "translation left")?;
        find(right, &t.right, "translation right")?;
    }
    Ok(())
}

fn scalar_type(e: &ScalarExpr, cols: &[ColumnInfo]) -> Result<(DataType, Lineage)> {
    match e {
        ScalarExpr::Col { name } => {
            let c = find(cols, name, "projection")?;
            Ok((c.datatype, c.lineage.clone()))
        }
        ScalarExpr::Lit { value } => {
            let t = value
                .datatype()
                .ok_or_else(|| VcaError::TypeError("untyped null literal in projection".into()))?;
            Ok((t, Lineage::Synthetic))
        }
        ScalarExpr::Arith { op, left, right } => {
            let (lt, ll) = scalar_type(left, cols)?;
            let (rt, rl) = scalar_type(right, cols)?;
            if !lt.is_numeric() || !rt.is_numeric() {
                return Err(VcaError::TypeError(format!("arithmetic {} over {lt} and {rt}", op.symbol())));
            }
            let datatype = match (op, lt, rt) {
                (ArithOp::Div, _, _) => DataType::Float,
                (_, DataType::Int, DataType::Int) => DataType::Int,
                _ => DataType::Float,
            };
            let ty = [ll, rl].into_iter().find_map(|l| match l {
                Lineage::Measure { ty } | Lineage::Derived { ty } => Some(ty),
                _ => None,
            });
            Ok((datatype, ty.map_or(Lineage::Synthetic, |ty| Lineage::Derived { ty })))
        }
        ScalarExpr::Coalesce { args } => {
            let mut iter = args.iter();
            let first = iter
                .next()
                .ok_or_else(|| VcaError::TypeError("coalesce needs at least one argument".into()))?;
            let (mut t, lineage) = scalar_type(first, cols)?;
            for a in iter {
                let (at, _) = scalar_type(a, cols)?;
                t = t
                    .unify(at)
                    .ok_or_else(|| VcaError::TypeError(format!("coalesce over {t} and {at}")))?;
            }
            Ok((t, lineage))
        }
    }
}

pub(crate) fn agg_type(agg: AggFn, input: DataType) -> Result<DataType> {
    match agg {
        AggFn::Count => Ok(DataType::Int),
        AggFn::Min | AggFn::Max => Ok(input),
        AggFn::Sum if input.is_numeric() => Ok(input),
        AggFn::Avg | AggFn::Std if input.is_numeric() => Ok(DataType::Float),
        _ => Err(VcaError::TypeError(format!("{agg} over {input}"))),
    }
}

/// Lineage of `agg(column)`. `count` yields `count<a>`; every other
/// registered aggregate keeps the input's type (`avg(a): a`).
fn agg_lineage(agg: AggFn, input: &ColumnInfo) -> Lineage {
    let (ty, derived) = match &input.lineage {
        Lineage::Measure { ty } => (ty.clone(), false),
        Lineage::Derived { ty } => (ty.clone(), true),
        Lineage::Attr { origin } => (MeasureType::Base { attr: origin.clone() }, false),
        Lineage::Synthetic => (MeasureType::Base { attr: input.name.clone() }, false),
    };
    let ty = crate::safety::aggregate_type(agg, ty);
    if derived {
        Lineage::Derived { ty }
    } else {
        Lineage::Measure { ty }
    }
}
