//! Native evaluator with SQL null semantics.

use std::collections::HashMap;

use crate::error::Result;
use crate::relalg::describe::derive;
use crate::relalg::expr::{
    AggFn, ArithOp, ColumnInfo, JoinCondition, JoinKind, Predicate, QueryExpr, ScalarExpr,
};
use crate::relcore::{Attribute, Database, Schema, Table};
use crate::value::{DataType, Value};

type Row = Vec<Value>;

struct Rel {
    cols: Vec<ColumnInfo>,
    rows: Vec<Row>,
}

impl Rel {
    fn index(&self, name: &str) -> usize {
        self.cols.iter().position(|c| c.name == name).expect("column validated by derive")
    }
}

/// Evaluate `q` over `db`. The result table is named `result`; float
/// columns hold only floats.
pub fn evaluate(q: &QueryExpr, db: &Database) -> Result<Table> {
    Ok(into_table(run(q, db)?))
}

/// Evaluate and also return the lineage-carrying column descriptions.
pub fn evaluate_described(q: &QueryExpr, db: &Database) -> Result<(Vec<ColumnInfo>, Table)> {
    let rel = run(q, db)?;
    let cols = rel.cols.clone();
    Ok((cols, into_table(rel)))
}

fn into_table(rel: Rel) -> Table {
    let attributes = rel
        .cols
        .iter()
        .map(|c| Attribute { name: c.name.clone(), role: c.role(), datatype: c.datatype })
        .collect();
    Table { name: "result".into(), schema: Schema { attributes }, rows: rel.rows }
}

fn run(q: &QueryExpr, db: &Database) -> Result<Rel> {
    let rel = match q {
        QueryExpr::Base { table } => {
            let t = db.get(table)?;
            Rel { cols: derive(q, Vec::new(), db)?, rows: t.rows.clone() }
        }
        QueryExpr::Values { rows, .. } => {
            let cols = derive(q, Vec::new(), db)?;
            let rows = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .zip(&cols)
                        .map(|(v, c)| v.coerce_to(c.datatype).unwrap_or_else(|| v.clone()))
                        .collect()
                })
                .collect();
            Rel { cols, rows }
        }
        QueryExpr::Select { pred, input } => {
            let inner = run(input, db)?;
            let cols = derive(q, vec![inner.cols.clone()], db)?;
            let pred = pred.resolve(&cols)?;
            let compiled = compile_pred(&pred, &inner);
            let rows = inner.rows.into_iter().filter(|r| compiled.eval(r) == Some(true)).collect();
            Rel { cols, rows }
        }
        QueryExpr::Project { items, input } => {
            let inner = run(input, db)?;
            let cols = derive(q, vec![inner.cols.clone()], db)?;
            let exprs: Vec<Compiled> = items.iter().map(|i| compile_scalar(&i.expr, &inner)).collect();
            let rows = inner.rows.iter().map(|r| exprs.iter().map(|e| e.eval(r)).collect()).collect();
            Rel { cols, rows }
        }
        QueryExpr::GroupBy { keys, agg, measure, input, .. } => {
            let inner = run(input, db)?;
            let cols = derive(q, vec![inner.cols.clone()], db)?;
            let key_idx: Vec<usize> = keys.iter().map(|k| inner.index(k)).collect();
            let m = inner.index(measure);
            let mut order: Vec<Row> = Vec::new();
            let mut groups: HashMap<Row, Vec<Value>> = HashMap::new();
            for r in inner.rows {
                let key: Row = key_idx.iter().map(|&i| r[i].clone()).collect();
                let slot = groups.entry(key.clone()).or_insert_with(|| {
                    order.push(key);
                    Vec::new()
                });
                slot.push(r[m].clone());
            }
            let rows = order
                .into_iter()
                .map(|key| {
                    let vals = &groups[&key];
                    let mut row = key;
                    row.push(aggregate(*agg, vals));
                    row
                })
                .collect();
            Rel { cols, rows }
        }
        QueryExpr::Join { kind, on, left, right } => {
            let l = run(left, db)?;
            let r = run(right, db)?;
            let cols = derive(q, vec![l.cols.clone(), r.cols.clone()], db)?;
            let rows = hash_join(*kind, on, &l, &r);
            Rel { cols, rows }
        }
        QueryExpr::Union { left, right } => {
            let l = run(left, db)?;
            let r = run(right, db)?;
            let cols = derive(q, vec![l.cols.clone(), r.cols.clone()], db)?;
            let mut rows = l.rows;
            rows.extend(r.rows);
            Rel { cols, rows }
        }
    };
    Ok(widen(rel))
}

fn widen(mut rel: Rel) -> Rel {
    let float_cols: Vec<usize> = rel
        .cols
        .iter()
        .enumerate()
        .filter(|(_, c)| c.datatype == DataType::Float)
        .map(|(i, _)| i)
        .collect();
    if !float_cols.is_empty() {
        for row in &mut rel.rows {
            for &i in &float_cols {
                if let Value::Int(v) = row[i] {
                    row[i] = Value::Float(v as f64);
                }
            }
        }
    }
    rel
}

fn hash_join(kind: JoinKind, on: &JoinCondition, l: &Rel, r: &Rel) -> Vec<Row> {
    let l_eq: Vec<usize> = on.equalities.iter().map(|(a, _)| l.index(a)).collect();
    let r_eq: Vec<usize> = on.equalities.iter().map(|(_, b)| r.index(b)).collect();
    let l_tr: Vec<usize> = on.translations.iter().map(|t| l.index(&t.left)).collect();
    let r_tr: Vec<usize> = on.translations.iter().map(|t| r.index(&t.right)).collect();

    // A key of `None` never matches (null or untranslatable value).
    let left_key = |row: &Row| -> Option<Row> {
        let mut key = Vec::with_capacity(l_eq.len() + l_tr.len());
        for &i in &l_eq {
            if row[i].is_null() {
                return None;
            }
            key.push(row[i].clone());
        }
        for (t, &i) in on.translations.iter().zip(&l_tr) {
            key.push(t.map.lookup(&row[i])?.clone());
        }
        Some(key)
    };
    let right_key = |row: &Row| -> Option<Row> {
        let key: Row = r_eq.iter().chain(&r_tr).map(|&i| row[i].clone()).collect();
        (!key.iter().any(Value::is_null)).then_some(key)
    };

    let mut index: HashMap<Row, Vec<usize>> = HashMap::new();
    for (j, row) in r.rows.iter().enumerate() {
        if let Some(k) = right_key(row) {
            index.entry(k).or_default().push(j);
        }
    }
    let l_pad = vec![Value::Null; l.cols.len()];
    let r_pad = vec![Value::Null; r.cols.len()];
    let mut matched = vec![false; r.rows.len()];
    let mut out = Vec::new();
    for lrow in &l.rows {
        let hits = left_key(lrow).and_then(|k| index.get(&k));
        match hits {
            Some(js) if !js.is_empty() => {
                for &j in js {
                    matched[j] = true;
                    let mut row = lrow.clone();
                    row.extend(r.rows[j].iter().cloned());
                    out.push(row);
                }
            }
            _ => {
                if kind != JoinKind::Inner {
                    let mut row = lrow.clone();
                    row.extend(r_pad.iter().cloned());
                    out.push(row);
                }
            }
        }
    }
    if kind == JoinKind::Full {
        for (j, rrow) in r.rows.iter().enumerate() {
            if !matched[j] {
                let mut row = l_pad.clone();
                row.extend(rrow.iter().cloned());
                out.push(row);
            }
        }
    }
    out
}

/// Aggregate the measure values of one group. Nulls are ignored; a group
/// with no non-null value yields null for every function.
pub(crate) fn aggregate(agg: AggFn, values: &[Value]) -> Value {
    let present: Vec<&Value> = values.iter().filter(|v| !v.is_null()).collect();
    if present.is_empty() {
        return Value::Null;
    }
    let n = present.len() as f64;
    let floats = || present.iter().filter_map(|v| v.as_f64());
    match agg {
        AggFn::Count => Value::Int(present.len() as i64),
        AggFn::Min => present.iter().copied().min().cloned().unwrap_or(Value::Null),
        AggFn::Max => present.iter().copied().max().cloned().unwrap_or(Value::Null),
        AggFn::Sum => {
            if present.iter().all(|v| matches!(v, Value::Int(_))) {
                let total: i128 = present.iter().copied().map(int_of).sum();
                i64::try_from(total).map_or(Value::Float(total as f64), Value::Int)
            } else {
                Value::Float(floats().sum())
            }
        }
        AggFn::Avg => Value::Float(floats().sum::<f64>() / n),
        AggFn::Std => {
            let mean = floats().sum::<f64>() / n;
            let var = floats().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            Value::Float(var.sqrt())
        }
    }
}

fn int_of(v: &Value) -> i128 {
    match v {
        Value::Int(i) => *i as i128,
        _ => 0,
    }
}

/// Arithmetic with SQL null propagation. Division always produces a float
/// and division by zero produces null.
pub(crate) fn arith(op: ArithOp, a: &Value, b: &Value) -> Value {
    if a.is_null() || b.is_null() {
        return Value::Null;
    }
    if let (Value::Int(x), Value::Int(y), false) = (a, b, op == ArithOp::Div) {
        let exact = match op {
            ArithOp::Add => x.checked_add(*y),
            ArithOp::Sub => x.checked_sub(*y),
            ArithOp::Mul => x.checked_mul(*y),
            ArithOp::Div => None,
        };
        if let Some(v) = exact {
            return Value::Int(v);
        }
    }
    let (Some(x), Some(y)) = (a.as_f64(), b.as_f64()) else {
        return Value::Null;
    };
    match op {
        ArithOp::Add => Value::Float(x + y),
        ArithOp::Sub => Value::Float(x - y),
        ArithOp::Mul => Value::Float(x * y),
        ArithOp::Div if y == 0.0 => Value::Null,
        ArithOp::Div => Value::Float(x / y),
    }
}

enum Compiled {
    Col(usize),
    Lit(Value),
    Arith(ArithOp, Box<Compiled>, Box<Compiled>),
    Coalesce(Vec<Compiled>),
}

impl Compiled {
    fn eval(&self, row: &Row) -> Value {
        match self {
            Compiled::Col(i) => row[*i].clone(),
            Compiled::Lit(v) => v.clone(),
            Compiled::Arith(op, l, r) => arith(*op, &l.eval(row), &r.eval(row)),
            Compiled::Coalesce(args) => {
                args.iter().map(|a| a.eval(row)).find(|v| !v.is_null()).unwrap_or(Value::Null)
            }
        }
    }
}

fn compile_scalar(e: &ScalarExpr, rel: &Rel) -> Compiled {
    match e {
        ScalarExpr::Col { name } => Compiled::Col(rel.index(name)),
        ScalarExpr::Lit { value } => Compiled::Lit(value.clone()),
        ScalarExpr::Arith { op, left, right } => {
            Compiled::Arith(*op, Box::new(compile_scalar(left, rel)), Box::new(compile_scalar(right, rel)))
        }
        ScalarExpr::Coalesce { args } => Compiled::Coalesce(args.iter().map(|a| compile_scalar(a, rel)).collect()),
    }
}

enum CompiledPred {
    True,
    Cmp(usize, crate::relalg::expr::CmpOp, Value),
    In(usize, Vec<Value>),
    And(Box<CompiledPred>, Box<CompiledPred>),
    Or(Box<CompiledPred>, Box<CompiledPred>),
    Not(Box<CompiledPred>),
}

impl CompiledPred {
    /// Three-valued: `None` is unknown.
    fn eval(&self, row: &Row) -> Option<bool> {
        match self {
            CompiledPred::True => Some(true),
            CompiledPred::Cmp(i, op, v) => row[*i].sql_cmp(v).map(|o| op.holds(o)),
            CompiledPred::In(i, vals) => {
                let x = &row[*i];
                if vals.is_empty() {
                    return Some(false);
                }
                if x.is_null() {
                    return None;
                }
                let mut unknown = false;
                for v in vals {
                    match x.sql_cmp(v) {
                        Some(std::cmp::Ordering::Equal) => return Some(true),
                        None => unknown = true,
                        _ => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(false)
                }
            }
            CompiledPred::And(a, b) => match (a.eval(row), b.eval(row)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            CompiledPred::Or(a, b) => match (a.eval(row), b.eval(row)) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            CompiledPred::Not(a) => a.eval(row).map(|b| !b),
        }
    }
}

fn compile_pred(p: &Predicate, rel: &Rel) -> CompiledPred {
    match p {
        Predicate::True => CompiledPred::True,
        Predicate::Cmp { attr, op, value } => CompiledPred::Cmp(rel.index(attr), *op, value.clone()),
        Predicate::In { attr, values } => CompiledPred::In(rel.index(attr), values.clone()),
        Predicate::And { left, right } => {
            CompiledPred::And(Box::new(compile_pred(left, rel)), Box::new(compile_pred(right, rel)))
        }
        Predicate::Or { left, right } => {
            CompiledPred::Or(Box::new(compile_pred(left, rel)), Box::new(compile_pred(right, rel)))
        }
        Predicate::Not { inner } => CompiledPred::Not(Box::new(compile_pred(inner, rel))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relalg::expr::{JoinCondition, ProjectItem};
    use crate::relcore::{Attribute, Schema};

    pub(crate) fn flights() -> Database {
        let schema = Schema::new(vec![
            Attribute::dimension("date", DataType::Int),
            Attribute::dimension("src", DataType::String),
            Attribute::measure("delay", DataType::Float),
        ])
        .unwrap();
        let rows = [(1, "SFO", 10.0), (2, "SFO", 20.0), (3, "SFO", 30.0), (1, "OAK", 4.0), (2, "OAK", 25.0), (3, "OAK", 18.0)]
            .iter()
            .map(|&(d, s, y)| vec![Value::Int(d), Value::str(s), Value::Float(y)])
            .collect();
        Database::new().with(Table::new("flights", schema, rows).unwrap()).unwrap()
    }

    #[test]
    fn canonical_group_by() {
        let q = QueryExpr::base("flights").select(Predicate::eq("src", "SFO")).group_by(&["date"], AggFn::Avg, "delay", "y");
        let t = evaluate(&q, &flights()).unwrap();
        let want: Vec<Row> = vec![
            vec![Value::Int(1), Value::Float(10.0)],
            vec![Value::Int(2), Value::Float(20.0)],
            vec![Value::Int(3), Value::Float(30.0)],
        ];
        assert_eq!(t.sorted_rows(), want);
    }

    #[test]
    fn true_filter_is_identity() {
        let db = flights();
        let t = evaluate(&QueryExpr::base("flights").select(Predicate::True), &db).unwrap();
        assert_eq!(t.sorted_rows(), db.get("flights").unwrap().sorted_rows());
    }

    #[test]
    fn empty_in_list_is_false_even_for_null() {
        let row = vec![Value::Null];
        let rel = Rel { cols: vec![ColumnInfo::dimension("a", DataType::Int)], rows: vec![] };
        let none = Predicate::In { attr: "a".into(), values: vec![] };
        assert_eq!(compile_pred(&none, &rel).eval(&row), Some(false));
        assert_eq!(compile_pred(&none.not(), &rel).eval(&row), Some(true));
    }

    #[test]
    fn full_outer_join_pads_nulls() {
        let db = flights();
        let l = QueryExpr::base("flights")
            .select(Predicate::eq("date", 1i64).and(Predicate::eq("src", "SFO")))
            .group_by(&["date"], AggFn::Avg, "delay", "y1");
        let r = QueryExpr::base("flights")
            .select(Predicate::eq("date", 2i64).and(Predicate::eq("src", "OAK")))
            .group_by(&["date"], AggFn::Avg, "delay", "y2")
            .project(vec![ProjectItem::column("date", "d2"), ProjectItem::column("y2", "y2")]);
        let q = l.join(JoinKind::Full, JoinCondition::on([("date".into(), "d2".into())]), r);
        let t = evaluate(&q, &db).unwrap();
        assert_eq!(
            t.sorted_rows(),
            vec![
                vec![Value::Null, Value::Null, Value::Int(2), Value::Float(25.0)],
                vec![Value::Int(1), Value::Float(10.0), Value::Null, Value::Null],
            ]
        );
    }

    #[test]
    fn aggregates() {
        let vals = [Value::Int(1), Value::Int(2), Value::Null, Value::Int(3)];
        assert_eq!(aggregate(AggFn::Count, &vals), Value::Int(3));
        assert_eq!(aggregate(AggFn::Sum, &vals), Value::Int(6));
        assert_eq!(aggregate(AggFn::Avg, &vals), Value::Float(2.0));
        assert_eq!(aggregate(AggFn::Min, &vals), Value::Int(1));
        assert_eq!(aggregate(AggFn::Max, &vals), Value::Int(3));
        let std = aggregate(AggFn::Std, &vals).as_f64().unwrap();
        assert!((std - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(aggregate(AggFn::Avg, &[Value::Null]), Value::Null);
        assert_eq!(aggregate(AggFn::Count, &[Value::Null]), Value::Null);
    }

    #[test]
    fn null_and_division_semantics() {
        assert_eq!(arith(ArithOp::Sub, &Value::Int(1), &Value::Null), Value::Null);
        assert_eq!(arith(ArithOp::Div, &Value::Int(1), &Value::Int(0)), Value::Null);
        assert_eq!(arith(ArithOp::Div, &Value::Int(1), &Value::Int(2)), Value::Float(0.5));
        assert!(matches!(arith(ArithOp::Mul, &Value::Int(i64::MAX), &Value::Int(2)), Value::Float(_)));
    }

    #[test]
    fn string_numeric_predicate_is_type_error() {
        let q = QueryExpr::base("flights").select(Predicate::eq("src", 3i64));
        assert!(matches!(evaluate(&q, &flights()), Err(crate::error::VcaError::PredicateTypeError(_))));
    }

    #[test]
    fn unknown_table() {
        assert!(matches!(
            evaluate(&QueryExpr::base("nope"), &flights()),
            Err(crate::error::VcaError::UnknownTable(_))
        ));
    }

    #[test]
    fn in_with_nulls_is_unknown() {
        let p = CompiledPred::In(0, vec![Value::Int(1)]);
        assert_eq!(p.eval(&vec![Value::Null]), None);
        assert_eq!(p.eval(&vec![Value::Int(2)]), Some(false));
        assert_eq!(CompiledPred::Not(Box::new(p)).eval(&vec![Value::Int(1)]), Some(false));
    }
}
