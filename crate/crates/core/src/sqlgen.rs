//! SQL text for query trees.
//!
//! Canonical queries flatten to a single `SELECT ... GROUP BY`; everything
//! else nests subqueries with generated aliases `"t1"`, `"t2"`, ...

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VcaError};
use crate::relalg::{describe, AggFn, ArithOp, JoinCondition, JoinKind, Predicate, QueryExpr, ScalarExpr};
use crate::relcore::Database;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    Ansi,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqlText {
    pub text: String,
    pub dialect: Dialect,
}

impl std::fmt::Display for SqlText {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

/// Emit one SQL statement computing `q`.
pub fn emit_sql(q: &QueryExpr, db: &Database) -> Result<SqlText> {
    describe(q, db)?;
    let mut e = Emitter { db, next_alias: 0 };
    Ok(SqlText { text: e.query(q)?, dialect: Dialect::Ansi })
}

pub fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

pub fn literal(v: &Value) -> Result<String> {
    Ok(match v {
        Value::Null => "NULL".into(),
        Value::Int(i) => i.to_string(),
        Value::Float(f) if f.is_finite() => format!("{f:?}"),
        Value::Float(f) => return Err(VcaError::UnsupportedConstruct(format!("non-finite literal {f}"))),
        Value::Str(s) => format!("'{}'", s.replace('\'', "''")),
        Value::Date(d) => format!("'{}'", d.format("%Y-%m-%d")),
    })
}

struct Emitter<'a> {
    db: &'a Database,
    next_alias: usize,
}

/// A FROM item plus the conjuncts that can go straight into its WHERE.
struct Source {
    from: String,
    filters: Vec<String>,
}

impl Emitter<'_> {
    fn alias(&mut self) -> String {
        self.next_alias += 1;
        quote_ident(&format!("t{}", self.next_alias))
    }

    fn query(&mut self, q: &QueryExpr) -> Result<String> {
        Ok(match q {
            QueryExpr::Base { .. } | QueryExpr::Select { .. } => {
                let src = self.source(q)?;
                select_from("*", &src)
            }
            QueryExpr::Values { columns, rows, .. } => {
                let names: Vec<String> = columns.iter().map(|c| quote_ident(&c.name)).collect();
                if rows.is_empty() {
                    let items: Vec<String> = names.iter().map(|n| format!("NULL AS {n}")).collect();
                    return Ok(format!("SELECT {} WHERE 1 = 0", items.join(", ")));
                }
                let mut parts = Vec::with_capacity(rows.len());
                for row in rows {
                    let items = row
                        .iter()
                        .zip(&columns[..])
                        .map(|(v, c)| {
                            let v = v.coerce_to(c.datatype).unwrap_or_else(|| v.clone());
                            Ok(format!("{} AS {}", literal(&v)?, quote_ident(&c.name)))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    parts.push(format!("SELECT {}", items.join(", ")));
                }
                parts.join(" UNION ALL ")
            }
            QueryExpr::Project { items, input } => {
                let src = self.source(input)?;
                let list = items
                    .iter()
                    .map(|it| Ok(format!("{} AS {}", scalar(&it.expr)?, quote_ident(&it.name))))
                    .collect::<Result<Vec<_>>>()?;
                select_from(&list.join(", "), &src)
            }
            QueryExpr::GroupBy { keys, agg, measure, output, input } => {
                let src = self.source(input)?;
                let keys: Vec<String> = keys.iter().map(|k| quote_ident(k)).collect();
                let mut list = keys.clone();
                list.push(format!("{} AS {}", aggregate(*agg, &quote_ident(measure)), quote_ident(output)));
                let mut sql = select_from(&list.join(", "), &src);
                if keys.is_empty() {
                    sql.push_str(" HAVING COUNT(*) > 0");
                } else {
                    let _ = write!(sql, " GROUP BY {}", keys.join(", "));
                }
                sql
            }
            QueryExpr::Join { kind, on, left, right } => {
                let la = self.alias();
                let ra = self.alias();
                let l = self.table_ref(left, &la)?;
                let r = self.table_ref(right, &ra)?;
                let join = match kind {
                    JoinKind::Inner => "INNER JOIN",
                    JoinKind::Left => "LEFT JOIN",
                    JoinKind::Full => "FULL OUTER JOIN",
                };
                format!("SELECT {la}.*, {ra}.* FROM {l} {join} {r} ON {}", join_condition(on, &la, &ra)?)
            }
            QueryExpr::Union { left, right } => {
                let la = self.alias();
                let ra = self.alias();
                let l = self.query(left)?;
                let r = self.query(right)?;
                format!("SELECT * FROM ({l}) AS {la} UNION ALL SELECT * FROM ({r}) AS {ra}")
            }
        })
    }

    fn table_ref(&mut self, q: &QueryExpr, alias: &str) -> Result<String> {
        Ok(match q {
            QueryExpr::Base { table } => format!("{} AS {alias}", quote_ident(table)),
            _ => format!("({}) AS {alias}", self.query(q)?),
        })
    }

    /// Base tables and selections over them stay flat; anything else becomes
    /// an aliased subquery.
    fn source(&mut self, q: &QueryExpr) -> Result<Source> {
        match q {
            QueryExpr::Base { table } => Ok(Source { from: quote_ident(table), filters: Vec::new() }),
            QueryExpr::Select { pred, input } => {
                let cols = describe(input, self.db)?;
                let mut src = self.source(input)?;
                let pred = pred.resolve(&cols)?;
                if pred != Predicate::True {
                    src.filters.push(predicate(&pred)?);
                }
                Ok(src)
            }
            _ => {
                let alias = self.alias();
                Ok(Source { from: format!("({}) AS {alias}", self.query(q)?), filters: Vec::new() })
            }
        }
    }
}

fn select_from(list: &str, src: &Source) -> String {
    let mut sql = format!("SELECT {list} FROM {}", src.from);
    if !src.filters.is_empty() {
        let _ = write!(sql, " WHERE {}", src.filters.join(" AND "));
    }
    sql
}

fn aggregate(agg: AggFn, col: &str) -> String {
    match agg {
        // COUNT over an all-null group is 0 in SQL; the engine reports null.
        AggFn::Count => format!("NULLIF(count({col}), 0)"),
        AggFn::Std => format!("stddev_pop({col})"),
        _ => format!("{}({col})", agg.name()),
    }
}

fn scalar(e: &ScalarExpr) -> Result<String> {
    Ok(match e {
        ScalarExpr::Col { name } => quote_ident(name),
        ScalarExpr::Lit { value } => literal(value)?,
        ScalarExpr::Arith { op: ArithOp::Div, left, right } => {
            format!("(CAST({} AS DOUBLE PRECISION) / NULLIF({}, 0))", scalar(left)?, scalar(right)?)
        }
        ScalarExpr::Arith { op, left, right } => format!("({} {} {})", scalar(left)?, op.symbol(), scalar(right)?),
        ScalarExpr::Coalesce { args } => {
            let args = args.iter().map(scalar).collect::<Result<Vec<_>>>()?;
            format!("COALESCE({})", args.join(", "))
        }
    })
}

fn predicate(p: &Predicate) -> Result<String> {
    Ok(match p {
        Predicate::True => "1 = 1".into(),
        Predicate::Cmp { attr, op, value } => {
            let op = if op.symbol() == "!=" { "<>" } else { op.symbol() };
            format!("{} {op} {}", quote_ident(attr), literal(value)?)
        }
        // `x IN ()` is not valid SQL.
        Predicate::In { values, .. } if values.is_empty() => "1 = 0".into(),
        Predicate::In { attr, values } => {
            let lits = values.iter().map(literal).collect::<Result<Vec<_>>>()?;
            format!("{} IN ({})", quote_ident(attr), lits.join(", "))
        }
        Predicate::And { left, right } => format!("({} AND {})", predicate(left)?, predicate(right)?),
        Predicate::Or { left, right } => format!("({} OR {})", predicate(left)?, predicate(right)?),
        Predicate::Not { inner } => format!("(NOT {})", predicate(inner)?),
    })
}

fn join_condition(on: &JoinCondition, la: &str, ra: &str) -> Result<String> {
    let mut atoms = Vec::new();
    for (l, r) in &on.equalities {
        atoms.push(format!("{la}.{} = {ra}.{}", quote_ident(l), quote_ident(r)));
    }
    for t in &on.translations {
        if t.map.is_empty() {
            atoms.push("1 = 0".into());
            continue;
        }
        let pairs = t
            .map
            .pairs
            .iter()
            .map(|(f, c)| Ok(format!("({}, {})", literal(f)?, literal(c)?)))
            .collect::<Result<Vec<_>>>()?;
        atoms.push(format!(
            "({la}.{}, {ra}.{}) IN (VALUES {})",
            quote_ident(&t.left),
            quote_ident(&t.right),
            pairs.join(", ")
        ));
    }
    Ok(if atoms.is_empty() { "1 = 1".into() } else { atoms.join(" AND ") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relalg::{CmpOp, JoinCondition, ProjectItem, Translation};
    use crate::relcore::{Attribute, Schema, Table, TranslationMap};
    use crate::value::DataType;

    fn db() -> Database {
        let schema = Schema::new(vec![
            Attribute::dimension("date", DataType::Int),
            Attribute::dimension("src", DataType::String),
            Attribute::measure("delay", DataType::Float),
        ])
        .unwrap();
        Database::new().with(Table::new("flights", schema, vec![]).unwrap()).unwrap()
    }

    #[test]
    fn canonical_query_is_flat() {
        let q = QueryExpr::base("flights")
            .select(Predicate::eq("src", "SFO"))
            .group_by(&["date"], AggFn::Avg, "delay", "y");
        assert_eq!(
            emit_sql(&q, &db()).unwrap().text,
            r#"SELECT "date", avg("delay") AS "y" FROM "flights" WHERE "src" = 'SFO' GROUP BY "date""#
        );
    }

    #[test]
    fn base_table() {
        assert_eq!(emit_sql(&QueryExpr::base("flights"), &db()).unwrap().text, r#"SELECT * FROM "flights""#);
    }

    #[test]
    fn literals_are_escaped_and_resolved() {
        assert_eq!(literal(&Value::str("O'Hare")).unwrap(), "'O''Hare'");
        assert_eq!(quote_ident("a\"b"), "\"a\"\"b\"");
        assert!(literal(&Value::Float(f64::NAN)).is_err());
        let q = QueryExpr::base("flights").select(Predicate::cmp("delay", CmpOp::Ne, 3i64));
        assert_eq!(emit_sql(&q, &db()).unwrap().text, r#"SELECT * FROM "flights" WHERE "delay" <> 3.0"#);
    }

    #[test]
    fn joins_use_aliases_and_value_lists() {
        let l = QueryExpr::base("flights").group_by(&["date"], AggFn::Count, "delay", "y");
        let r = QueryExpr::base("flights")
            .group_by(&["src"], AggFn::Std, "delay", "y")
            .project(vec![ProjectItem::column("src", "s"), ProjectItem::column("y", "y2")]);
        let map = TranslationMap::from_pairs("date", "s", [(Value::Int(1), Value::str("SFO"))]).unwrap();
        let on = JoinCondition {
            equalities: vec![],
            translations: vec![Translation { left: "date".into(), right: "s".into(), map }],
        };
        let sql = emit_sql(&l.join(JoinKind::Full, on, r), &db()).unwrap().text;
        assert!(sql.starts_with(r#"SELECT "t1".*, "t2".* FROM (SELECT "date", NULLIF(count("delay"), 0) AS "y""#));
        assert!(sql.contains(r#"FULL OUTER JOIN (SELECT "src" AS "s", "y" AS "y2" FROM (SELECT "src", stddev_pop("delay")"#));
        assert!(sql.ends_with(r#"ON ("t1"."date", "t2"."s") IN (VALUES (1, 'SFO'))"#));
    }

    #[test]
    fn deterministic() {
        let q = QueryExpr::base("flights").union(QueryExpr::base("flights"));
        assert_eq!(emit_sql(&q, &db()).unwrap(), emit_sql(&q, &db()).unwrap());
    }
}
