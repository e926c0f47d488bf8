//! Shared fixtures: random databases and query trees, and a SQLite runner
//! used as the reference engine for emitted SQL.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rusqlite::functions::{Aggregate, Context, FunctionFlags};
use rusqlite::types::ValueRef;
use rusqlite::Connection;

use vca::relalg::{
    describe, AggFn, ArithOp, CmpOp, ColumnInfo, JoinCondition, JoinKind, Predicate, ProjectItem, QueryExpr,
    ScalarExpr, Translation,
};
use vca::dsl::{ExprKind, HierOpts, VcaExpr};
use vca::modelview::ModelKind;
use vca::relcore::{Attribute, Database, Role, Schema, Table, TranslationMap};
use vca::value::{DataType, Value};

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn date(s: &str) -> Value {
    Value::date(s).unwrap()
}

/// A value of `ty` drawn from a small pool, so joins and filters hit.
pub fn pool_value(rng: &mut Rng8, ty: DataType) -> Value {
    match ty {
        DataType::Int => Value::Int(rng.gen_range(0..6)),
        DataType::Float => Value::Float(rng.gen_range(-8..24) as f64 / 4.0),
        DataType::String => Value::str(*["a", "b", "c", "O'x"].choose(rng).unwrap()),
        DataType::Date => date(["2021-01-01", "2021-01-02", "2021-02-01", "2021-02-15"].choose(rng).unwrap()),
    }
}

/// Up to three base tables with 1-4 dimensions and one measure.
pub fn random_db(rng: &mut Rng8) -> Database {
    let mut db = Database::new();
    for t in 0..rng.gen_range(1..=3) {
        let ndims = rng.gen_range(1..=4);
        let mut attrs: Vec<Attribute> = (0..ndims)
            .map(|i| {
                let ty = *[DataType::Int, DataType::Int, DataType::String, DataType::Date].choose(rng).unwrap();
                Attribute::dimension(format!("d{i}"), ty)
            })
            .collect();
        let mty = if rng.gen_bool(0.7) { DataType::Float } else { DataType::Int };
        attrs.push(Attribute::measure("m", mty));
        let nrows = rng.gen_range(0..=100);
        let rows = (0..nrows).map(|_| attrs.iter().map(|a| pool_value(rng, a.datatype)).collect()).collect();
        db.insert(Table::new(format!("t{t}"), Schema::new(attrs).unwrap(), rows).unwrap()).unwrap();
    }
    db
}

pub struct QueryGen<'a> {
    pub db: &'a Database,
    fresh: usize,
}

impl<'a> QueryGen<'a> {
    pub fn new(db: &'a Database) -> Self {
        QueryGen { db, fresh: 0 }
    }

    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn cols(&self, q: &QueryExpr) -> Vec<ColumnInfo> {
        describe(q, self.db).expect("generator builds well-formed queries")
    }

    pub fn query(&mut self, rng: &mut Rng8, depth: usize) -> QueryExpr {
        if depth == 0 {
            return self.leaf(rng);
        }
        match rng.gen_range(0..10) {
            0 => self.leaf(rng),
            1 | 2 => {
                let child = self.query(rng, depth - 1);
                let cols = self.cols(&child);
                let p = self.pred(rng, &cols, 2);
                child.select(p)
            }
            3 => {
                let child = self.query(rng, depth - 1);
                self.project(rng, child)
            }
            4..=6 => {
                let child = self.query(rng, depth - 1);
                self.group_by(rng, child)
            }
            7 | 8 => self.join(rng, depth),
            _ => {
                let child = self.query(rng, depth - 1);
                let cols = self.cols(&child);
                let l = child.clone().select(self.pred(rng, &cols, 1));
                let r = if rng.gen_bool(0.5) { child } else { child.select(self.pred(rng, &cols, 1)) };
                l.union(r)
            }
        }
    }

    fn leaf(&mut self, rng: &mut Rng8) -> QueryExpr {
        let tables: Vec<_> = self.db.tables().cloned().collect();
        let t = tables.choose(rng).unwrap();
        if rng.gen_bool(0.85) {
            return QueryExpr::base(&t.name);
        }
        let columns: Vec<ColumnInfo> = t
            .schema
            .attributes
            .iter()
            .map(|a| match a.role {
                Role::Dimension => ColumnInfo::dimension(&a.name, a.datatype),
                Role::Measure => ColumnInfo::measure(
                    &a.name,
                    a.datatype,
                    vca::relalg::MeasureType::Base { attr: a.name.clone() },
                ),
            })
            .collect();
        let rows = (0..rng.gen_range(0..6))
            .map(|_| {
                columns
                    .iter()
                    .map(|c| if rng.gen_bool(0.1) { Value::Null } else { pool_value(rng, c.datatype) })
                    .collect()
            })
            .collect();
        QueryExpr::Values { name: self.name("v"), columns, rows }
    }

    /// Null literals are rejected by `describe`, so none are drawn.
    pub fn literal(&self, rng: &mut Rng8, ty: DataType) -> Value {
        match ty {
            DataType::Float if rng.gen_bool(0.3) => Value::Int(rng.gen_range(-2..6)),
            DataType::Date if rng.gen_bool(0.3) => {
                let d = pool_value(rng, ty);
                Value::str(d.to_string())
            }
            _ => pool_value(rng, ty),
        }
    }

    pub fn pred(&self, rng: &mut Rng8, cols: &[ColumnInfo], depth: usize) -> Predicate {
        if cols.is_empty() {
            return Predicate::True;
        }
        let k = if depth == 0 { rng.gen_range(0..3) } else { rng.gen_range(0..7) };
        match k {
            0 => {
                if rng.gen_bool(0.2) {
                    return Predicate::True;
                }
                let c = cols.choose(rng).unwrap();
                let op = *[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge].choose(rng).unwrap();
                Predicate::Cmp { attr: c.name.clone(), op, value: self.literal(rng, c.datatype) }
            }
            1 | 2 => {
                let c = cols.choose(rng).unwrap();
                let values = (0..rng.gen_range(0..4)).map(|_| self.literal(rng, c.datatype)).collect();
                Predicate::In { attr: c.name.clone(), values }
            }
            3 | 4 => Predicate::And {
                left: Box::new(self.pred(rng, cols, depth - 1)),
                right: Box::new(self.pred(rng, cols, depth - 1)),
            },
            5 => Predicate::Or {
                left: Box::new(self.pred(rng, cols, depth - 1)),
                right: Box::new(self.pred(rng, cols, depth - 1)),
            },
            _ => Predicate::Not { inner: Box::new(self.pred(rng, cols, depth - 1)) },
        }
    }

    fn numeric_expr(&self, rng: &mut Rng8, numeric: &[&ColumnInfo]) -> ScalarExpr {
        let col = |rng: &mut Rng8| ScalarExpr::col(&numeric.choose(rng).unwrap().name);
        match rng.gen_range(0..4) {
            0 => ScalarExpr::coalesce(vec![col(rng), ScalarExpr::lit(Value::Float(rng.gen_range(0..4) as f64 / 2.0))]),
            1 => ScalarExpr::arith(ArithOp::Div, col(rng), col(rng)),
            _ => {
                let op = *[ArithOp::Add, ArithOp::Sub, ArithOp::Mul].choose(rng).unwrap();
                let right = if rng.gen_bool(0.5) { col(rng) } else { ScalarExpr::lit(Value::Int(rng.gen_range(-3..4))) };
                ScalarExpr::arith(op, col(rng), right)
            }
        }
    }

    fn project(&mut self, rng: &mut Rng8, child: QueryExpr) -> QueryExpr {
        let cols = self.cols(&child);
        let mut items: Vec<ProjectItem> =
            cols.iter().filter(|_| rng.gen_bool(0.8)).map(|c| ProjectItem::column(&c.name, &c.name)).collect();
        let numeric: Vec<&ColumnInfo> = cols.iter().filter(|c| c.datatype.is_numeric()).collect();
        if !numeric.is_empty() && rng.gen_bool(0.7) {
            let e = self.numeric_expr(rng, &numeric);
            items.push(ProjectItem::new(e, self.name("e")));
        }
        if rng.gen_bool(0.2) {
            items.push(ProjectItem::new(ScalarExpr::lit("k"), self.name("k")));
        }
        if items.is_empty() {
            items.push(ProjectItem::column(&cols[0].name, &cols[0].name));
        }
        child.project(items)
    }

    fn group_by(&mut self, rng: &mut Rng8, child: QueryExpr) -> QueryExpr {
        let cols = self.cols(&child);
        let measures: Vec<&ColumnInfo> = cols.iter().filter(|c| c.role() == Role::Measure).collect();
        let Some(m) = measures.choose(rng).copied() else {
            return child;
        };
        let mut dims: Vec<&ColumnInfo> = cols.iter().filter(|c| c.role() == Role::Dimension).collect();
        dims.shuffle(rng);
        let nkeys = rng.gen_range(0..=dims.len().min(3));
        let keys: Vec<&str> = dims[..nkeys].iter().map(|c| c.name.as_str()).collect();
        let aggs: Vec<AggFn> = if m.datatype.is_numeric() {
            AggFn::ALL.to_vec()
        } else {
            vec![AggFn::Min, AggFn::Max, AggFn::Count]
        };
        let agg = *aggs.choose(rng).unwrap();
        let out = self.name("y");
        child.group_by(&keys, agg, &m.name, &out)
    }

    fn join(&mut self, rng: &mut Rng8, depth: usize) -> QueryExpr {
        let left = self.query(rng, depth - 1);
        let right = self.query(rng, depth - 1);
        let lcols = self.cols(&left);
        let rcols = self.cols(&right);
        let prefix = self.name("r");
        let right = right.project(
            rcols.iter().map(|c| ProjectItem::column(&c.name, &format!("{prefix}_{}", c.name))).collect(),
        );
        let rcols: Vec<ColumnInfo> = rcols.iter().map(|c| c.renamed(&format!("{prefix}_{}", c.name))).collect();
        let mut on = JoinCondition::default();
        for _ in 0..rng.gen_range(0..=2) {
            let l = lcols.choose(rng).unwrap();
            let candidates: Vec<&ColumnInfo> = rcols.iter().filter(|r| r.datatype.comparable(l.datatype)).collect();
            if let Some(r) = candidates.choose(rng) {
                on.equalities.push((l.name.clone(), r.name.clone()));
            }
        }
        if rng.gen_bool(0.2) {
            let l = lcols.choose(rng).unwrap();
            let r = rcols.choose(rng).unwrap();
            let pairs: Vec<(Value, Value)> =
                (0..rng.gen_range(0..5)).map(|_| (pool_value(rng, l.datatype), pool_value(rng, r.datatype))).collect();
            let mut seen = std::collections::BTreeSet::new();
            let pairs = pairs.into_iter().filter(|(f, _)| seen.insert(f.clone()));
            let map = TranslationMap::from_pairs(&l.name, &r.name, pairs).unwrap();
            on.translations.push(Translation { left: l.name.clone(), right: r.name.clone(), map });
        }
        if on.equalities.is_empty() && on.translations.is_empty() && rng.gen_bool(0.7) {
            // Mostly avoid cross products.
            if let Some(l) = lcols.first() {
                if let Some(r) = rcols.iter().find(|r| r.datatype.comparable(l.datatype)) {
                    on.equalities.push((l.name.clone(), r.name.clone()));
                }
            }
        }
        let kind = *[JoinKind::Inner, JoinKind::Left, JoinKind::Full].choose(rng).unwrap();
        left.join(kind, on, right)
    }
}

struct StddevPop;

impl Aggregate<Vec<f64>, Option<f64>> for StddevPop {
    fn init(&self, _: &mut Context<'_>) -> rusqlite::Result<Vec<f64>> {
        Ok(Vec::new())
    }

    fn step(&self, ctx: &mut Context<'_>, acc: &mut Vec<f64>) -> rusqlite::Result<()> {
        if let Some(x) = ctx.get::<Option<f64>>(0)? {
            acc.push(x);
        }
        Ok(())
    }

    fn finalize(&self, _: &mut Context<'_>, acc: Option<Vec<f64>>) -> rusqlite::Result<Option<f64>> {
        let acc = acc.unwrap_or_default();
        if acc.is_empty() {
            return Ok(None);
        }
        let n = acc.len() as f64;
        let mean = acc.iter().sum::<f64>() / n;
        Ok(Some((acc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()))
    }
}

/// An in-memory SQLite database holding the same tables.
pub fn sqlite_for(db: &Database) -> Connection {
    let conn = Connection::open_in_memory().unwrap();
    conn.create_aggregate_function("stddev_pop", 1, FunctionFlags::SQLITE_UTF8 | FunctionFlags::SQLITE_DETERMINISTIC, StddevPop)
        .unwrap();
    for t in db.tables() {
        let cols: Vec<String> = t
            .schema
            .attributes
            .iter()
            .map(|a| {
                let ty = match a.datatype {
                    DataType::Int => "INTEGER",
                    DataType::Float => "REAL",
                    DataType::String | DataType::Date => "TEXT",
                };
                format!("\"{}\" {ty}", a.name)
            })
            .collect();
        conn.execute(&format!("CREATE TABLE \"{}\" ({})", t.name, cols.join(", ")), []).unwrap();
        let marks = vec!["?"; t.schema.len()].join(", ");
        let mut stmt = conn.prepare(&format!("INSERT INTO \"{}\" VALUES ({marks})", t.name)).unwrap();
        for row in &t.rows {
            let params: Vec<rusqlite::types::Value> = row.iter().map(to_sqlite).collect();
            stmt.execute(rusqlite::params_from_iter(params)).unwrap();
        }
    }
    conn
}

fn to_sqlite(v: &Value) -> rusqlite::types::Value {
    use rusqlite::types::Value as S;
    match v {
        Value::Null => S::Null,
        Value::Int(i) => S::Integer(*i),
        Value::Float(f) => S::Real(*f),
        Value::Str(s) => S::Text(s.clone()),
        Value::Date(d) => S::Text(d.format("%Y-%m-%d").to_string()),
    }
}

/// Run `sql` and read the result back with the datatypes from `cols`.
pub fn run_sql(conn: &Connection, sql: &str, cols: &[ColumnInfo]) -> rusqlite::Result<Vec<Vec<Value>>> {
    let mut stmt = conn.prepare(sql)?;
    let n = stmt.column_count();
    assert_eq!(n, cols.len(), "column count of {sql}");
    let mut out = Vec::new();
    let mut rows = stmt.query([])?;
    while let Some(row) = rows.next()? {
        let mut r = Vec::with_capacity(n);
        for (i, c) in cols.iter().enumerate() {
            let v = match row.get_ref(i)? {
                ValueRef::Null => Value::Null,
                ValueRef::Integer(x) => Value::Int(x),
                ValueRef::Real(x) => Value::Float(x),
                ValueRef::Text(t) => {
                    let s = String::from_utf8_lossy(t).into_owned();
                    match c.datatype {
                        DataType::Date => Value::date(&s).unwrap_or(Value::Str(s)),
                        _ => Value::Str(s),
                    }
                }
                ValueRef::Blob(_) => panic!("blob in result"),
            };
            r.push(v);
        }
        out.push(r);
    }
    Ok(out)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// Cells are equal: exact for non-floats, relative 1e-9 once a float is involved.
pub fn cell_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (x, y) if x.as_f64().is_some() && y.as_f64().is_some() => close(x.as_f64().unwrap(), y.as_f64().unwrap(), 1e-9),
        (x, y) => x == y,
    }
}

pub fn row_eq(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| cell_eq(x, y))
}

/// Multiset equality under `cell_eq`.
pub fn same_multiset(a: &[Vec<Value>], b: &[Vec<Value>]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort();
    sb.sort();
    if sa.iter().zip(&sb).all(|(x, y)| row_eq(x, y)) {
        return true;
    }
    // Sorting may interleave rows that differ only by float noise.
    let mut used = vec![false; sb.len()];
    sa.iter().all(|x| {
        let hit = sb.iter().enumerate().position(|(i, y)| !used[i] && row_eq(x, y));
        hit.map(|i| used[i] = true).is_some()
    })
}

/// Project away the column named `drop`.
pub fn without_column(rows: &[Vec<Value>], idx: usize) -> Vec<Vec<Value>> {
    rows.iter().map(|r| r.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, v)| v.clone()).collect()).collect()
}

/// The flights toy data used throughout the tests.
pub fn flights() -> Database {
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

pub fn rows_of(pairs: &[(i64, f64)]) -> Vec<Vec<Value>> {
    pairs.iter().map(|&(d, y)| vec![Value::Int(d), Value::Float(y)]).collect()
}

/// Outcome of one oracle case.
pub enum Oracle {
    Match,
    /// Native result too large to be a useful case; the caller draws again.
    Skipped,
    Mismatch(String),
}

/// Generate a database and query from `seed`, evaluate natively and through
/// the emitted SQL, and compare.
/// The random database and query tree used by `oracle_case(seed)`.
pub fn case_query(seed: u64) -> (Database, QueryExpr) {
    let mut rng = rng(seed);
    let db = random_db(&mut rng);
    let mut gen = QueryGen::new(&db);
    let depth = rng.gen_range(1..=3);
    let q = gen.query(&mut rng, depth);
    (db, q)
}

/// Aggregates and join kinds appearing anywhere in `q`.
pub fn operators_in(q: &QueryExpr, aggs: &mut Vec<AggFn>, joins: &mut Vec<JoinKind>) {
    match q {
        QueryExpr::Base { .. } | QueryExpr::Values { .. } => {}
        QueryExpr::Select { input, .. } | QueryExpr::Project { input, .. } => operators_in(input, aggs, joins),
        QueryExpr::GroupBy { agg, input, .. } => {
            aggs.push(*agg);
            operators_in(input, aggs, joins);
        }
        QueryExpr::Join { kind, left, right, .. } => {
            joins.push(*kind);
            operators_in(left, aggs, joins);
            operators_in(right, aggs, joins);
        }
        QueryExpr::Union { left, right } => {
            operators_in(left, aggs, joins);
            operators_in(right, aggs, joins);
        }
    }
}

/// Calendar sales: days 1-4 with profits 10..40, months M1 (days 1, 2) and
/// M2 (days 3, 4), and the `day -> month` hierarchy.
pub fn calendar() -> (Database, vca::Hierarchy) {
    let schema = Schema::new(vec![
        Attribute::dimension("day", DataType::Int),
        Attribute::dimension("month", DataType::String),
        Attribute::measure("profit", DataType::Float),
    ])
    .unwrap();
    let rows = [(1, "M1", 10.0), (2, "M1", 20.0), (3, "M2", 30.0), (4, "M2", 40.0)]
        .iter()
        .map(|&(d, m, p)| vec![Value::Int(d), Value::str(m), Value::Float(p)])
        .collect();
    let db = Database::new().with(Table::new("sales", schema, rows).unwrap()).unwrap();
    let h = vca::Hierarchy::register(vec![vca::relcore::Fd::new("day", "month")], Default::default(), &db).unwrap();
    (db, h)
}

pub fn oracle_case(seed: u64) -> Oracle {
    let (db, q) = case_query(seed);
    let (cols, native) = match vca::relalg::evaluate_described(&q, &db) {
        Ok(r) => r,
        Err(e) => return Oracle::Mismatch(format!("native evaluation failed: {e}\n{q:?}")),
    };
    if native.rows.len() > 20_000 {
        return Oracle::Skipped;
    }
    let sql = match vca::sqlgen::emit_sql(&q, &db) {
        Ok(s) => s.text,
        Err(e) => return Oracle::Mismatch(format!("emit_sql failed: {e}")),
    };
    let conn = sqlite_for(&db);
    let reference = match run_sql(&conn, &sql, &cols) {
        Ok(r) => r,
        Err(e) => return Oracle::Mismatch(format!("reference engine rejected SQL: {e}\n{sql}")),
    };
    if same_multiset(&native.rows, &reference) {
        Oracle::Match
    } else {
        let mut n = native.rows.clone();
        let mut r = reference;
        n.sort();
        r.sort();
        Oracle::Mismatch(format!("results differ\nquery: {q:?}\nsql: {sql}\nnative: {n:?}\nreference: {r:?}"))
    }
}

const NAMES: [&str; 12] =
    ["SFO", "oak_2", "_x", "not", "AND", "compose", "a b", "tick`name", "date", "null", "Zürich", "1st"];

fn name(rng: &mut Rng8) -> String {
    NAMES.choose(rng).unwrap().to_string()
}

fn dsl_literal(rng: &mut Rng8) -> Value {
    match rng.gen_range(0..6) {
        0 => Value::Int(rng.gen_range(-1000..1000)),
        1 => Value::Int(*[i64::MIN, i64::MAX, 0].choose(rng).unwrap()),
        2 => Value::Float(*[0.5, -2.25, 1e-7, 3.0, 1e300, -0.0, 123456.789].choose(rng).unwrap()),
        3 => Value::str(*["SFO", "it's", "", "\"q\"", "a`b"].choose(rng).unwrap()),
        4 => date(["2021-01-01", "1999-12-31"].choose(rng).unwrap()),
        _ => Value::Null,
    }
}

pub fn random_predicate(rng: &mut Rng8, depth: usize) -> Predicate {
    let pick = if depth == 0 { rng.gen_range(0..3) } else { rng.gen_range(0..6) };
    match pick {
        0 => Predicate::True,
        1 => {
            let op = *[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge].choose(rng).unwrap();
            Predicate::Cmp { attr: name(rng), op, value: dsl_literal(rng) }
        }
        2 => Predicate::In { attr: name(rng), values: (0..rng.gen_range(0..4)).map(|_| dsl_literal(rng)).collect() },
        3 => random_predicate(rng, depth - 1).and(random_predicate(rng, depth - 1)),
        4 => random_predicate(rng, depth - 1).or(random_predicate(rng, depth - 1)),
        _ => Predicate::Not { inner: Box::new(random_predicate(rng, depth - 1)) },
    }
}

fn random_opts(rng: &mut Rng8) -> HierOpts {
    HierOpts {
        reagg: rng.gen_bool(0.3).then(|| *AggFn::ALL.choose(rng).unwrap()),
        override_: rng.gen_bool(0.3),
    }
}

/// A random DSL syntax tree, covering every expression kind.
pub fn random_expr(rng: &mut Rng8, depth: usize) -> VcaExpr {
    if depth == 0 {
        return VcaExpr::view(name(rng));
    }
    let sub = |rng: &mut Rng8| Box::new(random_expr(rng, depth - 1));
    let kind = match rng.gen_range(0..10) {
        0 => ExprKind::ViewRef { name: name(rng) },
        1 => ExprKind::StatCompose {
            left: sub(rng),
            right: sub(rng),
            op: *[ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div].choose(rng).unwrap(),
            opts: if rng.gen_bool(0.5) { HierOpts::default() } else { random_opts(rng) },
        },
        2 => ExprKind::UnionCompose { left: sub(rng), right: sub(rng), opts: random_opts(rng) },
        3 => ExprKind::Extract { input: sub(rng), pred: random_predicate(rng, 2) },
        4 => ExprKind::Explode { input: sub(rng), attrs: (0..rng.gen_range(1..3)).map(|_| name(rng)).collect() },
        5 => ExprKind::Lift {
            input: sub(rng),
            model: ModelKind::Linear,
            ad: (0..rng.gen_range(0..3)).map(|_| name(rng)).collect(),
            ac: (0..rng.gen_range(0..2)).map(|_| name(rng)).collect(),
        },
        6 => ExprKind::ViewsetStat { input: sub(rng), agg: *AggFn::ALL.choose(rng).unwrap() },
        7 => ExprKind::ViewsetUnion { input: sub(rng) },
        8 => ExprKind::List { items: (0..rng.gen_range(0..4)).map(|_| random_expr(rng, depth - 1)).collect() },
        _ => ExprKind::StatCompose { left: sub(rng), right: sub(rng), op: ArithOp::Sub, opts: HierOpts::default() },
    };
    VcaExpr::new(kind)
}
