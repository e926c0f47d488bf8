//! The lift operator: per-group linear models over a view, their rendering
//! as views, and composition of views with models.

mod ols;

use std::collections::BTreeMap;
use std::str::FromStr;

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::compose::{compose_binary, extract, BinaryOp, Channel, ComposeOptions, Env, MarkType, Side, View, VisualMapping};
use crate::error::{Result, VcaError};
use crate::relalg::{describe, evaluate_described, AggFn, ColumnInfo, Lineage, MeasureType, Predicate, QueryExpr};
use crate::relcore::{Database, Role};
use crate::safety::{measures_compatible, reason, SafetyVerdict, Status};
use crate::value::{DataType, Value};

pub use ols::{fit as ols_fit, predict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
}

impl FromStr for ModelKind {
    type Err = VcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ModelKind::Linear),
            _ => Err(VcaError::UnsupportedConstruct(format!("model kind {s}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelParams {
    pub kind: ModelKind,
    /// `[intercept, w_1, ..., w_d]` in feature order.
    pub coefficients: Vec<f64>,
    pub train_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupModel {
    /// Values of the condition attributes.
    pub key: Vec<Value>,
    pub params: ModelParams,
}

/// A quantitative feature. Dates are encoded as day offsets from `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub column: ColumnInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<NaiveDate>,
    /// Observed `[min, max]` in encoded units.
    pub domain: (f64, f64),
}

impl Feature {
    fn encode(&self, v: &Value) -> Option<f64> {
        match (v, self.origin) {
            (Value::Date(d), Some(o)) => Some((*d - o).num_days() as f64),
            _ => v.as_f64(),
        }
    }

    fn decode(&self, x: f64) -> Value {
        match self.origin {
            Some(o) => Value::Date(o + chrono::Duration::days(x.round() as i64)),
            None => Value::Float(x),
        }
    }

    fn output_type(&self) -> DataType {
        match self.column.datatype {
            DataType::Date => DataType::Date,
            _ => DataType::Float,
        }
    }
}

/// `M(A_d, y | A_c)`: one fitted model per condition group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelView {
    pub v: u32,
    pub label: String,
    pub condition: Vec<ColumnInfo>,
    pub features: Vec<Feature>,
    pub models: Vec<GroupModel>,
    pub source_mapping: VisualMapping,
    pub measure_lineage: MeasureType,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ModelView {
    pub fn condition_names(&self) -> Vec<&str> {
        self.condition.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.column.name.as_str()).collect()
    }

    pub fn model_for(&self, key: &[Value]) -> Option<&ModelParams> {
        self.models.iter().find(|m| m.key == key).map(|m| &m.params)
    }
}

fn group_label(names: &[&str], key: &[Value]) -> String {
    let parts: Vec<String> = names.iter().zip(key).map(|(n, v)| format!("{n}={v}")).collect();
    format!("({})", parts.join(", "))
}

/// `↑_{M, A_d, A_c}(V)`: fit a linear model with intercept per `A_c` group.
///
/// Groups with too few rows or without feature variation are skipped with a
/// warning; it is an error only when no group can be fitted.
pub fn lift(v: &View, kind: ModelKind, ad: &[String], ac: &[String], db: &Database) -> Result<ModelView> {
    let (cols, table) = evaluate_described(&v.query, db)?;
    let find = |a: &String| -> Result<(usize, ColumnInfo)> {
        let (i, c) = cols
            .iter()
            .enumerate()
            .find(|(_, c)| &c.name == a)
            .ok_or_else(|| VcaError::UnknownAttribute(a.clone()))?;
        if c.role() != Role::Dimension {
            return Err(VcaError::NotAGroupingAttr(a.clone()));
        }
        Ok((i, c.clone()))
    };
    if let Some(a) = ad.iter().find(|a| ac.contains(a)) {
        return Err(VcaError::SchemaMismatch(format!("{a} is both a feature and a condition attribute")));
    }
    let ad_cols = ad.iter().map(find).collect::<Result<Vec<_>>>()?;
    let ac_cols = ac.iter().map(find).collect::<Result<Vec<_>>>()?;
    for (_, c) in &ad_cols {
        if !(c.datatype.is_numeric() || c.datatype == DataType::Date) {
            return Err(VcaError::NonQuantitativeFeature(c.name.clone()));
        }
    }
    let m = cols.iter().position(|c| c.role() == Role::Measure).expect("view has a measure");
    let measure_lineage = cols[m].measure_type().cloned().expect("measure column");

    let mut features: Vec<Feature> = ad_cols
        .iter()
        .map(|(i, c)| {
            let origin = (c.datatype == DataType::Date)
                .then(|| {
                    table.rows.iter().filter_map(|r| match r[*i] {
                        Value::Date(d) => Some(d),
                        _ => None,
                    })
                    .min()
                })
                .flatten();
            Feature { column: c.clone(), origin, domain: (f64::INFINITY, f64::NEG_INFINITY) }
        })
        .collect();

    // condition key -> (feature rows, targets)
    type Samples = (Vec<Vec<f64>>, Vec<f64>);
    let mut groups: BTreeMap<Vec<Value>, Samples> = BTreeMap::new();
    for row in &table.rows {
        let Some(y) = row[m].as_f64() else { continue };
        let x: Option<Vec<f64>> = ad_cols.iter().zip(&features).map(|((i, _), f)| f.encode(&row[*i])).collect();
        let Some(x) = x else { continue };
        for (f, xv) in features.iter_mut().zip(&x) {
            f.domain.0 = f.domain.0.min(*xv);
            f.domain.1 = f.domain.1.max(*xv);
        }
        let key: Vec<Value> = ac_cols.iter().map(|(i, _)| row[*i].clone()).collect();
        let entry = groups.entry(key).or_default();
        entry.0.push(x);
        entry.1.push(y);
    }

    let names: Vec<&str> = ac.iter().map(String::as_str).collect();
    let needed = ad.len() + 1;
    let mut models = Vec::new();
    let mut warnings = v.warnings.clone();
    let mut failures = Vec::new();
    for (key, (xs, ys)) in &groups {
        let label = group_label(&names, key);
        if ys.len() < needed {
            failures.push(VcaError::InsufficientRows { group: label, rows: ys.len(), needed });
            continue;
        }
        match ols::fit(xs, ys) {
            Some(fit) => {
                if fit.ridge {
                    warnings.push(format!("group {label}: singular normal equations, ridge fallback applied"));
                }
                models.push(GroupModel {
                    key: key.clone(),
                    params: ModelParams { kind, coefficients: fit.coefficients, train_count: ys.len() },
                });
            }
            None => failures.push(VcaError::SingularFit(label)),
        }
    }
    for f in &failures {
        warn!("lift skipped a group: {f}");
        warnings.push(format!("skipped: {f}"));
    }
    if models.is_empty() {
        return Err(match (groups.len(), failures.pop()) {
            (0, _) => VcaError::InsufficientRows { group: group_label(&names, &[]), rows: 0, needed },
            (1, Some(e)) => e,
            _ => VcaError::NoFittedGroups,
        });
    }
    let keep: Vec<&str> = ad.iter().chain(ac).map(String::as_str).collect();
    let mut source_mapping = v.mapping.retarget(
        &cols.iter().filter(|c| keep.contains(&c.name.as_str()) || c.role() == Role::Measure).cloned().collect::<Vec<_>>(),
        None,
    );
    let old_measure = cols[m].name.clone();
    if let Some(ch) = source_mapping.encodings.remove(&old_measure) {
        source_mapping.encodings.insert("y".into(), ch);
    }
    Ok(ModelView {
        v: 1,
        label: format!("lift({})", v.label),
        condition: ac_cols.into_iter().map(|(_, c)| c).collect(),
        features,
        models,
        source_mapping,
        measure_lineage,
        warnings,
    })
}

/// Samples per feature: `min(20, ⌊1000^(1/d)⌋)`, computed exactly.
pub fn samples_per_attr(d: usize) -> usize {
    if d == 0 {
        return 1;
    }
    let mut k = 1usize;
    while (k + 1).checked_pow(d as u32).is_some_and(|p| p <= 1000) {
        k += 1;
    }
    k.min(20)
}

/// Where to evaluate a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// The observed `[min, max]` of every feature.
    Observed,
    /// Caller-supplied `[min, max]` per feature, as values of the feature's type.
    Ranges(Vec<(Value, Value)>),
    /// Explicit feature tuples.
    Points(Vec<Vec<Value>>),
}

/// Equi-distant samples, inclusive of both endpoints, crossed over the
/// features. Returned as feature-value tuples.
pub fn sample_domain(mv: &ModelView, sampling: &Sampling) -> Result<Vec<Vec<Value>>> {
    let ranges: Vec<(f64, f64)> = match sampling {
        Sampling::Points(points) => return Ok(points.clone()),
        Sampling::Observed => mv.features.iter().map(|f| f.domain).collect(),
        Sampling::Ranges(rs) => {
            if rs.len() != mv.features.len() {
                return Err(VcaError::EmptyDomain(format!("{} ranges for {} features", rs.len(), mv.features.len())));
            }
            rs.iter()
                .zip(&mv.features)
                .map(|((lo, hi), f)| {
                    let lo = lo.coerce_to(f.column.datatype).and_then(|v| f.encode(&v));
                    let hi = hi.coerce_to(f.column.datatype).and_then(|v| f.encode(&v));
                    lo.zip(hi).ok_or_else(|| VcaError::EmptyDomain(f.column.name.clone()))
                })
                .collect::<Result<_>>()?
        }
    };
    let k = samples_per_attr(mv.features.len());
    let mut axes = Vec::with_capacity(ranges.len());
    for ((lo, hi), f) in ranges.iter().zip(&mv.features) {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(VcaError::EmptyDomain(f.column.name.clone()));
        }
        let mut axis: Vec<Value> = if lo == hi {
            vec![f.decode(*lo)]
        } else {
            (0..k).map(|i| f.decode(lo + (hi - lo) * i as f64 / (k - 1) as f64)).collect()
        };
        axis.dedup();
        axes.push(axis);
    }
    let mut out: Vec<Vec<Value>> = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

fn inline_view(
    name: &str,
    columns: Vec<ColumnInfo>,
    rows: Vec<Vec<Value>>,
    mapping: VisualMapping,
    old_measure: Option<&str>,
    label: String,
    warnings: Vec<String>,
) -> Result<View> {
    let keys: Vec<String> = columns.iter().filter(|c| c.role() == Role::Dimension).map(|c| c.name.clone()).collect();
    let query = QueryExpr::GroupBy {
        keys,
        agg: AggFn::Avg,
        measure: "y".into(),
        output: "y".into(),
        input: Box::new(QueryExpr::Values { name: name.into(), columns, rows }),
    };
    let cols = describe(&query, &Database::new())?;
    let mapping = mapping.retarget(&cols, old_measure);
    Ok(View { query, mapping, label, qid: None, warnings })
}

fn y_column(mv: &ModelView) -> ColumnInfo {
    ColumnInfo { name: "y".into(), datatype: DataType::Float, lineage: Lineage::Measure { ty: mv.measure_lineage.clone() } }
}

/// Predictions for every fitted group at every sample, as a line view.
pub fn render_model(mv: &ModelView, sampling: &Sampling) -> Result<View> {
    let points = sample_domain(mv, sampling)?;
    let mut rows = Vec::with_capacity(points.len() * mv.models.len());
    for m in &mv.models {
        for p in &points {
            let x: Option<Vec<f64>> =
                p.iter().zip(&mv.features).map(|(v, f)| v.coerce_to(f.column.datatype).and_then(|v| f.encode(&v))).collect();
            let x = x.ok_or_else(|| VcaError::EmptyDomain("sample outside the feature types".into()))?;
            let mut row = m.key.clone();
            row.extend(p.iter().zip(&mv.features).map(|(v, f)| match f.output_type() {
                DataType::Float => v.as_f64().map_or(Value::Null, Value::Float),
                _ => v.coerce_to(DataType::Date).unwrap_or(Value::Null),
            }));
            row.push(Value::Float(predict(&m.params.coefficients, &x)));
            rows.push(row);
        }
    }
    let mut columns = mv.condition.clone();
    columns.extend(mv.features.iter().map(|f| ColumnInfo { datatype: f.output_type(), ..f.column.clone() }));
    columns.push(y_column(mv));
    let mut mapping = mv.source_mapping.clone();
    mapping.mark = MarkType::Line;
    if !mapping.is_used(Channel::Y) {
        mapping.encodings.insert("y".into(), Channel::Y);
    }
    inline_view(&mv.label, columns, rows, mapping, None, mv.label.clone(), mv.warnings.clone())
}

fn model_verdict(cols: &[ColumnInfo], mv: &ModelView) -> SafetyVerdict {
    let mut reasons = Vec::new();
    let missing: Vec<&str> = mv
        .condition_names()
        .into_iter()
        .chain(mv.feature_names())
        .filter(|a| !cols.iter().any(|c| c.role() == Role::Dimension && c.name == *a))
        .collect();
    let measure = cols.iter().find(|c| c.role() == Role::Measure);
    let status = if !missing.is_empty() {
        reasons.push(format!("{}: view lacks model attributes {{{}}}", reason::DIMENSION_MISMATCH, missing.join(", ")));
        Status::Unsafe
    } else {
        match measure.and_then(|m| m.measure_type().map(|t| (m, t))) {
            Some((_, t)) if measures_compatible(t, &mv.measure_lineage) => Status::Safe,
            Some((m, t)) if m.datatype.is_numeric() => {
                reasons.push(format!("{}: measure types {t} and {} differ", reason::MEASURE_MISMATCH, mv.measure_lineage));
                Status::UnsafeOverridable
            }
            _ => {
                reasons.push(format!("{}: view measure is not comparable with the model", reason::NON_NUMERIC_MEASURE));
                Status::Unsafe
            }
        }
    };
    SafetyVerdict { v: 1, status, matching: None, diff_pair: None, reasons }
}

/// `V₁ ∘ V_M`: predict `y` for every row of `V₁` whose condition group has a
/// model, then compose as two views. `side` places the model operand.
pub fn compose_view_model(
    v1: &View,
    mv: &ModelView,
    op: BinaryOp,
    side: Side,
    opts: &ComposeOptions,
    env: Env,
) -> Result<View> {
    let (cols, table) = evaluate_described(&v1.query, env.db)?;
    let verdict = model_verdict(&cols, mv);
    if !verdict.permits(opts.override_) {
        return Err(VcaError::UnsafeComposition(Box::new(verdict)));
    }
    let dims: Vec<usize> = (0..cols.len()).filter(|&i| cols[i].role() == Role::Dimension).collect();
    let idx = |name: &str| cols.iter().position(|c| c.name == name).expect("checked by verdict");
    let ac: Vec<usize> = mv.condition_names().into_iter().map(idx).collect();
    let ad: Vec<usize> = mv.feature_names().into_iter().map(idx).collect();
    let mut rows = Vec::new();
    let mut dropped = 0usize;
    for row in &table.rows {
        let key: Vec<Value> = ac.iter().map(|&i| row[i].clone()).collect();
        let x: Option<Vec<f64>> = ad.iter().zip(&mv.features).map(|(&i, f)| f.encode(&row[i])).collect();
        match (mv.model_for(&key), x) {
            (Some(params), Some(x)) => {
                let mut out: Vec<Value> = dims.iter().map(|&i| row[i].clone()).collect();
                out.push(Value::Float(predict(&params.coefficients, &x)));
                rows.push(out);
            }
            _ => dropped += 1,
        }
    }
    if rows.is_empty() && !table.rows.is_empty() {
        return Err(VcaError::NoFittedGroups);
    }
    let mut warnings = mv.warnings.clone();
    if dropped > 0 {
        warnings.push(format!("{dropped} rows of {} have no fitted model and were excluded", v1.label));
    }
    if verdict.status == Status::UnsafeOverridable {
        warnings.push(format!("composition overridden: {}", verdict.reasons.join("; ")));
    }
    let old_measure = cols.iter().find(|c| c.role() == Role::Measure).map(|c| c.name.clone());
    let mut columns: Vec<ColumnInfo> = dims.iter().map(|&i| cols[i].clone()).collect();
    columns.push(y_column(mv));
    let model_view =
        inline_view(&mv.label, columns, rows, v1.mapping.clone(), old_measure.as_deref(), mv.label.clone(), warnings)?;
    // Keep only the condition groups that have a model on the view side too,
    // or the outer join brings the excluded rows back.
    let kept;
    let v1 = if dropped > 0 && !ac.is_empty() {
        let names = mv.condition_names();
        let pred = mv
            .models
            .iter()
            .filter(|m| !m.key.iter().any(Value::is_null))
            .map(|m| Predicate::all_eq(names.iter().map(|n| n.to_string()).zip(m.key.iter().cloned())))
            .reduce(Predicate::or)
            .ok_or(VcaError::NoFittedGroups)?;
        kept = extract(v1, &pred, env.db)?;
        &kept
    } else {
        v1
    };
    match side {
        Side::Right => compose_binary(v1, &model_view, op, opts, env),
        Side::Left => compose_binary(&model_view, v1, op, opts, env),
    }
}

/// `V_{M1} ∘ V_{M2}`: both models predict on one shared sample grid.
pub fn compose_model_model(
    mv1: &ModelView,
    mv2: &ModelView,
    op: BinaryOp,
    sampling: &Sampling,
    opts: &ComposeOptions,
    env: Env,
) -> Result<View> {
    let same_attrs = mv1.feature_names() == mv2.feature_names() && {
        let mut a = mv1.condition_names();
        let mut b = mv2.condition_names();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    };
    if !same_attrs {
        let verdict = SafetyVerdict {
            v: 1,
            status: Status::Unsafe,
            matching: None,
            diff_pair: None,
            reasons: vec![format!(
                "{}: models over [{}]|[{}] and [{}]|[{}]",
                reason::DIMENSION_MISMATCH,
                mv1.feature_names().join(", "),
                mv1.condition_names().join(", "),
                mv2.feature_names().join(", "),
                mv2.condition_names().join(", ")
            )],
        };
        return Err(VcaError::UnsafeComposition(Box::new(verdict)));
    }
    let shared = match sampling {
        Sampling::Observed => {
            let ranges = mv1
                .features
                .iter()
                .zip(&mv2.features)
                .map(|(f1, f2)| {
                    let lo = f1.decode(f1.domain.0).min(f2.decode(f2.domain.0));
                    let hi = f1.decode(f1.domain.1).max(f2.decode(f2.domain.1));
                    (lo, hi)
                })
                .collect();
            Sampling::Ranges(ranges)
        }
        other => other.clone(),
    };
    let points = sample_domain(mv1, &shared)?;
    let r1 = render_model(mv1, &Sampling::Points(points.clone()))?;
    let r2 = render_model(mv2, &Sampling::Points(points))?;
    compose_binary(&r1, &r2, op, opts, env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relalg::{Predicate, QueryExpr};
    use crate::relcore::{Attribute, Schema, Table};

    fn db(rows: &[(i64, &str, f64)]) -> Database {
        let schema = Schema::new(vec![
            Attribute::dimension("date", DataType::Int),
            Attribute::dimension("ampm", DataType::String),
            Attribute::measure("delay", DataType::Float),
        ])
        .unwrap();
        let rows = rows.iter().map(|&(d, a, y)| vec![Value::Int(d), Value::str(a), Value::Float(y)]).collect();
        Database::new().with(Table::new("t", schema, rows).unwrap()).unwrap()
    }

    fn view(db: &Database, keys: &[&str]) -> View {
        let q = QueryExpr::base("t").group_by(keys, AggFn::Avg, "delay", "y");
        View::with_default_mapping(q, MarkType::Point, "v", db).unwrap()
    }

    #[test]
    fn recovers_line() {
        let db = db(&[(1, "AM", 3.0), (2, "AM", 5.0), (3, "AM", 7.0)]);
        let mv = lift(&view(&db, &["date"]), ModelKind::Linear, &["date".into()], &[], &db).unwrap();
        let c = &mv.models[0].params.coefficients;
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 2.0).abs() < 1e-12);
        assert_eq!(mv.models[0].params.train_count, 3);
    }

    #[test]
    fn one_model_per_condition_group() {
        let db = db(&[(1, "AM", 1.0), (2, "AM", 2.0), (1, "PM", 5.0), (2, "PM", 3.0)]);
        let mv = lift(&view(&db, &["date", "ampm"]), ModelKind::Linear, &["date".into()], &["ampm".into()], &db).unwrap();
        assert_eq!(mv.models.len(), 2);
        assert!((mv.model_for(&[Value::str("PM")]).unwrap().coefficients[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn lift_errors() {
        let db = db(&[(1, "AM", 1.0)]);
        let v = view(&db, &["date", "ampm"]);
        assert!(matches!(
            lift(&v, ModelKind::Linear, &["ampm".into()], &[], &db),
            Err(VcaError::NonQuantitativeFeature(_))
        ));
        assert!(matches!(
            lift(&v, ModelKind::Linear, &["date".into()], &[], &db),
            Err(VcaError::InsufficientRows { rows: 1, needed: 2, .. })
        ));
        let empty = extract_none(&v, &db);
        assert!(lift(&empty, ModelKind::Linear, &["date".into()], &[], &db).is_err());
    }

    fn extract_none(v: &View, db: &Database) -> View {
        crate::compose::extract(v, &Predicate::eq("date", 99i64), db).unwrap()
    }

    #[test]
    fn sample_counts() {
        assert_eq!(samples_per_attr(1), 20);
        assert_eq!(samples_per_attr(2), 20);
        assert_eq!(samples_per_attr(3), 10);
        assert_eq!(samples_per_attr(4), 5);
        let db = db(&[(0, "AM", 1.0), (19, "AM", 2.0)]);
        let mv = lift(&view(&db, &["date"]), ModelKind::Linear, &["date".into()], &[], &db).unwrap();
        let s = sample_domain(&mv, &Sampling::Observed).unwrap();
        let want: Vec<Vec<Value>> = (0..20).map(|i| vec![Value::Float(i as f64)]).collect();
        assert_eq!(s, want);
        let s = sample_domain(&mv, &Sampling::Ranges(vec![(Value::Int(5), Value::Int(5))])).unwrap();
        assert_eq!(s, vec![vec![Value::Float(5.0)]]);
        assert!(matches!(
            sample_domain(&mv, &Sampling::Ranges(vec![(Value::Int(6), Value::Int(5))])),
            Err(VcaError::EmptyDomain(_))
        ));
    }

    #[test]
    fn render_and_residuals() {
        let db = db(&[(1, "AM", 3.0), (2, "AM", 5.0), (3, "AM", 7.0)]);
        let v = view(&db, &["date"]);
        let mv = lift(&v, ModelKind::Linear, &["date".into()], &[], &db).unwrap();
        let points: Vec<Vec<Value>> = (1..=3).map(|i| vec![Value::Int(i)]).collect();
        let r = render_model(&mv, &Sampling::Points(points)).unwrap();
        let rows = r.evaluate(&db).unwrap().sorted_rows();
        assert_eq!(rows.len(), 3);
        for (row, want) in rows.iter().zip([3.0, 5.0, 7.0]) {
            assert!((row[1].as_f64().unwrap() - want).abs() < 1e-12);
        }
        let env = Env::new(&db);
        let res = compose_view_model(&v, &mv, BinaryOp::Stat(crate::relalg::ArithOp::Sub), Side::Right, &ComposeOptions::default(), env)
            .unwrap();
        for row in res.evaluate(&db).unwrap().rows {
            assert!(row[1].as_f64().unwrap().abs() < 1e-12);
        }
    }
}
