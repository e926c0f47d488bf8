//! Composition and decomposition operators.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::compose::view::{Channel, View, ViewSet};
use crate::error::{Result, VcaError};
use crate::relalg::{
    canonicalize, describe, AggFn, ArithOp, CanonicalQuery, ColumnInfo, JoinCondition, JoinKind, Predicate,
    ProjectItem, QueryExpr, ScalarExpr, Translation,
};
use crate::relcore::{Database, Hierarchy, Role, TranslationMap};
use crate::safety::{match_columns, single_value_dims, Direction, DiffPair, MatchMode, SafetyVerdict, Status};
use crate::value::Value;

const RIGHT: &str = "__r_";

/// Data and hierarchy shared by every operator call.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    pub db: &'a Database,
    pub hierarchy: Option<&'a Hierarchy>,
}

impl<'a> Env<'a> {
    pub fn new(db: &'a Database) -> Self {
        Env { db, hierarchy: None }
    }

    pub fn with_hierarchy(db: &'a Database, h: &'a Hierarchy) -> Self {
        Env { db, hierarchy: Some(h) }
    }
}

/// Binary operator: statistical `⊙_op` or union `∪`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinaryOp {
    Stat(ArithOp),
    Union,
}

impl BinaryOp {
    pub fn is_symmetric(self) -> bool {
        match self {
            BinaryOp::Stat(op) => op.is_symmetric(),
            BinaryOp::Union => true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComposeOptions {
    /// Proceed with an `UnsafeOverridable` verdict.
    #[serde(default, rename = "override")]
    pub override_: bool,
    /// Reaggregation function for hierarchy Case 2.
    #[serde(default)]
    pub reagg: Option<AggFn>,
    /// Channel for the qid attribute of a union.
    #[serde(default)]
    pub channel: Option<Channel>,
}

impl ComposeOptions {
    pub fn overriding() -> Self {
        ComposeOptions { override_: true, ..Default::default() }
    }
}

/// Which operand a viewset or model sits on for asymmetric operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

fn dims_of(cols: &[ColumnInfo]) -> Vec<&ColumnInfo> {
    cols.iter().filter(|c| c.role() == Role::Dimension).collect()
}

fn measure_of(cols: &[ColumnInfo]) -> Result<&ColumnInfo> {
    cols.iter()
        .find(|c| c.role() == Role::Measure)
        .ok_or_else(|| VcaError::SchemaMismatch("view has no measure".into()))
}

fn fresh(base: &str, cols: &[ColumnInfo]) -> String {
    let taken: HashSet<&str> = cols.iter().map(|c| c.name.as_str()).collect();
    std::iter::once(base.to_string())
        .chain((2..).map(|i| format!("{base}{i}")))
        .find(|n| !taken.contains(n.as_str()))
        .expect("unbounded name supply")
}

fn check(verdict: SafetyVerdict, opts: &ComposeOptions) -> Result<Option<String>> {
    if verdict.permits(opts.override_) {
        Ok((verdict.status == Status::UnsafeOverridable)
            .then(|| format!("composition overridden: {}", verdict.reasons.join("; "))))
    } else {
        Err(VcaError::UnsafeComposition(Box::new(verdict)))
    }
}

fn rename_right(q: &QueryExpr, cols: &[ColumnInfo]) -> QueryExpr {
    q.clone().project(cols.iter().map(|c| ProjectItem::column(&c.name, &format!("{RIGHT}{}", c.name))).collect())
}

/// `π_{A, l.y op r.y → y}(l ⋈ r)`. `keys` pairs left and right dimension
/// names; for full joins the output keys coalesce both sides.
#[allow(clippy::too_many_arguments)]
fn stat_join(
    left: &QueryExpr,
    lcols: &[ColumnInfo],
    right: &QueryExpr,
    rcols: &[ColumnInfo],
    keys: &[(String, String)],
    translations: Vec<Translation>,
    kind: JoinKind,
    op: ArithOp,
) -> Result<QueryExpr> {
    let m1 = measure_of(lcols)?;
    let m2 = measure_of(rcols)?;
    let on = JoinCondition {
        equalities: keys.iter().map(|(l, r)| (l.clone(), format!("{RIGHT}{r}"))).collect(),
        translations: translations
            .into_iter()
            .map(|t| Translation { right: format!("{RIGHT}{}", t.right), ..t })
            .collect(),
    };
    let joined = left.clone().join(kind, on, rename_right(right, rcols));
    let mut items: Vec<ProjectItem> = dims_of(lcols)
        .into_iter()
        .map(|d| match keys.iter().find(|(l, _)| l == &d.name) {
            Some((l, r)) if kind == JoinKind::Full => ProjectItem::new(
                ScalarExpr::coalesce(vec![ScalarExpr::col(l), ScalarExpr::col(format!("{RIGHT}{r}"))]),
                l.clone(),
            ),
            _ => ProjectItem::column(&d.name, &d.name),
        })
        .collect();
    items.push(ProjectItem::new(
        ScalarExpr::arith(op, ScalarExpr::col(&m1.name), ScalarExpr::col(format!("{RIGHT}{}", m2.name))),
        "y",
    ));
    Ok(joined.project(items))
}

fn finish_stat(v1: &View, v2: &View, op: ArithOp, query: QueryExpr, warnings: Vec<String>, db: &Database) -> Result<View> {
    let cols = describe(&query, db)?;
    let old_measure = v1.measure(db)?.name;
    let mapping = v1.mapping.retarget(&cols, Some(&old_measure));
    let qid = v1.qid.clone().filter(|q| cols.iter().any(|c| &c.name == q));
    let mut all_warnings = v1.warnings.clone();
    all_warnings.extend(v2.warnings.iter().cloned());
    all_warnings.extend(warnings);
    Ok(View { query, mapping, label: format!("({} {} {})", v1.label, op, v2.label), qid, warnings: all_warnings })
}

/// Remove grouping attributes that hold a single value from `v`. Canonical
/// views are regrouped; others are projected.
pub fn drop_single_value_dims(v: &View, db: &Database) -> Result<View> {
    let drop = single_value_dims(v, db)?;
    if drop.is_empty() {
        return Ok(v.clone());
    }
    let query = match v.canonical() {
        Some(c) => {
            let keys = c.group_by.iter().filter(|k| !drop.contains(*k)).cloned().collect();
            c.with(c.pred.clone(), keys).to_query()
        }
        None => {
            let cols = v.columns(db)?;
            v.query.clone().project(
                cols.iter().filter(|c| !drop.contains(&c.name)).map(|c| ProjectItem::column(&c.name, &c.name)).collect(),
            )
        }
    };
    let cols = describe(&query, db)?;
    Ok(View { query, mapping: v.mapping.retarget(&cols, None), ..v.clone() })
}

/// Statistical composition `v1 ⊙_op v2`, without hierarchy.
///
/// Single-valued grouping attributes of `v2` are dropped first; if `v2`'s
/// dimensions then form a strict subset of `v1`'s, the nonexact form is used.
pub fn stat_compose(v1: &View, v2: &View, op: ArithOp, override_: bool, db: &Database) -> Result<View> {
    let opts = ComposeOptions { override_, ..Default::default() };
    compose_binary(v1, v2, BinaryOp::Stat(op), &opts, Env::new(db))
}

/// Exact-schema statistical composition: full outer join on all dimensions.
fn stat_exact(v1: &View, v2: &View, op: ArithOp, warnings: Vec<String>, db: &Database) -> Result<View> {
    let c1 = v1.columns(db)?;
    let c2 = v2.columns(db)?;
    let keys: Vec<(String, String)> = dims_of(&c1).iter().map(|d| (d.name.clone(), d.name.clone())).collect();
    let q = stat_join(&v1.query, &c1, &v2.query, &c2, &keys, Vec::new(), JoinKind::Full, op)?;
    finish_stat(v1, v2, op, q, warnings, db)
}

/// `π_{A¹, Q1.y op Q2.y}(Q1 ⟕_{A²} Q2)` where `dims(v2) ⊊ dims(v1)`.
pub fn stat_compose_nonexact(v1: &View, v2: &View, op: ArithOp, override_: bool, db: &Database) -> Result<View> {
    let c1 = v1.columns(db)?;
    let c2 = v2.columns(db)?;
    let verdict = match_columns(&c1, &c2, MatchMode::Superset, None);
    let d1: BTreeSet<&str> = dims_of(&c1).iter().map(|c| c.name.as_str()).collect();
    let d2: BTreeSet<&str> = dims_of(&c2).iter().map(|c| c.name.as_str()).collect();
    if d1 == d2 {
        return Err(VcaError::SchemaMismatch("nonexact composition needs dims(v2) strictly inside dims(v1)".into()));
    }
    let warning = check(verdict, &ComposeOptions { override_, ..Default::default() })?;
    nonexact(v1, v2, op, warning.into_iter().collect(), db)
}

fn nonexact(v1: &View, v2: &View, op: ArithOp, warnings: Vec<String>, db: &Database) -> Result<View> {
    let c1 = v1.columns(db)?;
    let c2 = v2.columns(db)?;
    let keys: Vec<(String, String)> = dims_of(&c2).iter().map(|d| (d.name.clone(), d.name.clone())).collect();
    let q = stat_join(&v1.query, &c1, &v2.query, &c2, &keys, Vec::new(), JoinKind::Left, op)?;
    finish_stat(v1, v2, op, q, warnings, db)
}

/// The verdict [`compose_binary`] acts on for `v1 op v2`: exact or
/// hierarchy matching, then superset matching for statistical operators.
pub fn composition_verdict(v1: &View, v2: &View, op: BinaryOp, env: Env) -> Result<SafetyVerdict> {
    let v2 = match op {
        BinaryOp::Stat(_) => drop_single_value_dims(v2, env.db)?,
        BinaryOp::Union => v2.clone(),
    };
    let c1 = v1.columns(env.db)?;
    let c2 = v2.columns(env.db)?;
    let exact = match_columns(&c1, &c2, MatchMode::Exact, env.hierarchy);
    if exact.matching.is_some() || op == BinaryOp::Union {
        return Ok(exact);
    }
    let sup = match_columns(&c1, &c2, MatchMode::Superset, None);
    Ok(if sup.matching.is_some() { sup } else { exact })
}

/// Full dispatch for a binary operator: plain, nonexact, or hierarchy-aware.
pub fn compose_binary(v1: &View, v2: &View, op: BinaryOp, opts: &ComposeOptions, env: Env) -> Result<View> {
    let db = env.db;
    match op {
        BinaryOp::Stat(arith) => {
            let v2 = drop_single_value_dims(v2, db)?;
            let c1 = v1.columns(db)?;
            let c2 = v2.columns(db)?;
            let exact = match_columns(&c1, &c2, MatchMode::Exact, env.hierarchy);
            if exact.matching.is_some() {
                let diff = exact.diff_pair.clone();
                let warning = check(exact, opts)?;
                return match diff {
                    Some(pair) => hier_stat(v1, &v2, arith, &pair, opts, warning, env),
                    None => stat_exact(v1, &v2, arith, warning.into_iter().collect(), db),
                };
            }
            let sup = match_columns(&c1, &c2, MatchMode::Superset, None);
            if sup.matching.is_some() {
                let warning = check(sup, opts)?;
                return nonexact(v1, &v2, arith, warning.into_iter().collect(), db);
            }
            Err(VcaError::UnsafeComposition(Box::new(exact)))
        }
        BinaryOp::Union => {
            let c1 = v1.columns(db)?;
            let c2 = v2.columns(db)?;
            let verdict = match_columns(&c1, &c2, MatchMode::Exact, env.hierarchy);
            let diff = verdict.diff_pair.clone();
            let warning = check(verdict, opts)?;
            match diff {
                Some(pair) => hier_union(v1, v2, &pair, opts, warning, env),
                None => union_unchecked(v1, v2, opts.channel, warning, db),
            }
        }
    }
}

/// Union composition `v1 ∪ v2` with a qid attribute distinguishing sources.
pub fn union_compose(v1: &View, v2: &View, opts: &ComposeOptions, db: &Database) -> Result<View> {
    let verdict = match_columns(&v1.columns(db)?, &v2.columns(db)?, MatchMode::Exact, None);
    let warning = check(verdict, opts)?;
    union_unchecked(v1, v2, opts.channel, warning, db)
}

fn union_unchecked(v1: &View, v2: &View, channel: Option<Channel>, warning: Option<String>, db: &Database) -> Result<View> {
    let mut out = union_all(&[v1.clone(), v2.clone()], channel, db)?;
    out.label = format!("union({}, {})", v1.label, v2.label);
    out.warnings.extend(warning);
    Ok(out)
}

/// Distinct qid labels: later duplicates get `#2`, `#3`, ...
fn qid_labels(views: &[View]) -> Vec<String> {
    let mut seen: HashSet<String> = HashSet::new();
    views
        .iter()
        .map(|v| {
            let label = std::iter::once(v.label.clone())
                .chain((2..).map(|i| format!("{}#{i}", v.label)))
                .find(|l| !seen.contains(l))
                .expect("unbounded label supply");
            seen.insert(label.clone());
            label
        })
        .collect()
}

/// Union of schema-matched views (names matched to the first view's).
/// Canonical members sharing one aggregate are merged below the group-by.
fn union_all(views: &[View], channel: Option<Channel>, db: &Database) -> Result<View> {
    let first = views.first().ok_or(VcaError::EmptyViewSet)?;
    let c1 = first.columns(db)?;
    let qid = fresh("qid", &c1);
    let labels = qid_labels(views);
    let dims: Vec<String> = dims_of(&c1).iter().map(|c| c.name.clone()).collect();
    let m1 = measure_of(&c1)?.clone();

    let channel = match channel {
        Some(ch) if first.mapping.is_used(ch) => {
            return Err(VcaError::InvalidMapping(format!("{ch} is already mapped")));
        }
        Some(ch) => ch,
        None => first.mapping.first_free_qid_channel().ok_or(VcaError::NoFreeVisualAttr)?,
    };

    let canon: Option<Vec<CanonicalQuery>> = views.iter().map(View::canonical).collect();
    let shared_agg = canon.as_ref().filter(|cs| cs.iter().all(|c| c.agg == cs[0].agg));
    let query = match shared_agg {
        Some(cs) => {
            let measure = cs[0].measure.clone();
            let parts = cs
                .iter()
                .zip(&labels)
                .map(|(c, label)| {
                    let mut items: Vec<ProjectItem> = dims.iter().map(|d| ProjectItem::column(d, d)).collect();
                    items.push(ProjectItem::new(ScalarExpr::lit(Value::str(label)), qid.clone()));
                    items.push(ProjectItem::column(&c.measure, &measure));
                    c.pre_aggregation().project(items)
                })
                .collect::<Vec<_>>();
            let mut keys = dims.clone();
            keys.push(qid.clone());
            QueryExpr::GroupBy {
                keys,
                agg: cs[0].agg,
                measure,
                output: cs[0].output.clone(),
                input: Box::new(union_chain(parts)),
            }
        }
        None => {
            let parts = views
                .iter()
                .zip(&labels)
                .map(|(v, label)| {
                    let cols = v.columns(db)?;
                    let mut items: Vec<ProjectItem> = dims.iter().map(|d| ProjectItem::column(d, d)).collect();
                    items.push(ProjectItem::new(ScalarExpr::lit(Value::str(label)), qid.clone()));
                    items.push(ProjectItem::column(&measure_of(&cols)?.name, &m1.name));
                    Ok(v.query.clone().project(items))
                })
                .collect::<Result<Vec<_>>>()?;
            union_chain(parts)
        }
    };
    let cols = describe(&query, db)?;
    let mut mapping = first.mapping.retarget(&cols, Some(&m1.name));
    mapping.encodings.insert(qid.clone(), channel);
    let warnings = views.iter().flat_map(|v| v.warnings.iter().cloned()).collect();
    Ok(View { query, mapping, label: first.label.clone(), qid: Some(qid), warnings })
}

fn union_chain(parts: Vec<QueryExpr>) -> QueryExpr {
    let mut iter = parts.into_iter();
    let first = iter.next().expect("at least one part");
    iter.fold(first, |acc, q| acc.union(q))
}

/// `↓_p(V)`. Filters on grouping attributes of canonical views are pushed
/// below the group-by so the result stays canonical.
pub fn extract(v: &View, p: &Predicate, db: &Database) -> Result<View> {
    let cols = v.columns(db)?;
    let resolved = p.resolve(&cols)?;
    let query = match v.canonical() {
        Some(c) if resolved.attrs().iter().all(|a| c.group_by.iter().any(|k| k == a)) => {
            c.with(c.pred.clone().and(resolved.clone()), c.group_by.clone()).to_query()
        }
        _ => match resolved {
            Predicate::True => v.query.clone(),
            _ => v.query.clone().select(resolved.clone()),
        },
    };
    let label = match p {
        Predicate::True => v.label.clone(),
        _ => format!("{}[{}]", v.label, p),
    };
    Ok(View { query, label, ..v.clone() })
}

/// `Ξ_{Ae}(V)`: one view per distinct combination of `Ae` values.
pub fn explode(v: &View, ae: &[String], db: &Database) -> Result<ViewSet> {
    let cols = v.columns(db)?;
    for a in ae {
        match cols.iter().find(|c| &c.name == a) {
            None => return Err(VcaError::UnknownAttribute(a.clone())),
            Some(c) if c.role() != Role::Dimension => return Err(VcaError::NotAGroupingAttr(a.clone())),
            Some(_) => {}
        }
    }
    if ae.is_empty() {
        return Ok(ViewSet::new(vec![v.clone()]));
    }
    let table = v.evaluate(db)?;
    let idx: Vec<usize> = ae.iter().map(|a| table.schema.index_of(a).expect("described column")).collect();
    let groups: BTreeSet<Vec<Value>> = table.rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect();
    let canon = v.canonical();
    let mut views = Vec::with_capacity(groups.len());
    for vals in groups {
        let pred = Predicate::all_eq(ae.iter().cloned().zip(vals.iter().cloned()));
        let query = match &canon {
            Some(c) => {
                let keys = c.group_by.iter().filter(|k| !ae.contains(k)).cloned().collect();
                c.with(c.pred.clone().and(pred), keys).to_query()
            }
            None => v.query.clone().select(pred).project(
                cols.iter().filter(|c| !ae.contains(&c.name)).map(|c| ProjectItem::column(&c.name, &c.name)).collect(),
            ),
        };
        let out_cols = describe(&query, db)?;
        let label = vals.iter().map(Value::to_string).collect::<Vec<_>>().join(", ");
        views.push(View {
            mapping: v.mapping.retarget(&out_cols, None),
            query,
            label,
            qid: v.qid.clone().filter(|q| !ae.contains(q)),
            warnings: v.warnings.clone(),
        });
    }
    Ok(ViewSet::new(views))
}

fn check_viewset(vs: &ViewSet, db: &Database) -> Result<Vec<Vec<ColumnInfo>>> {
    let first = vs.views.first().ok_or(VcaError::EmptyViewSet)?;
    let c1 = first.columns(db)?;
    let mut all = vec![c1.clone()];
    for (i, v) in vs.views.iter().enumerate().skip(1) {
        let ci = v.columns(db).map_err(|e| VcaError::Member { index: i, source: Box::new(e) })?;
        let verdict = match_columns(&c1, &ci, MatchMode::Nary, None);
        if !verdict.is_safe() {
            return Err(VcaError::Member { index: i, source: Box::new(VcaError::UnsafeComposition(Box::new(verdict))) });
        }
        all.push(ci);
    }
    Ok(all)
}

/// `⊙_{f*}(𝕍)`: union the pre-aggregation rows of every member, then
/// aggregate once. Attributes single-valued in each member are dropped.
pub fn viewset_stat(vs: &ViewSet, f: AggFn, db: &Database) -> Result<View> {
    let canon = vs
        .views
        .iter()
        .enumerate()
        .map(|(i, v)| {
            canonicalize(&v.query).map_err(|_| VcaError::Member {
                index: i,
                source: Box::new(VcaError::NonCanonicalView(v.label.clone())),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cols = check_viewset(vs, db)?;
    let first = &vs.views[0];
    let mut drop: Option<BTreeSet<String>> = None;
    for v in &vs.views {
        let s = single_value_dims(v, db)?;
        drop = Some(match drop {
            None => s,
            Some(d) => d.intersection(&s).cloned().collect(),
        });
    }
    let drop = drop.unwrap_or_default();
    let keys: Vec<String> = dims_of(&cols[0]).iter().map(|c| c.name.clone()).filter(|k| !drop.contains(k)).collect();
    let measure = canon[0].measure.clone();
    let parts = canon
        .iter()
        .map(|c| {
            let mut items: Vec<ProjectItem> = keys.iter().map(|k| ProjectItem::column(k, k)).collect();
            items.push(ProjectItem::column(&c.measure, &measure));
            c.pre_aggregation().project(items)
        })
        .collect();
    let query = QueryExpr::GroupBy {
        keys,
        agg: f,
        measure,
        output: "y".into(),
        input: Box::new(union_chain(parts)),
    };
    let out_cols = describe(&query, db)?;
    let old = measure_of(&cols[0])?.name.clone();
    let labels: Vec<&str> = vs.views.iter().map(|v| v.label.as_str()).collect();
    Ok(View {
        mapping: first.mapping.retarget(&out_cols, Some(&old)),
        query,
        label: format!("{f}({})", labels.join(", ")),
        qid: None,
        warnings: vs.views.iter().flat_map(|v| v.warnings.iter().cloned()).collect(),
    })
}

/// `∪(𝕍)`.
pub fn viewset_union(vs: &ViewSet, db: &Database) -> Result<View> {
    check_viewset(vs, db)?;
    let mut out = union_all(&vs.views, None, db)?;
    let labels: Vec<&str> = vs.views.iter().map(|v| v.label.as_str()).collect();
    out.label = format!("union({})", labels.join(", "));
    Ok(out)
}

/// `𝕍 ∘ V` (or `V ∘ 𝕍` when `side` is `Right`): elementwise composition.
pub fn viewset_view(vs: &ViewSet, v: &View, op: BinaryOp, side: Side, opts: &ComposeOptions, env: Env) -> Result<ViewSet> {
    let views = vs
        .views
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let r = match side {
                Side::Left => compose_binary(m, v, op, opts, env),
                Side::Right => compose_binary(v, m, op, opts, env),
            };
            r.map_err(|e| VcaError::Member { index: i, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ViewSet::new(views))
}

/// `𝕍₁ ∘ 𝕍₂`: every pair, in row-major order.
pub fn viewset_cross(a: &ViewSet, b: &ViewSet, op: BinaryOp, opts: &ComposeOptions, env: Env) -> Result<ViewSet> {
    let mut views = Vec::with_capacity(a.len() * b.len());
    for (i, l) in a.views.iter().enumerate() {
        for (j, r) in b.views.iter().enumerate() {
            let v = compose_binary(l, r, op, opts, env)
                .map_err(|e| VcaError::Member { index: i * b.len() + j, source: Box::new(e) })?;
            views.push(v);
        }
    }
    Ok(ViewSet::new(views))
}

fn require_hierarchy<'a>(env: Env<'a>) -> Result<&'a Hierarchy> {
    env.hierarchy.ok_or_else(|| VcaError::UnsupportedConstruct("hierarchy composition without a hierarchy".into()))
}

/// Hierarchy-aware statistical composition. The case follows from the FD
/// direction between the differing attributes.
pub fn hier_stat_compose(v1: &View, v2: &View, op: ArithOp, opts: &ComposeOptions, env: Env) -> Result<View> {
    let h = require_hierarchy(env)?;
    let v2 = drop_single_value_dims(v2, env.db)?;
    let verdict = match_columns(&v1.columns(env.db)?, &v2.columns(env.db)?, MatchMode::Exact, Some(h));
    let pair = verdict.diff_pair.clone();
    let warning = check(verdict, opts)?;
    match pair {
        Some(pair) => hier_stat(v1, &v2, op, &pair, opts, warning, env),
        None => stat_exact(v1, &v2, op, warning.into_iter().collect(), env.db),
    }
}

fn hier_stat(
    v1: &View,
    v2: &View,
    op: ArithOp,
    pair: &DiffPair,
    opts: &ComposeOptions,
    warning: Option<String>,
    env: Env,
) -> Result<View> {
    let db = env.db;
    let h = require_hierarchy(env)?;
    let c1 = v1.columns(db)?;
    let c2 = v2.columns(db)?;
    match pair.direction {
        Direction::FineToCoarse => {
            let map = h.translation_map(&pair.left, &pair.right, db)?;
            let keys: Vec<(String, String)> = dims_of(&c1)
                .iter()
                .filter(|d| d.name != pair.left)
                .map(|d| (d.name.clone(), d.name.clone()))
                .collect();
            let tr = Translation { left: pair.left.clone(), right: pair.right.clone(), map };
            let q = stat_join(&v1.query, &c1, &v2.query, &c2, &keys, vec![tr], JoinKind::Full, op)?;
            finish_stat(v1, v2, op, q, warning.into_iter().collect(), db)
        }
        Direction::CoarseToFine => {
            let c = canonicalize(&v2.query).map_err(|_| VcaError::NonCanonicalView(v2.label.clone()))?;
            let agg = opts.reagg.unwrap_or(c.agg);
            let keys: Vec<String> = dims_of(&c1).iter().map(|d| d.name.clone()).collect();
            let q2 = reaggregate(&c, &pair.right, &pair.left, &keys, agg, env)?;
            let v2r = View { query: q2, ..v2.clone() };
            stat_exact(v1, &v2r, op, warning.into_iter().collect(), db)
        }
    }
}

/// `γ_{keys, agg(a_y)}(σ_p(D))` where `keys` mention the coarser `coarse`
/// in place of `fine`. Sources lacking `coarse` are joined with the
/// translation map.
fn reaggregate(c: &CanonicalQuery, fine: &str, coarse: &str, keys: &[String], agg: AggFn, env: Env) -> Result<QueryExpr> {
    let db = env.db;
    let h = require_hierarchy(env)?;
    let pre = c.pre_aggregation();
    let pre_cols = describe(&pre, db)?;
    let input = if pre_cols.iter().any(|col| col.name == coarse) {
        pre
    } else {
        let map = h.translation_map(fine, coarse, db)?;
        let fine_col = pre_cols
            .iter()
            .find(|col| col.name == fine)
            .ok_or_else(|| VcaError::NonCanonicalView(format!("source lacks {fine}")))?;
        let coarse_type = map
            .pairs
            .values()
            .find_map(Value::datatype)
            .or_else(|| db.hosts_of(coarse).next().and_then(|t| t.schema.get(coarse)).map(|a| a.datatype))
            .ok_or_else(|| VcaError::UnknownAttribute(coarse.to_string()))?;
        let map_fine = fresh(&format!("__map_{fine}"), &pre_cols);
        let values = map_values(&map, &map_fine, fine_col, coarse, coarse_type);
        pre.join(JoinKind::Inner, JoinCondition::on([(fine.to_string(), map_fine)]), values)
    };
    Ok(QueryExpr::GroupBy {
        keys: keys.to_vec(),
        agg,
        measure: c.measure.clone(),
        output: c.output.clone(),
        input: Box::new(input),
    })
}

fn map_values(map: &TranslationMap, fine_name: &str, fine: &ColumnInfo, coarse: &str, coarse_type: crate::value::DataType) -> QueryExpr {
    QueryExpr::Values {
        name: format!("{}_to_{}", map.fine, map.coarse),
        columns: vec![
            ColumnInfo { name: fine_name.to_string(), datatype: fine.datatype, lineage: crate::relalg::Lineage::Synthetic },
            ColumnInfo::dimension(coarse, coarse_type),
        ],
        rows: map.pairs.iter().map(|(f, c)| vec![f.clone(), c.clone()]).collect(),
    }
}

/// Hierarchy-aware union composition.
pub fn hier_union_compose(v1: &View, v2: &View, opts: &ComposeOptions, env: Env) -> Result<View> {
    let h = require_hierarchy(env)?;
    let verdict = match_columns(&v1.columns(env.db)?, &v2.columns(env.db)?, MatchMode::Exact, Some(h));
    let pair = verdict.diff_pair.clone();
    let warning = check(verdict, opts)?;
    match pair {
        Some(pair) => hier_union(v1, v2, &pair, opts, warning, env),
        None => union_unchecked(v1, v2, opts.channel, warning, env.db),
    }
}

fn hier_union(
    v1: &View,
    v2: &View,
    pair: &DiffPair,
    opts: &ComposeOptions,
    warning: Option<String>,
    env: Env,
) -> Result<View> {
    let db = env.db;
    let h = require_hierarchy(env)?;
    let c1 = v1.columns(db)?;
    let c2 = v2.columns(db)?;
    let v2r = match pair.direction {
        Direction::FineToCoarse if v2.canonical().is_some() => {
            // Regroup Q2's pre-aggregation rows under every Q1 key that
            // translates to their coarse value, which keeps the result canonical.
            let c = v2.canonical().expect("checked by guard");
            let map = h.translation_map(&pair.left, &pair.right, db)?;
            let d1: Vec<ColumnInfo> = dims_of(&c1).into_iter().cloned().collect();
            let idx: Vec<usize> = d1.iter().map(|d| c1.iter().position(|c| c.name == d.name).unwrap()).collect();
            let keys: BTreeSet<Vec<Value>> =
                v1.evaluate(db)?.rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect();
            let key_rel = QueryExpr::Values {
                name: format!("{}_keys", v1.label),
                columns: d1.clone(),
                rows: keys.into_iter().collect(),
            };
            let pre = c.pre_aggregation();
            let pre_cols = describe(&pre, db)?;
            let on = JoinCondition {
                equalities: d1
                    .iter()
                    .filter(|d| d.name != pair.left)
                    .map(|d| (d.name.clone(), format!("{RIGHT}{}", d.name)))
                    .collect(),
                translations: vec![Translation { left: pair.left.clone(), right: format!("{RIGHT}{}", pair.right), map }],
            };
            let joined = key_rel.join(JoinKind::Inner, on, rename_right(&pre, &pre_cols));
            let query = QueryExpr::GroupBy {
                keys: d1.iter().map(|d| d.name.clone()).collect(),
                agg: c.agg,
                measure: format!("{RIGHT}{}", c.measure),
                output: c.output.clone(),
                input: Box::new(joined),
            };
            View { query, ..v2.clone() }
        }
        Direction::FineToCoarse => {
            // Each Q2 row is repeated for every Q1 group that translates to it.
            let map = h.translation_map(&pair.left, &pair.right, db)?;
            let d1 = dims_of(&c1);
            let keys_only = v1.query.clone().project(d1.iter().map(|d| ProjectItem::column(&d.name, &d.name)).collect());
            let shared: Vec<(String, String)> = d1
                .iter()
                .filter(|d| d.name != pair.left)
                .map(|d| (d.name.clone(), format!("{RIGHT}{}", d.name)))
                .collect();
            let on = JoinCondition {
                equalities: shared,
                translations: vec![Translation { left: pair.left.clone(), right: format!("{RIGHT}{}", pair.right), map }],
            };
            let joined = keys_only.join(JoinKind::Left, on, rename_right(&v2.query, &c2));
            let m2 = measure_of(&c2)?;
            let mut items: Vec<ProjectItem> = d1.iter().map(|d| ProjectItem::column(&d.name, &d.name)).collect();
            items.push(ProjectItem::column(&format!("{RIGHT}{}", m2.name), &m2.name));
            View { query: joined.project(items), ..v2.clone() }
        }
        Direction::CoarseToFine => {
            let c = canonicalize(&v2.query).map_err(|_| VcaError::NonCanonicalView(v2.label.clone()))?;
            let agg = opts.reagg.or_else(|| v1.canonical().map(|c1| c1.agg)).unwrap_or(c.agg);
            let keys: Vec<String> = dims_of(&c1).iter().map(|d| d.name.clone()).collect();
            View { query: reaggregate(&c, &pair.right, &pair.left, &keys, agg, env)?, ..v2.clone() }
        }
    };
    let mut out = union_all(&[v1.clone(), v2r], opts.channel, db)?;
    out.label = format!("union({}, {})", v1.label, v2.label);
    out.warnings.extend(warning);
    Ok(out)
}
