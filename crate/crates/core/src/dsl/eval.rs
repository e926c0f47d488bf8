use std::collections::BTreeMap;

use serde::Serialize;

use crate::compose::{
    compose_binary, explode, extract, viewset_cross, viewset_stat, viewset_union, viewset_view, BinaryOp,
    ComposeOptions, Env, Side, View, ViewSet,
};
use crate::dsl::{parse, ExprKind, HierOpts, VcaExpr};
use crate::error::{Result, VcaError};
use crate::modelview::{compose_model_model, compose_view_model, lift, ModelView, Sampling};
use crate::relcore::{Database, Hierarchy};

/// Named views, data and hierarchy an expression is evaluated against.
#[derive(Debug, Clone, Copy)]
pub struct DslEnv<'a> {
    pub db: &'a Database,
    pub hierarchy: Option<&'a Hierarchy>,
    pub views: &'a BTreeMap<String, View>,
    /// Treat every composition as if it carried `override`.
    pub override_all: bool,
}

impl<'a> DslEnv<'a> {
    pub fn new(db: &'a Database, views: &'a BTreeMap<String, View>) -> Self {
        DslEnv { db, hierarchy: None, views, override_all: false }
    }

    pub fn with_hierarchy(mut self, h: &'a Hierarchy) -> Self {
        self.hierarchy = Some(h);
        self
    }

    fn ops_env(&self) -> Env<'a> {
        Env { db: self.db, hierarchy: self.hierarchy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum EvalValue {
    View(View),
    ViewSet(ViewSet),
    Model(ModelView),
}

impl EvalValue {
    fn kind(&self) -> &'static str {
        match self {
            EvalValue::View(_) => "a view",
            EvalValue::ViewSet(_) => "a viewset",
            EvalValue::Model(_) => "a model view",
        }
    }

    pub fn into_view(self) -> Result<View> {
        match self {
            EvalValue::View(v) => Ok(v),
            other => Err(VcaError::TypeError(format!("expected a view, got {}", other.kind()))),
        }
    }

    pub fn into_viewset(self) -> Result<ViewSet> {
        match self {
            EvalValue::ViewSet(vs) => Ok(vs),
            other => Err(VcaError::TypeError(format!("expected a viewset, got {}", other.kind()))),
        }
    }

    pub fn into_model(self) -> Result<ModelView> {
        match self {
            EvalValue::Model(m) => Ok(m),
            other => Err(VcaError::TypeError(format!("expected a model view, got {}", other.kind()))),
        }
    }
}

/// Parse and evaluate.
pub fn eval_str(text: &str, env: &DslEnv) -> Result<EvalValue> {
    eval_expr(&parse(text)?, env)
}

pub fn eval_expr(e: &VcaExpr, env: &DslEnv) -> Result<EvalValue> {
    eval_node(e, env).map_err(|err| match err {
        VcaError::At { .. } | VcaError::Syntax(_) => err,
        other => VcaError::At { span: e.span, source: Box::new(other) },
    })
}

fn options(opts: &HierOpts, env: &DslEnv) -> ComposeOptions {
    ComposeOptions { override_: opts.override_ || env.override_all, reagg: opts.reagg, channel: None }
}

fn eval_node(e: &VcaExpr, env: &DslEnv) -> Result<EvalValue> {
    let db = env.db;
    match &e.kind {
        ExprKind::ViewRef { name } => {
            env.views.get(name).cloned().map(EvalValue::View).ok_or_else(|| VcaError::UnboundView(name.clone()))
        }
        ExprKind::StatCompose { left, right, op, opts } => {
            binary(eval_expr(left, env)?, eval_expr(right, env)?, BinaryOp::Stat(*op), &options(opts, env), env)
        }
        ExprKind::UnionCompose { left, right, opts } => {
            binary(eval_expr(left, env)?, eval_expr(right, env)?, BinaryOp::Union, &options(opts, env), env)
        }
        ExprKind::Extract { input, pred } => match eval_expr(input, env)? {
            EvalValue::View(v) => Ok(EvalValue::View(extract(&v, pred, db)?)),
            EvalValue::ViewSet(vs) => {
                let views = vs
                    .views
                    .iter()
                    .enumerate()
                    .map(|(i, v)| extract(v, pred, db).map_err(|e| VcaError::Member { index: i, source: Box::new(e) }))
                    .collect::<Result<Vec<_>>>()?;
                Ok(EvalValue::ViewSet(ViewSet::new(views)))
            }
            other => Err(VcaError::TypeError(format!("extract expects a view or viewset, got {}", other.kind()))),
        },
        ExprKind::Explode { input, attrs } => {
            let v = eval_expr(input, env)?.into_view()?;
            Ok(EvalValue::ViewSet(explode(&v, attrs, db)?))
        }
        ExprKind::Lift { input, model, ad, ac } => {
            let v = eval_expr(input, env)?.into_view()?;
            Ok(EvalValue::Model(lift(&v, *model, ad, ac, db)?))
        }
        ExprKind::ViewsetStat { input, agg } => {
            let vs = viewset_arg(input, env)?;
            Ok(EvalValue::View(viewset_stat(&vs, *agg, db)?))
        }
        ExprKind::ViewsetUnion { input } => {
            let vs = viewset_arg(input, env)?;
            Ok(EvalValue::View(viewset_union(&vs, db)?))
        }
        ExprKind::List { items } => {
            let mut views = Vec::new();
            for item in items {
                match eval_expr(item, env)? {
                    EvalValue::View(v) => views.push(v),
                    EvalValue::ViewSet(vs) => views.extend(vs.views),
                    EvalValue::Model(_) => {
                        return Err(VcaError::At {
                            span: item.span,
                            source: Box::new(VcaError::TypeError("a viewset cannot contain a model view".into())),
                        })
                    }
                }
            }
            Ok(EvalValue::ViewSet(ViewSet::new(views)))
        }
    }
}

fn viewset_arg(input: &VcaExpr, env: &DslEnv) -> Result<ViewSet> {
    match eval_expr(input, env)? {
        EvalValue::ViewSet(vs) => Ok(vs),
        EvalValue::View(_) => Err(VcaError::TypeError("expected a viewset such as [A, B] or explode(...)".into())),
        other => other.into_viewset(),
    }
}

fn binary(l: EvalValue, r: EvalValue, op: BinaryOp, opts: &ComposeOptions, env: &DslEnv) -> Result<EvalValue> {
    use EvalValue::*;
    let ops = env.ops_env();
    Ok(match (l, r) {
        (View(a), View(b)) => View(compose_binary(&a, &b, op, opts, ops)?),
        (ViewSet(a), View(b)) => ViewSet(viewset_view(&a, &b, op, Side::Left, opts, ops)?),
        (View(a), ViewSet(b)) => ViewSet(viewset_view(&b, &a, op, Side::Right, opts, ops)?),
        (ViewSet(a), ViewSet(b)) => ViewSet(viewset_cross(&a, &b, op, opts, ops)?),
        (View(a), Model(m)) => View(compose_view_model(&a, &m, op, Side::Right, opts, ops)?),
        (Model(m), View(b)) => View(compose_view_model(&b, &m, op, Side::Left, opts, ops)?),
        (Model(a), Model(b)) => View(compose_model_model(&a, &b, op, &Sampling::Observed, opts, ops)?),
        (ViewSet(vs), Model(m)) | (Model(m), ViewSet(vs)) => {
            return Err(VcaError::TypeError(format!(
                "cannot compose a viewset of {} views with model view {}; compose members individually",
                vs.len(),
                m.label
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::MarkType;
    use crate::relalg::{AggFn, Predicate, QueryExpr};
    use crate::relcore::{Attribute, Schema, Table};
    use crate::value::{DataType, Value};

    fn setup() -> (Database, BTreeMap<String, View>) {
        let schema = Schema::new(vec![
            Attribute::dimension("date", DataType::Int),
            Attribute::dimension("src", DataType::String),
            Attribute::measure("delay", DataType::Float),
        ])
        .unwrap();
        let rows = [(1, "SFO", 10.0), (2, "SFO", 5.0), (3, "SFO", 20.0), (1, "OAK", 4.0), (2, "OAK", 10.0), (3, "OAK", 8.0)]
            .iter()
            .map(|&(d, s, y)| vec![Value::Int(d), Value::str(s), Value::Float(y)])
            .collect();
        let db = Database::new().with(Table::new("flights", schema, rows).unwrap()).unwrap();
        let mut views = BTreeMap::new();
        for src in ["SFO", "OAK"] {
            let q = QueryExpr::base("flights").select(Predicate::eq("src", src)).group_by(&["date"], AggFn::Avg, "delay", "y");
            views.insert(src.to_string(), View::with_default_mapping(q, MarkType::Bar, src, &db).unwrap());
        }
        let all = QueryExpr::base("flights").group_by(&["date", "src"], AggFn::Avg, "delay", "y");
        views.insert("ALL".into(), View::with_default_mapping(all, MarkType::Bar, "ALL", &db).unwrap());
        (db, views)
    }

    fn rows(v: &View, db: &Database) -> Vec<Vec<Value>> {
        v.evaluate(db).unwrap().sorted_rows()
    }

    #[test]
    fn difference() {
        let (db, views) = setup();
        let env = DslEnv::new(&db, &views);
        let v = eval_str("SFO - OAK", &env).unwrap().into_view().unwrap();
        let want: Vec<Vec<Value>> =
            [(1, 6.0), (2, -5.0), (3, 12.0)].iter().map(|&(d, y)| vec![Value::Int(d), Value::Float(y)]).collect();
        assert_eq!(rows(&v, &db), want);
        let z = eval_str("(SFO - OAK) - (SFO - OAK)", &env).unwrap().into_view().unwrap();
        assert!(rows(&z, &db).iter().all(|r| r[1] == Value::Float(0.0)));
    }

    #[test]
    fn viewset_forms() {
        let (db, views) = setup();
        let env = DslEnv::new(&db, &views);
        let direct = viewset_stat(&ViewSet::new(vec![views["SFO"].clone(), views["OAK"].clone()]), AggFn::Avg, &db).unwrap();
        let v = eval_str("stat([SFO, OAK], avg)", &env).unwrap().into_view().unwrap();
        assert_eq!(rows(&v, &db), rows(&direct, &db));
        let u = eval_str("union(explode(ALL, src))", &env).unwrap().into_view().unwrap();
        assert_eq!(rows(&u, &db).len(), 6);
        let vs = eval_str("explode(ALL, src) - SFO", &env).unwrap().into_viewset().unwrap();
        assert_eq!(vs.len(), 2);
    }

    #[test]
    fn errors_carry_spans() {
        let (db, views) = setup();
        let env = DslEnv::new(&db, &views);
        let err = eval_str("SFO - NOPE", &env).unwrap_err();
        let VcaError::At { span, source } = &err else { panic!("{err}") };
        assert_eq!(span.col, 7);
        assert!(matches!(**source, VcaError::UnboundView(_)));
        assert!(matches!(eval_str("explode(SFO, src)", &env).unwrap_err().root(), VcaError::UnknownAttribute(_)));
        assert!(matches!(eval_str("explode(SFO, y)", &env).unwrap_err().root(), VcaError::NotAGroupingAttr(_)));
        assert!(matches!(eval_str("stat(SFO, avg)", &env).unwrap_err().root(), VcaError::TypeError(_)));
    }

    #[test]
    fn model_composition() {
        let (db, views) = setup();
        let env = DslEnv::new(&db, &views);
        let m = eval_str("lift(SFO, linear, [date], [])", &env).unwrap().into_model().unwrap();
        assert_eq!(m.models.len(), 1);
        let residual = eval_str("SFO - lift(SFO, linear, [date])", &env).unwrap().into_view().unwrap();
        let sum: f64 = rows(&residual, &db).iter().map(|r| r[1].as_f64().unwrap()).sum();
        assert!(sum.abs() < 1e-9);
        let zero = eval_str("lift(SFO, linear, [date]) - lift(SFO, linear, [date])", &env).unwrap().into_view().unwrap();
        assert!(rows(&zero, &db).iter().all(|r| r[1].as_f64().unwrap().abs() < 1e-12));
    }
}
