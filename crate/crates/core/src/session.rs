//! A working set of tables, named views and an optional hierarchy, as shared
//! by the command line and the HTTP service.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compose::{chart_spec, composition_verdict, explode, extract, BinaryOp, ChartSpec, Env, View, ViewDef};
use crate::dsl::{eval_expr, parse, DslEnv, EvalValue, ExprKind, VcaExpr};
use crate::error::{Result, VcaError};
use crate::modelview::{render_model, Sampling};
use crate::relalg::Predicate;
use crate::relcore::{read_csv, Database, Fd, Hierarchy, Role, RoleHints, Table};
use crate::safety::SafetyVerdict;
use crate::value::Value;

/// Hierarchy file format: `{"fds": [{"from": "day", "to": "month"}], "attrTables": {}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HierarchyDef {
    pub fds: Vec<Fd>,
    #[serde(default)]
    pub attr_tables: BTreeMap<String, String>,
}

/// A decomposition request against a named view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Decompose {
    /// Rows matching a predicate in the expression language.
    Extract { pred: String },
    /// The single row whose dimensions equal `key`.
    Mark { key: BTreeMap<String, Value> },
    /// One view per distinct combination of `attrs`.
    Explode { attrs: Vec<String> },
}

/// A table rendered for output: column names plus rows in presentation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableData {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl From<&Table> for TableData {
    fn from(t: &Table) -> Self {
        TableData { columns: t.schema.names().map(str::to_string).collect(), rows: t.presentation_rows() }
    }
}

/// One evaluated view: chart description, data and warnings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Rendered {
    pub label: String,
    pub chart_spec: ChartSpec,
    pub table: TableData,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Session {
    pub db: Database,
    pub hierarchy: Option<Hierarchy>,
    pub views: BTreeMap<String, View>,
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    fn claim(&self, name: &str) -> Result<()> {
        if self.db.contains(name) || self.views.contains_key(name) {
            return Err(VcaError::DuplicateName(name.to_string()));
        }
        Ok(())
    }

    /// Load CSV text as table `name`. Hints naming columns the table lacks
    /// are ignored, so one hint set can serve several files.
    pub fn add_csv(&mut self, name: &str, text: &str, hints: &RoleHints) -> Result<()> {
        self.claim(name)?;
        let header: Vec<String> = csv::ReaderBuilder::new()
            .from_reader(text.as_bytes())
            .headers()
            .map(|h| h.iter().map(|c| c.trim().to_string()).collect())
            .unwrap_or_default();
        let hints: BTreeMap<String, Role> =
            hints.iter().filter(|(k, _)| header.contains(k)).map(|(k, v)| (k.clone(), *v)).collect();
        let table = read_csv(name, text.as_bytes(), &hints)?;
        self.db.insert(table)
    }

    pub fn add_view(&mut self, def: &ViewDef) -> Result<()> {
        self.claim(&def.name)?;
        let view = def.build(&self.db)?;
        self.views.insert(def.name.clone(), view);
        Ok(())
    }

    pub fn set_hierarchy(&mut self, def: HierarchyDef) -> Result<()> {
        self.hierarchy = Some(Hierarchy::register(def.fds, def.attr_tables, &self.db)?);
        Ok(())
    }

    pub fn view(&self, name: &str) -> Result<&View> {
        self.views.get(name).ok_or_else(|| VcaError::UnboundView(name.to_string()))
    }

    fn dsl_env(&self, override_: bool) -> DslEnv<'_> {
        let mut env = DslEnv::new(&self.db, &self.views);
        env.hierarchy = self.hierarchy.as_ref();
        env.override_all = override_;
        env
    }

    fn env(&self) -> Env<'_> {
        match &self.hierarchy {
            Some(h) => Env::with_hierarchy(&self.db, h),
            None => Env::new(&self.db),
        }
    }

    pub fn eval(&self, expr: &str, override_: bool) -> Result<EvalValue> {
        eval_expr(&parse(expr)?, &self.dsl_env(override_))
    }

    /// Evaluate and render. Model views are rendered over their observed
    /// feature ranges; viewsets yield one entry per member.
    pub fn render(&self, expr: &str, override_: bool) -> Result<Vec<Rendered>> {
        self.render_value(self.eval(expr, override_)?)
    }

    pub fn render_value(&self, value: EvalValue) -> Result<Vec<Rendered>> {
        let views = match value {
            EvalValue::View(v) => vec![v],
            EvalValue::ViewSet(vs) => vs.views,
            EvalValue::Model(m) => vec![render_model(&m, &Sampling::Observed)?],
        };
        views.iter().map(|v| self.render_view(v)).collect()
    }

    pub fn render_view(&self, v: &View) -> Result<Rendered> {
        let chart_spec = chart_spec(v, &self.db)?;
        let table = v.evaluate(&self.db)?;
        Ok(Rendered {
            label: v.label.clone(),
            warnings: chart_spec.warnings.clone(),
            table: TableData::from(&table),
            chart_spec,
        })
    }

    /// The safety verdict for the outermost composition of `expr`.
    pub fn check(&self, expr: &str) -> Result<SafetyVerdict> {
        self.check_expr(&parse(expr)?)
    }

    pub fn check_expr(&self, e: &VcaExpr) -> Result<SafetyVerdict> {
        let (left, right, op) = match &e.kind {
            ExprKind::StatCompose { left, right, op, .. } => (left, right, BinaryOp::Stat(*op)),
            ExprKind::UnionCompose { left, right, .. } => (left, right, BinaryOp::Union),
            _ => return Err(VcaError::TypeError("check needs a binary composition".into())),
        };
        let env = self.dsl_env(false);
        let l = eval_expr(left, &env)?.into_view()?;
        let r = eval_expr(right, &env)?.into_view()?;
        composition_verdict(&l, &r, op, self.env())
    }

    /// Decompose view `name` and register the pieces. Returns the new names.
    pub fn decompose(&mut self, name: &str, how: &Decompose) -> Result<Vec<String>> {
        let v = self.view(name)?;
        let pieces = match how {
            Decompose::Extract { pred } => vec![extract(v, &crate::dsl::parse_predicate(pred)?, &self.db)?],
            Decompose::Mark { key } => {
                let cols = v.columns(&self.db)?;
                let pairs = key
                    .iter()
                    .map(|(attr, value)| {
                        let col = cols.iter().find(|c| &c.name == attr).ok_or_else(|| VcaError::UnknownAttribute(attr.clone()))?;
                        let coerced = value.coerce_to(col.datatype).ok_or_else(|| {
                            VcaError::PredicateTypeError(format!("{value} does not fit {attr} ({:?})", col.datatype))
                        })?;
                        Ok((attr.clone(), coerced))
                    })
                    .collect::<Result<Vec<_>>>()?;
                vec![extract(v, &Predicate::all_eq(pairs), &self.db)?]
            }
            Decompose::Explode { attrs } => explode(v, attrs, &self.db)?.views,
        };
        let mut names = Vec::new();
        for piece in pieces {
            let base = match how {
                Decompose::Explode { .. } => format!("{name}[{}]", piece.label),
                _ => piece.label.clone(),
            };
            let fresh = std::iter::once(base.clone())
                .chain((2..).map(|i| format!("{base}#{i}")))
                .find(|n| !self.db.contains(n) && !self.views.contains_key(n))
                .expect("unbounded name supply");
            self.views.insert(fresh.clone(), View { label: fresh.clone(), ..piece });
            names.push(fresh);
        }
        Ok(names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::safety::Status;

    const FLIGHTS: &str = "date,src,delay\n1,SFO,10.0\n2,SFO,20.0\n3,SFO,30.0\n1,OAK,4.0\n2,OAK,25.0\n3,OAK,18.0\n";

    fn session() -> Session {
        let mut s = Session::new();
        s.add_csv("flights", FLIGHTS, &RoleHints::new()).unwrap();
        let defs: Vec<ViewDef> = serde_json::from_str(
            r#"[{"name": "SFO", "source": "flights", "pred": "src = 'SFO'", "groupby": ["date"]},
                {"name": "OAK", "source": "flights", "pred": "src = 'OAK'", "groupby": ["date"]},
                {"name": "OAKn", "source": "flights", "pred": "src = 'OAK'", "groupby": ["date"], "agg": "count"},
                {"name": "bySrc", "source": "flights", "groupby": ["src"]},
                {"name": "ALL", "source": "flights", "groupby": ["date", "src"]}]"#,
        )
        .unwrap();
        for d in &defs {
            s.add_view(d).unwrap();
        }
        s
    }

    #[test]
    fn names_are_unique_across_tables_and_views() {
        let mut s = session();
        let clash: ViewDef = serde_json::from_str(r#"{"name": "flights", "source": "flights"}"#).unwrap();
        assert!(matches!(s.add_view(&clash), Err(VcaError::DuplicateName(_))));
        assert!(matches!(s.add_csv("SFO", FLIGHTS, &RoleHints::new()), Err(VcaError::DuplicateName(_))));
    }

    #[test]
    fn hints_for_absent_columns_are_ignored() {
        let mut s = Session::new();
        let hints = RoleHints::from([("delay".to_string(), Role::Measure), ("profit".to_string(), Role::Measure)]);
        s.add_csv("t", "date,delay\n1,2\n", &hints).unwrap();
        assert_eq!(s.db.get("t").unwrap().schema.measure().unwrap().name, "delay");
    }

    #[test]
    fn check_reports_the_verdict_compose_acts_on() {
        let s = session();
        assert_eq!(s.check("SFO - OAK").unwrap().status, Status::Safe);
        assert_eq!(s.check("SFO - OAKn").unwrap().status, Status::UnsafeOverridable);
        assert_eq!(s.check("SFO - bySrc").unwrap().status, Status::Unsafe);
        assert_eq!(s.check("ALL - SFO").unwrap().status, Status::Safe);
        assert!(s.eval("SFO - OAKn", false).is_err());
        assert!(s.eval("SFO - OAKn", true).is_ok());
        assert!(matches!(s.check("SFO").unwrap_err(), VcaError::TypeError(_)));
    }

    #[test]
    fn render_difference() {
        let r = session().render("SFO - OAK", false).unwrap();
        assert_eq!(r.len(), 1);
        let rows: Vec<(Value, f64)> = r[0].table.rows.iter().map(|row| (row[0].clone(), row[1].as_f64().unwrap())).collect();
        assert_eq!(rows, vec![(Value::Int(1), 6.0), (Value::Int(2), -5.0), (Value::Int(3), 12.0)]);
        assert_eq!(r[0].chart_spec.data.len(), 3);
    }

    #[test]
    fn decompose_registers_new_views() {
        let mut s = session();
        let names = s.decompose("ALL", &Decompose::Explode { attrs: vec!["src".into()] }).unwrap();
        assert_eq!(names, vec!["ALL[OAK]", "ALL[SFO]"]);
        let again = s.decompose("ALL", &Decompose::Explode { attrs: vec!["src".into()] }).unwrap();
        assert_eq!(again, vec!["ALL[OAK]#2", "ALL[SFO]#2"]);

        let key = BTreeMap::from([("date".to_string(), Value::Int(2)), ("src".to_string(), Value::str("OAK"))]);
        let mark = s.decompose("ALL", &Decompose::Mark { key }).unwrap();
        let t = s.view(&mark[0]).unwrap().evaluate(&s.db).unwrap();
        assert_eq!(t.rows, vec![vec![Value::Int(2), Value::str("OAK"), Value::Float(25.0)]]);

        let sfo = s.decompose("ALL", &Decompose::Extract { pred: "src = 'SFO'".into() }).unwrap();
        assert_eq!(s.view(&sfo[0]).unwrap().evaluate(&s.db).unwrap().rows.len(), 3);
        // A mark is a one-row view, usable as a constant operand.
        let minus = s.render(&format!("SFO - {}", crate::dsl::quote_ident(&mark[0])), false).unwrap();
        assert_eq!(minus[0].table.rows[0][1], Value::Float(-15.0));
    }
}
