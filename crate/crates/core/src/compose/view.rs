use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VcaError};
use crate::relalg::{canonicalize, describe, evaluate, AggFn, CanonicalQuery, ColumnInfo, QueryExpr};
use crate::relcore::{Database, Role, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkType {
    Bar,
    Line,
    Point,
    Area,
    Rect,
    Text,
}

impl MarkType {
    /// Bars and areas fill down to zero, so overlapping marks hide each other.
    pub fn fills_to_zero(self) -> bool {
        matches!(self, MarkType::Bar | MarkType::Area)
    }
}

impl FromStr for MarkType {
    type Err = VcaError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bar" => MarkType::Bar,
            "line" => MarkType::Line,
            "point" => MarkType::Point,
            "area" => MarkType::Area,
            "rect" | "heatmap" => MarkType::Rect,
            "text" | "constant" => MarkType::Text,
            _ => return Err(VcaError::InvalidMapping(format!("unknown mark type {s}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    Y,
    Color,
    Shape,
    Size,
    Detail,
    Row,
    Column,
}

impl Channel {
    /// Channels available to a qid attribute, most effective first.
    pub const QID_PRIORITY: [Channel; 4] = [Channel::Color, Channel::Shape, Channel::Size, Channel::Detail];
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        f.write_str(&s)
    }
}

/// Mark type plus attribute-to-channel encodings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualMapping {
    pub mark: MarkType,
    pub encodings: BTreeMap<String, Channel>,
}

impl VisualMapping {
    pub fn new(mark: MarkType, encodings: impl IntoIterator<Item = (impl Into<String>, Channel)>) -> Self {
        VisualMapping { mark, encodings: encodings.into_iter().map(|(a, c)| (a.into(), c)).collect() }
    }

    /// Dimensions go to x, color, shape, ... in order; the measure goes to y.
    pub fn default_for(mark: MarkType, cols: &[ColumnInfo]) -> Self {
        let mut free = [Channel::X, Channel::Color, Channel::Shape, Channel::Size, Channel::Detail, Channel::Row, Channel::Column]
            .into_iter();
        let mut encodings = BTreeMap::new();
        for c in cols {
            let channel = match c.role() {
                Role::Measure => Some(Channel::Y),
                Role::Dimension => free.next(),
            };
            if let Some(ch) = channel {
                encodings.insert(c.name.clone(), ch);
            }
        }
        VisualMapping { mark, encodings }
    }

    pub fn validate(&self, cols: &[ColumnInfo]) -> Result<()> {
        let mut used = BTreeMap::new();
        for (attr, ch) in &self.encodings {
            if !cols.iter().any(|c| &c.name == attr) {
                return Err(VcaError::InvalidMapping(format!("encoded attribute {attr} is not in the query output")));
            }
            if let Some(prev) = used.insert(*ch, attr) {
                return Err(VcaError::InvalidMapping(format!("{ch} is mapped by both {prev} and {attr}")));
            }
        }
        Ok(())
    }

    pub fn is_used(&self, ch: Channel) -> bool {
        self.encodings.values().any(|c| *c == ch)
    }

    pub fn first_free_qid_channel(&self) -> Option<Channel> {
        Channel::QID_PRIORITY.into_iter().find(|c| !self.is_used(*c))
    }

    /// Keep only encodings of attributes present in `cols`, renaming the
    /// measure encoding to the output measure column.
    pub fn retarget(&self, cols: &[ColumnInfo], old_measure: Option<&str>) -> VisualMapping {
        let new_measure = cols.iter().find(|c| c.role() == Role::Measure).map(|c| c.name.as_str());
        let encodings = self
            .encodings
            .iter()
            .filter_map(|(a, ch)| {
                let a = match (old_measure, new_measure) {
                    (Some(old), Some(new)) if a == old => new,
                    _ => a.as_str(),
                };
                cols.iter().any(|c| c.name == a).then(|| (a.to_string(), *ch))
            })
            .collect();
        VisualMapping { mark: self.mark, encodings }
    }
}

/// `V = R(Q(D))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct View {
    pub query: QueryExpr,
    pub mapping: VisualMapping,
    pub label: String,
    /// Name of the qid column when the view is a union output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qid: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl View {
    /// Build a view, validating the query and the mapping against `db`.
    pub fn new(query: QueryExpr, mapping: VisualMapping, label: impl Into<String>, db: &Database) -> Result<View> {
        let cols = describe(&query, db)?;
        mapping.validate(&cols)?;
        Ok(View { query, mapping, label: label.into(), qid: None, warnings: Vec::new() })
    }

    /// A view with the default mapping for its output columns.
    pub fn with_default_mapping(query: QueryExpr, mark: MarkType, label: impl Into<String>, db: &Database) -> Result<View> {
        let cols = describe(&query, db)?;
        let mapping = VisualMapping::default_for(mark, &cols);
        Ok(View { query, mapping, label: label.into(), qid: None, warnings: Vec::new() })
    }

    pub fn columns(&self, db: &Database) -> Result<Vec<ColumnInfo>> {
        describe(&self.query, db)
    }

    pub fn dims(&self, db: &Database) -> Result<Vec<String>> {
        Ok(self.columns(db)?.into_iter().filter(|c| c.role() == Role::Dimension).map(|c| c.name).collect())
    }

    pub fn measure(&self, db: &Database) -> Result<ColumnInfo> {
        self.columns(db)?
            .into_iter()
            .find(|c| c.role() == Role::Measure)
            .ok_or_else(|| VcaError::SchemaMismatch(format!("view {} has no measure", self.label)))
    }

    pub fn evaluate(&self, db: &Database) -> Result<Table> {
        evaluate(&self.query, db)
    }

    pub fn canonical(&self) -> Option<CanonicalQuery> {
        canonicalize(&self.query).ok()
    }

    pub fn with_warning(mut self, w: impl Into<String>) -> View {
        self.warnings.push(w.into());
        self
    }
}

/// Ordered views of matching schemas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSet {
    pub views: Vec<View>,
}

impl ViewSet {
    pub fn new(views: Vec<View>) -> Self {
        ViewSet { views }
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }
}

/// JSON view definition: a canonical query over a named table plus a mapping.
///
/// ```json
/// {"name": "SFO", "source": "flights", "pred": "src = 'SFO'",
///  "groupby": ["date"], "agg": "avg", "measure": "delay", "mark": "bar"}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewDef {
    pub name: String,
    pub source: String,
    #[serde(default)]
    pub pred: Option<String>,
    #[serde(default)]
    pub groupby: Vec<String>,
    #[serde(default = "default_agg")]
    pub agg: String,
    #[serde(default)]
    pub measure: Option<String>,
    #[serde(default)]
    pub mark: Option<MarkType>,
    #[serde(default)]
    pub encodings: Option<BTreeMap<String, Channel>>,
}

fn default_agg() -> String {
    "avg".into()
}

impl ViewDef {
    pub fn build(&self, db: &Database) -> Result<View> {
        let table = db.get(&self.source)?;
        let measure = match &self.measure {
            Some(m) => m.clone(),
            None => table
                .schema
                .measure()
                .map(|a| a.name.clone())
                .ok_or_else(|| VcaError::NoMeasure { table: self.source.clone() })?,
        };
        let agg: AggFn = self.agg.parse()?;
        let mut q = QueryExpr::base(&self.source);
        if let Some(p) = self.pred.as_deref().filter(|p| !p.trim().is_empty()) {
            q = q.select(crate::dsl::parse_predicate(p)?);
        }
        let keys: Vec<&str> = self.groupby.iter().map(String::as_str).collect();
        let q = q.group_by(&keys, agg, &measure, "y");
        let mark = self.mark.unwrap_or(MarkType::Bar);
        let view = match &self.encodings {
            Some(enc) => View::new(q, VisualMapping { mark, encodings: enc.clone() }, &self.name, db)?,
            None => View::with_default_mapping(q, mark, &self.name, db)?,
        };
        Ok(view)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relalg::{MeasureType, Predicate};
    use crate::relcore::{Attribute, Schema};
    use crate::value::{DataType, Value};

    fn db() -> Database {
        let schema = Schema::new(vec![
            Attribute::dimension("date", DataType::Int),
            Attribute::dimension("src", DataType::String),
            Attribute::measure("delay", DataType::Float),
        ])
        .unwrap();
        let rows = vec![vec![Value::Int(1), Value::str("SFO"), Value::Float(10.0)]];
        Database::new().with(Table::new("flights", schema, rows).unwrap()).unwrap()
    }

    #[test]
    fn mapping_channels_unique() {
        let cols = vec![
            ColumnInfo::dimension("date", DataType::Int),
            ColumnInfo::dimension("src", DataType::String),
            ColumnInfo::measure("y", DataType::Float, MeasureType::SameAs { attr: "delay".into() }),
        ];
        let m = VisualMapping::new(MarkType::Bar, [("date", Channel::X), ("src", Channel::X)]);
        assert!(matches!(m.validate(&cols), Err(VcaError::InvalidMapping(_))));
        let m = VisualMapping::new(MarkType::Bar, [("carrier", Channel::X)]);
        assert!(m.validate(&cols).is_err());
        let m = VisualMapping::default_for(MarkType::Bar, &cols);
        assert_eq!(m.encodings["date"], Channel::X);
        assert_eq!(m.encodings["src"], Channel::Color);
        assert_eq!(m.encodings["y"], Channel::Y);
        assert_eq!(m.first_free_qid_channel(), Some(Channel::Shape));
    }

    #[test]
    fn view_def_builds_canonical_view() {
        let def: ViewDef = serde_json::from_str(
            r#"{"name":"SFO","source":"flights","pred":"src = 'SFO'","groupby":["date"],"agg":"avg","measure":"delay"}"#,
        )
        .unwrap();
        let v = def.build(&db()).unwrap();
        let c = v.canonical().unwrap();
        assert_eq!(c.pred, Predicate::eq("src", "SFO"));
        assert_eq!(v.label, "SFO");
        assert_eq!(v.mapping.mark, MarkType::Bar);
    }

    #[test]
    fn view_def_rejects_bad_literal() {
        let def: ViewDef =
            serde_json::from_str(r#"{"name":"v","source":"flights","pred":"date = 'x'","groupby":["date"]}"#).unwrap();
        assert!(def.build(&db()).is_err());
    }
}
