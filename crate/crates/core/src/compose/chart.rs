use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compose::view::{Channel, MarkType, View};
use crate::error::Result;
use crate::relcore::{Database, Role};
use crate::value::{DataType, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutMode {
    Superimpose,
    Juxtapose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartColumn {
    pub name: String,
    pub role: Role,
    pub datatype: DataType,
}

/// Renderer-neutral chart description (schema version 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChartSpec {
    pub v: u32,
    pub label: String,
    pub mark: MarkType,
    pub encodings: BTreeMap<String, Channel>,
    pub layout_mode: LayoutMode,
    pub columns: Vec<ChartColumn>,
    pub data: Vec<BTreeMap<String, Value>>,
    pub warnings: Vec<String>,
}

/// Evaluate `view` and describe it as a chart. Rows are ordered by the
/// dimension columns, then the measure.
pub fn chart_spec(view: &View, db: &Database) -> Result<ChartSpec> {
    let table = view.evaluate(db)?;
    let layout_mode = match view.qid {
        Some(_) if view.mapping.mark.fills_to_zero() => LayoutMode::Juxtapose,
        _ => LayoutMode::Superimpose,
    };
    let columns: Vec<ChartColumn> = table
        .schema
        .attributes
        .iter()
        .map(|a| ChartColumn { name: a.name.clone(), role: a.role, datatype: a.datatype })
        .collect();
    let measure = table.schema.attributes.iter().position(|a| a.role == Role::Measure);
    let rows = table.presentation_rows();
    let missing = measure.map_or(0, |m| rows.iter().filter(|r| r[m].is_null()).count());
    let mut warnings = view.warnings.clone();
    if missing > 0 {
        warnings.push(format!("{missing} rows have no measure value (no matching row on the other side)"));
    }
    let data = rows
        .into_iter()
        .map(|r| columns.iter().map(|c| c.name.clone()).zip(r).collect())
        .collect();
    Ok(ChartSpec {
        v: 1,
        label: view.label.clone(),
        mark: view.mapping.mark,
        encodings: view.mapping.encodings.clone(),
        layout_mode,
        columns,
        data,
        warnings,
    })
}
