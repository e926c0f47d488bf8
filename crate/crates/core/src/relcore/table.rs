use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VcaError};
use crate::value::{DataType, Value};

/// Whether an attribute is used for grouping/filtering/joining or carries the statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Dimension,
    Measure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub role: Role,
    pub datatype: DataType,
}

impl Attribute {
    pub fn dimension(name: impl Into<String>, datatype: DataType) -> Self {
        Attribute { name: name.into(), role: Role::Dimension, datatype }
    }

    pub fn measure(name: impl Into<String>, datatype: DataType) -> Self {
        Attribute { name: name.into(), role: Role::Measure, datatype }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for a in &attributes {
            if !seen.insert(a.name.as_str()) {
                return Err(VcaError::DuplicateColumn(a.name.clone()));
            }
        }
        Ok(Schema { attributes })
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    pub fn dimensions(&self) -> impl Iterator<Item = &Attribute> {
        self.attributes.iter().filter(|a| a.role == Role::Dimension)
    }

    pub fn measure(&self) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.role == Role::Measure)
    }
}

/// An in-memory relation. Row order carries no meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub schema: Schema,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    /// Build a table, checking row arity and cell datatypes.
    pub fn new(name: impl Into<String>, schema: Schema, rows: Vec<Vec<Value>>) -> Result<Self> {
        let name = name.into();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(VcaError::SchemaMismatch(format!(
                    "row {i} of {name} has {} cells, schema has {}",
                    row.len(),
                    schema.len()
                )));
            }
            for (cell, attr) in row.iter().zip(&schema.attributes) {
                match cell.datatype() {
                    None => {}
                    Some(t) if t == attr.datatype => {}
                    Some(DataType::Int) if attr.datatype == DataType::Float => {}
                    Some(t) => {
                        return Err(VcaError::TypeError(format!(
                            "{name}.{} declared {}, row {i} holds {t}",
                            attr.name, attr.datatype
                        )))
                    }
                }
            }
        }
        Ok(Table { name, schema, rows })
    }

    /// Base tables must hold exactly one measure and no nulls.
    pub fn validate_base(&self) -> Result<()> {
        let measures = self.schema.attributes.iter().filter(|a| a.role == Role::Measure).count();
        if measures == 0 {
            return Err(VcaError::NoMeasure { table: self.name.clone() });
        }
        if measures > 1 {
            return Err(VcaError::AmbiguousMeasure(
                self.schema
                    .attributes
                    .iter()
                    .filter(|a| a.role == Role::Measure)
                    .map(|a| a.name.clone())
                    .collect(),
            ));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if let Some(c) = row.iter().position(Value::is_null) {
                return Err(VcaError::NullValue {
                    table: self.name.clone(),
                    column: self.schema.attributes[c].name.clone(),
                    row: r,
                });
            }
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<impl Iterator<Item = &Value>> {
        let i = self.schema.index_of(name)?;
        Some(self.rows.iter().map(move |r| &r[i]))
    }

    /// Distinct values of a column.
    pub fn distinct(&self, name: &str) -> Option<BTreeSet<Value>> {
        self.column(name).map(|c| c.cloned().collect())
    }

    /// Rows ordered by the dimension columns, then the measure.
    pub fn presentation_rows(&self) -> Vec<Vec<Value>> {
        let order: Vec<usize> = (0..self.schema.len())
            .filter(|&i| self.schema.attributes[i].role == Role::Dimension)
            .chain((0..self.schema.len()).filter(|&i| self.schema.attributes[i].role == Role::Measure))
            .collect();
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| order.iter().map(|&i| a[i].cmp(&b[i])).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
        rows
    }

    /// Rows sorted by every column; used for deterministic output and
    /// multiset comparisons.
    pub fn sorted_rows(&self) -> Vec<Vec<Value>> {
        let mut rows = self.rows.clone();
        rows.sort();
        rows
    }
}

/// Aligned text, one row per line, in presentation order.
impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header: Vec<String> = self.schema.names().map(str::to_string).collect();
        let cells: Vec<Vec<String>> =
            self.presentation_rows().iter().map(|r| r.iter().map(Value::to_string).collect()).collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|i| cells.iter().map(|r| r[i].chars().count()).chain([header[i].chars().count()]).max().unwrap_or(0))
            .collect();
        for line in std::iter::once(&header).chain(&cells) {
            let padded: Vec<String> = line.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            writeln!(f, "{}", padded.join("  ").trim_end())?;
        }
        Ok(())
    }
}

/// Named base tables.
#[derive(Debug, Clone, Default)]
pub struct Database {
    tables: BTreeMap<String, Arc<Table>>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a base table; replaces any table of the same name.
    pub fn insert(&mut self, table: Table) -> Result<()> {
        table.validate_base()?;
        self.tables.insert(table.name.clone(), Arc::new(table));
        Ok(())
    }

    pub fn with(mut self, table: Table) -> Result<Self> {
        self.insert(table)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Result<&Arc<Table>> {
        self.tables.get(name).ok_or_else(|| VcaError::UnknownTable(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tables.contains_key(name)
    }

    pub fn tables(&self) -> impl Iterator<Item = &Arc<Table>> {
        self.tables.values()
    }

    /// Tables that contain the named attribute as a dimension.
    pub fn hosts_of<'a>(&'a self, attr: &'a str) -> impl Iterator<Item = &'a Arc<Table>> + 'a {
        self.tables
            .values()
            .filter(move |t| t.schema.get(attr).is_some_and(|a| a.role == Role::Dimension))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema::new(vec![
            Attribute::dimension("date", DataType::Int),
            Attribute::measure("delay", DataType::Float),
        ])
        .unwrap()
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = Table::new("t", schema(), vec![vec![Value::Int(1)]]).unwrap_err();
        assert!(matches!(err, VcaError::SchemaMismatch(_)));
    }

    #[test]
    fn ints_fit_float_columns() {
        Table::new("t", schema(), vec![vec![Value::Int(1), Value::Int(3)]]).unwrap();
        let err = Table::new("t", schema(), vec![vec![Value::str("x"), Value::Int(3)]]).unwrap_err();
        assert!(matches!(err, VcaError::TypeError(_)));
    }

    #[test]
    fn base_tables_reject_nulls() {
        let t = Table::new("t", schema(), vec![vec![Value::Int(1), Value::Null]]).unwrap();
        assert!(matches!(t.validate_base(), Err(VcaError::NullValue { .. })));
    }

    #[test]
    fn duplicate_columns_rejected() {
        let err = Schema::new(vec![
            Attribute::dimension("a", DataType::Int),
            Attribute::dimension("a", DataType::Int),
        ])
        .unwrap_err();
        assert!(matches!(err, VcaError::DuplicateColumn(_)));
    }
}
