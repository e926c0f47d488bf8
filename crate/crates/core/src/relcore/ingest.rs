//! CSV ingestion with datatype and role inference.
//!
//! Datatypes are inferred per column (int, then float, then ISO date, else
//! string). Without a role hint the measure is the single float column; when
//! no float column exists, the single int column. Two or more candidates are
//! reported as [`VcaError::AmbiguousMeasure`].

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Result, VcaError};
use crate::relcore::table::{Attribute, Role, Schema, Table};
use crate::value::{DataType, Value};

/// Role hints, as read from `{"attr": "dimension" | "measure"}`.
pub type RoleHints = BTreeMap<String, Role>;

pub fn load_csv(path: impl AsRef<Path>, hints: &RoleHints) -> Result<Table> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("table")
        .to_string();
    let file = std::fs::File::open(path)?;
    read_csv(name, file, hints)
}

pub fn read_csv(name: impl Into<String>, input: impl Read, hints: &RoleHints) -> Result<Table> {
    let name = name.into();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(VcaError::MalformedCsv { line: 1, message: "missing header row".into() });
    }
    for hinted in hints.keys() {
        if !header.contains(hinted) {
            return Err(VcaError::UnknownAttribute(hinted.clone()));
        }
    }

    let mut raw: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        raw.push(record.iter().map(str::to_string).collect());
    }

    let types: Vec<Option<DataType>> = (0..header.len())
        .map(|c| infer_type(raw.iter().map(|r| r[c].as_str())))
        .collect();
    let measure = pick_measure(&header, &types, hints)?;

    let attributes = header
        .iter()
        .zip(&types)
        .enumerate()
        .map(|(i, (h, t))| {
            let role = if Some(i) == measure { Role::Measure } else { Role::Dimension };
            let default = if role == Role::Measure { DataType::Float } else { DataType::String };
            Attribute { name: h.clone(), role, datatype: t.unwrap_or(default) }
        })
        .collect();
    let schema = Schema::new(attributes)?;

    let mut rows = Vec::with_capacity(raw.len());
    for (r, cells) in raw.iter().enumerate() {
        let mut row = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let attr = &schema.attributes[c];
            if cell.trim().is_empty() {
                return Err(VcaError::NullValue { table: name.clone(), column: attr.name.clone(), row: r });
            }
            row.push(parse_cell(cell, attr.datatype).ok_or_else(|| VcaError::MalformedCsv {
                line: r as u64 + 2,
                message: format!("cannot read {cell:?} as {}", attr.datatype),
            })?);
        }
        rows.push(row);
    }
    let table = Table::new(name, schema, rows)?;
    table.validate_base()?;
    Ok(table)
}

fn csv_error(e: csv::Error) -> VcaError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => VcaError::MalformedCsv {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        _ => VcaError::MalformedCsv { line, message: e.to_string() },
    }
}

fn infer_type<'a>(cells: impl Iterator<Item = &'a str>) -> Option<DataType> {
    let mut ty: Option<DataType> = None;
    for cell in cells.map(str::trim).filter(|c| !c.is_empty()) {
        let this = if cell.parse::<i64>().is_ok() {
            DataType::Int
        } else if cell.parse::<f64>().is_ok_and(f64::is_finite) {
            DataType::Float
        } else if Value::date(cell).is_some() {
            DataType::Date
        } else {
            DataType::String
        };
        ty = Some(match (ty, this) {
            (None, t) => t,
            (Some(a), b) if a == b => a,
            (Some(a), b) if a.is_numeric() && b.is_numeric() => DataType::Float,
            _ => DataType::String,
        });
    }
    ty
}

fn parse_cell(cell: &str, ty: DataType) -> Option<Value> {
    let cell = cell.trim();
    match ty {
        DataType::Int => cell.parse().ok().map(Value::Int),
        DataType::Float => cell.parse().ok().map(Value::Float),
        DataType::Date => Value::date(cell),
        DataType::String => Some(Value::Str(cell.to_string())),
    }
}

fn pick_measure(header: &[String], types: &[Option<DataType>], hints: &RoleHints) -> Result<Option<usize>> {
    let hinted: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| hints.get(*h) == Some(&Role::Measure))
        .map(|(i, _)| i)
        .collect();
    match hinted.len() {
        0 => {}
        1 => return Ok(Some(hinted[0])),
        _ => return Err(VcaError::AmbiguousMeasure(hinted.iter().map(|&i| header[i].clone()).collect())),
    }

    let free = |i: &usize| hints.get(&header[*i]) != Some(&Role::Dimension);
    let of_type = |ty: DataType| -> Vec<usize> {
        (0..header.len()).filter(|i| types[*i] == Some(ty)).filter(free).collect()
    };
    let floats = of_type(DataType::Float);
    let candidates = if floats.is_empty() { of_type(DataType::Int) } else { floats };
    match candidates.len() {
        1 => Ok(Some(candidates[0])),
        0 if types.iter().all(Option::is_none) => Ok((0..header.len()).rev().find(free)),
        0 => Ok(None),
        _ => Err(VcaError::AmbiguousMeasure(candidates.iter().map(|&i| header[i].clone()).collect())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<Table> {
        read_csv("flights", text.as_bytes(), &RoleHints::new())
    }

    #[test]
    fn infers_roles_and_types() {
        let t = read("date,src,delay\n1,SFO,10.5\n2,OAK,4.0\n").unwrap();
        let s = &t.schema;
        assert_eq!(s.get("date").unwrap(), &Attribute::dimension("date", DataType::Int));
        assert_eq!(s.get("src").unwrap(), &Attribute::dimension("src", DataType::String));
        assert_eq!(s.get("delay").unwrap(), &Attribute::measure("delay", DataType::Float));
        assert_eq!(t.rows.len(), 2);
    }

    #[test]
    fn empty_data_section() {
        let t = read("date,src,delay\n").unwrap();
        assert!(t.rows.is_empty());
        assert_eq!(t.schema.measure().unwrap().name, "delay");
    }

    #[test]
    fn two_numeric_candidates_are_ambiguous() {
        let err = read("a,b\n1.5,2.5\n").unwrap_err();
        assert!(matches!(err, VcaError::AmbiguousMeasure(ref c) if c.len() == 2));
        let err = read("a,b\n1,2\n").unwrap_err();
        assert!(matches!(err, VcaError::AmbiguousMeasure(_)));
    }

    #[test]
    fn hint_wins() {
        let hints: RoleHints = [("a".to_string(), Role::Measure)].into_iter().collect();
        let t = read_csv("t", "a,b\n1,2\n".as_bytes(), &hints).unwrap();
        assert_eq!(t.schema.measure().unwrap().name, "a");
        let hints: RoleHints = [("date".to_string(), Role::Dimension)].into_iter().collect();
        let t = read_csv("t", "date,delay\n1,2\n".as_bytes(), &hints).unwrap();
        assert_eq!(t.schema.measure().unwrap().name, "delay");
    }

    #[test]
    fn ragged_rows_are_malformed() {
        let err = read("a,b,c\n1,x,2.0\n3,4\n").unwrap_err();
        assert!(matches!(err, VcaError::MalformedCsv { .. }), "{err}");
    }

    #[test]
    fn dates_parse() {
        let t = read("day,profit\n2021-01-01,3.5\n2021-01-02,4\n").unwrap();
        assert_eq!(t.schema.get("day").unwrap().datatype, DataType::Date);
        assert_eq!(t.rows[1][1], Value::Float(4.0));
    }

    #[test]
    fn empty_cells_are_rejected() {
        let err = read("a,b\nx,\n").unwrap_err();
        assert!(matches!(err, VcaError::NullValue { .. }));
    }
}
