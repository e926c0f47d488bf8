//! Measure typing, schema matching and composition safety verdicts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::compose::View;
use crate::error::Result;
use crate::relalg::{AggFn, ColumnInfo, Lineage, MeasureType};
use crate::relcore::{Database, Hierarchy, Role};

/// Output type of `f(a)` given the type of `a`.
pub fn measure_type(func: &str, attr: &str) -> Result<MeasureType> {
    let agg: AggFn = func.parse()?;
    Ok(aggregate_type(agg, MeasureType::Base { attr: attr.to_string() }))
}

/// Registered signatures: `count` yields `count<a>`, every other aggregate
/// has output type `a`.
pub fn aggregate_type(agg: AggFn, input: MeasureType) -> MeasureType {
    match (agg, input) {
        (AggFn::Count, ty) => MeasureType::Param { func: "count".into(), attr: ty.attr().to_string() },
        (_, MeasureType::Base { attr }) => MeasureType::SameAs { attr },
        (_, ty) => ty,
    }
}

/// Same output type, with `Base(a) ≡ SameAs(a)`.
pub fn measures_compatible(m1: &MeasureType, m2: &MeasureType) -> bool {
    fn norm(m: &MeasureType) -> MeasureType {
        match m {
            MeasureType::Base { attr } => MeasureType::SameAs { attr: attr.clone() },
            other => other.clone(),
        }
    }
    norm(m1) == norm(m2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Safe,
    UnsafeOverridable,
    Unsafe,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Safe => "Safe",
            Status::UnsafeOverridable => "UnsafeOverridable",
            Status::Unsafe => "Unsafe",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchMode {
    Exact,
    /// `dims(v2) ⊆ dims(v1)`.
    Superset,
    /// Pairwise exact matching across a viewset; callers iterate.
    Nary,
}

/// Direction of the FD that relates the two sides of a hierarchy pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Direction {
    /// `a1 ↦ a2`: the left view is finer.
    FineToCoarse,
    /// `a2 ↦ a1`: the right view is finer.
    CoarseToFine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffPair {
    /// Attribute of the left view.
    pub left: String,
    /// Attribute of the right view.
    pub right: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SafetyVerdict {
    pub v: u32,
    pub status: Status,
    /// Left dimension to right dimension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diff_pair: Option<DiffPair>,
    pub reasons: Vec<String>,
}

impl SafetyVerdict {
    fn unsafe_with(reasons: Vec<String>) -> Self {
        SafetyVerdict { v: 1, status: Status::Unsafe, matching: None, diff_pair: None, reasons }
    }

    pub fn is_safe(&self) -> bool {
        self.status == Status::Safe
    }

    /// Whether composition may proceed given the caller's override flag.
    pub fn permits(&self, override_: bool) -> bool {
        match self.status {
            Status::Safe => true,
            Status::UnsafeOverridable => override_,
            Status::Unsafe => false,
        }
    }
}

/// Reason codes that callers may match on.
pub mod reason {
    pub const DIMENSION_MISMATCH: &str = "DimensionMismatch";
    pub const AMBIGUOUS_MATCH: &str = "AmbiguousMatch";
    pub const MULTIPLE_HIERARCHY_PAIRS: &str = "MultipleHierarchyPairs";
    pub const MEASURE_MISMATCH: &str = "MeasureMismatch";
    pub const NON_NUMERIC_MEASURE: &str = "NonNumericMeasure";
    pub const DERIVED_LINEAGE: &str = "DerivedLineage";
}

fn dims(cols: &[ColumnInfo]) -> Vec<&ColumnInfo> {
    cols.iter().filter(|c| c.role() == Role::Dimension).collect()
}

fn measure(cols: &[ColumnInfo]) -> Option<&ColumnInfo> {
    cols.iter().find(|c| c.role() == Role::Measure)
}

fn lineage_key(c: &ColumnInfo) -> &str {
    c.origin().unwrap_or(&c.name)
}

/// Two dimensions of one schema with the same lineage make any matching
/// ambiguous.
fn duplicate_lineage(cols: &[ColumnInfo]) -> Option<String> {
    let mut seen = BTreeSet::new();
    dims(cols).into_iter().map(lineage_key).find(|k| !seen.insert(*k)).map(str::to_string)
}

/// Match two described schemas.
///
/// A dimension of the left schema maps to the right dimension of the same
/// name, or, given a hierarchy, to an FD-related one. At most one FD-related
/// pair is allowed, which makes the bijection unique whenever it exists.
pub fn match_columns(
    c1: &[ColumnInfo],
    c2: &[ColumnInfo],
    mode: MatchMode,
    h: Option<&Hierarchy>,
) -> SafetyVerdict {
    let mut reasons = Vec::new();
    for (side, cols) in [("left", c1), ("right", c2)] {
        if let Some(a) = duplicate_lineage(cols) {
            reasons.push(format!("{}: {side} view has two dimensions derived from {a}", reason::AMBIGUOUS_MATCH));
            return SafetyVerdict::unsafe_with(reasons);
        }
    }
    let d1: BTreeSet<&str> = dims(c1).iter().map(|c| c.name.as_str()).collect();
    let d2: BTreeSet<&str> = dims(c2).iter().map(|c| c.name.as_str()).collect();
    let only1: Vec<&str> = d1.difference(&d2).copied().collect();
    let only2: Vec<&str> = d2.difference(&d1).copied().collect();

    let mut matching: BTreeMap<String, String> =
        d1.intersection(&d2).map(|a| (a.to_string(), a.to_string())).collect();
    let mut diff_pair = None;
    let dims_ok = match mode {
        MatchMode::Exact | MatchMode::Nary => match (only1.as_slice(), only2.as_slice()) {
            ([], []) => true,
            ([a1], [a2]) => match h.and_then(|h| fd_direction(h, a1, a2)) {
                Some(direction) => {
                    matching.insert(a1.to_string(), a2.to_string());
                    diff_pair = Some(DiffPair { left: a1.to_string(), right: a2.to_string(), direction });
                    true
                }
                None => {
                    reasons.push(format!(
                        "{}: dimensions {{{}}} and {{{}}} do not match",
                        reason::DIMENSION_MISMATCH,
                        join(&d1),
                        join(&d2)
                    ));
                    false
                }
            },
            _ => {
                if only1.len() == only2.len() && h.is_some_and(|h| fd_bijection_exists(h, &only1, &only2)) {
                    reasons.push(format!(
                        "{}: {} differing attribute pairs are related by the hierarchy; only one is supported",
                        reason::MULTIPLE_HIERARCHY_PAIRS,
                        only1.len()
                    ));
                } else {
                    reasons.push(format!(
                        "{}: dimensions {{{}}} and {{{}}} do not match",
                        reason::DIMENSION_MISMATCH,
                        join(&d1),
                        join(&d2)
                    ));
                }
                false
            }
        },
        MatchMode::Superset => {
            if only2.is_empty() {
                true
            } else {
                reasons.push(format!(
                    "{}: dimensions {{{}}} are not contained in {{{}}}",
                    reason::DIMENSION_MISMATCH,
                    join(&d2),
                    join(&d1)
                ));
                false
            }
        }
    };
    if !dims_ok {
        return SafetyVerdict::unsafe_with(reasons);
    }

    let (Some(m1), Some(m2)) = (measure(c1), measure(c2)) else {
        reasons.push(format!("{}: a view has no measure", reason::MEASURE_MISMATCH));
        return SafetyVerdict::unsafe_with(reasons);
    };
    let t1 = m1.measure_type().expect("measure column");
    let t2 = m2.measure_type().expect("measure column");
    for m in [m1, m2] {
        if matches!(m.lineage, Lineage::Derived { .. }) {
            reasons.push(format!(
                "{}: measure {} is computed from composed measures; typed by its left operand",
                reason::DERIVED_LINEAGE,
                m.name
            ));
        }
    }
    let status = if measures_compatible(t1, t2) {
        Status::Safe
    } else if m1.datatype.is_numeric() && m2.datatype.is_numeric() {
        reasons.push(format!("{}: measure types {t1} and {t2} differ", reason::MEASURE_MISMATCH));
        Status::UnsafeOverridable
    } else {
        reasons.push(format!(
            "{}: measure types {t1} and {t2} differ and are not both numeric",
            reason::NON_NUMERIC_MEASURE
        ));
        Status::Unsafe
    };
    SafetyVerdict { v: 1, status, matching: Some(matching), diff_pair, reasons }
}

fn join(s: &BTreeSet<&str>) -> String {
    s.iter().copied().collect::<Vec<_>>().join(", ")
}

fn fd_direction(h: &Hierarchy, a1: &str, a2: &str) -> Option<Direction> {
    if h.ancestor(a1, a2) {
        Some(Direction::FineToCoarse)
    } else if h.ancestor(a2, a1) {
        Some(Direction::CoarseToFine)
    } else {
        None
    }
}

fn fd_bijection_exists(h: &Hierarchy, left: &[&str], right: &[&str]) -> bool {
    fn go(h: &Hierarchy, left: &[&str], right: &mut Vec<&str>) -> bool {
        let Some((first, rest)) = left.split_first() else {
            return true;
        };
        for i in 0..right.len() {
            let cand = right[i];
            if fd_direction(h, first, cand).is_some() {
                right.remove(i);
                let ok = go(h, rest, right);
                right.insert(i, cand);
                if ok {
                    return true;
                }
            }
        }
        false
    }
    go(h, left, &mut right.to_vec())
}

/// Match two views' output schemas.
pub fn match_schemas(v1: &View, v2: &View, mode: MatchMode, h: Option<&Hierarchy>, db: &Database) -> Result<SafetyVerdict> {
    Ok(match_columns(&v1.columns(db)?, &v2.columns(db)?, mode, h))
}

/// Grouping attributes whose evaluated result holds exactly one distinct value.
pub fn single_value_dims(v: &View, db: &Database) -> Result<BTreeSet<String>> {
    let (cols, table) = crate::relalg::evaluate_described(&v.query, db)?;
    Ok(cols
        .iter()
        .enumerate()
        .filter(|(_, c)| c.role() == Role::Dimension)
        .filter(|(i, _)| {
            let mut vals = table.rows.iter().map(|r| &r[*i]);
            match vals.next() {
                Some(first) => vals.all(|v| v == first),
                None => false,
            }
        })
        .map(|(_, c)| c.name.clone())
        .collect())
}
