//! Aggregating a viewset. The average over the per-airport views is computed
//! from the hourly rows, not from the per-airport averages.

use std::error::Error;

use vca::compose::{explode, viewset_stat};
use vca::relcore::{load_csv, RoleHints};
use vca::{AggFn, Database, MarkType, QueryExpr, View};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/flights_hourly.csv");
    let db = Database::new().with(load_csv(path, &RoleHints::new())?)?;
    let q = QueryExpr::base("flights_hourly").group_by(&["date", "src"], AggFn::Avg, "delay", "y");
    let all = View::with_default_mapping(q, MarkType::Bar, "ALL", &db)?;
    let parts = explode(&all, &["src".to_string()], &db)?;

    for f in [AggFn::Avg, AggFn::Max, AggFn::Count] {
        let v = viewset_stat(&parts, f, &db)?;
        println!("{}\n{}", v.label, v.evaluate(&db)?);
    }
    Ok(())
}
