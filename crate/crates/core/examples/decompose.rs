//! Decomposition: extract one airport, explode by airport, and union the
//! pieces back into the original view.

use std::error::Error;

use vca::compose::{explode, extract, viewset_union};
use vca::relcore::{load_csv, RoleHints};
use vca::{AggFn, Database, MarkType, Predicate, QueryExpr, View};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/flights.csv");
    let db = Database::new().with(load_csv(path, &RoleHints::new())?)?;
    let q = QueryExpr::base("flights").group_by(&["date", "src"], AggFn::Avg, "delay", "y");
    let all = View::with_default_mapping(q, MarkType::Bar, "ALL", &db)?;
    println!("{}\n{}", all.label, all.evaluate(&db)?);

    let sfo = extract(&all, &Predicate::eq("src", "SFO"), &db)?;
    println!("{}\n{}", sfo.label, sfo.evaluate(&db)?);

    let parts = explode(&all, &["src".to_string()], &db)?;
    for v in &parts.views {
        println!("{}\n{}", v.label, v.evaluate(&db)?);
    }

    let back = viewset_union(&parts, &db)?;
    println!("{}\n{}", back.label, back.evaluate(&db)?);
    Ok(())
}
