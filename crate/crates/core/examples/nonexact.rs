//! Nonexact composition: a finer view minus a coarser one. Every row of the
//! left view is kept and matched on the shared grouping attributes.

use vca::compose::{compose_binary, BinaryOp, ComposeOptions, Env, MarkType, View};
use vca::relalg::{ColumnInfo, MeasureType};
use vca::relcore::{load_csv, RoleHints};
use vca::{AggFn, ArithOp, DataType, Database, Predicate, QueryExpr, Value};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/flights.csv");
    let db = Database::new().with(load_csv(path, &RoleHints::new())?)?;
    let env = Env::new(&db);
    let sub = BinaryOp::Stat(ArithOp::Sub);
    let opts = ComposeOptions::default();

    // Both airports by date, minus OAK by date.
    let both = QueryExpr::base("flights").group_by(&["date", "src"], AggFn::Avg, "delay", "y");
    let both = View::with_default_mapping(both, MarkType::Bar, "delays", &db)?;
    let oak = QueryExpr::base("flights").select(Predicate::eq("src", "OAK")).group_by(&["date"], AggFn::Avg, "delay", "y");
    let oak = View::with_default_mapping(oak, MarkType::Bar, "OAK", &db)?;
    let d = compose_binary(&both, &oak, sub, &opts, env)?;
    println!("{}", d.label);
    print!("{}", d.evaluate(&db)?);

    // A 0-dimensional view is a constant subtracted from every mark.
    let twelve = QueryExpr::Values {
        name: "target".into(),
        columns: vec![ColumnInfo::measure("y", DataType::Float, MeasureType::SameAs { attr: "delay".into() })],
        rows: vec![vec![Value::Float(12.0)]],
    };
    let twelve = View::with_default_mapping(twelve, MarkType::Text, "12", &db)?;
    let sfo = QueryExpr::base("flights").select(Predicate::eq("src", "SFO")).group_by(&["date"], AggFn::Avg, "delay", "y");
    let sfo = View::with_default_mapping(sfo, MarkType::Bar, "SFO", &db)?;
    let d = compose_binary(&sfo, &twelve, sub, &opts, env)?;
    println!("\n{}", d.label);
    print!("{}", d.evaluate(&db)?);
    Ok(())
}
