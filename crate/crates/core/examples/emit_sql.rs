//! Every composed view is a relational query; print the SQL for a few.

use std::error::Error;

use vca::compose::{compose_binary, explode, viewset_stat, BinaryOp};
use vca::relcore::{load_csv, RoleHints};
use vca::sqlgen::emit_sql;
use vca::{AggFn, ArithOp, ComposeOptions, Database, Env, MarkType, Predicate, QueryExpr, View};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/flights.csv");
    let db = Database::new().with(load_csv(path, &RoleHints::new())?)?;
    let airport = |src: &str| {
        let q = QueryExpr::base("flights").select(Predicate::eq("src", src)).group_by(&["date"], AggFn::Avg, "delay", "y");
        View::with_default_mapping(q, MarkType::Bar, src, &db)
    };
    let opts = ComposeOptions::default();
    let env = Env::new(&db);

    let diff = compose_binary(&airport("SFO")?, &airport("OAK")?, BinaryOp::Stat(ArithOp::Sub), &opts, env)?;
    let union = compose_binary(&airport("SFO")?, &airport("OAK")?, BinaryOp::Union, &opts, env)?;
    let all = View::with_default_mapping(
        QueryExpr::base("flights").group_by(&["date", "src"], AggFn::Avg, "delay", "y"),
        MarkType::Bar,
        "ALL",
        &db,
    )?;
    let avg = viewset_stat(&explode(&all, &["src".into()], &db)?, AggFn::Avg, &db)?;

    for v in [diff, union, avg] {
        println!("-- {}\n{};\n", v.label, emit_sql(&v.query, &db)?);
    }
    Ok(())
}
