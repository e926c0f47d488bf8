//! Safety verdicts for pairs of views, and how an unsafe composition is
//! refused or overridden.

use std::error::Error;

use vca::compose::{compose_binary, BinaryOp};
use vca::relcore::{load_csv, RoleHints};
use vca::safety::{match_schemas, MatchMode};
use vca::{AggFn, ArithOp, ComposeOptions, Database, Env, MarkType, Predicate, QueryExpr, View};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/flights.csv");
    let db = Database::new().with(load_csv(path, &RoleHints::new())?)?;
    let view = |src: Option<&str>, keys: &[&str], agg: AggFn, label: &str| {
        let mut q = QueryExpr::base("flights");
        if let Some(s) = src {
            q = q.select(Predicate::eq("src", s));
        }
        View::with_default_mapping(q.group_by(keys, agg, "delay", "y"), MarkType::Bar, label, &db)
    };
    let sfo = view(Some("SFO"), &["date"], AggFn::Avg, "SFO")?;
    let oak = view(Some("OAK"), &["date"], AggFn::Avg, "OAK")?;
    let oak_sum = view(Some("OAK"), &["date"], AggFn::Sum, "OAK sum")?;
    let oak_count = view(Some("OAK"), &["date"], AggFn::Count, "OAK count")?;
    let by_src = view(None, &["src"], AggFn::Avg, "by src")?;

    for (other, mode) in [
        (&oak, MatchMode::Exact),
        (&oak_sum, MatchMode::Exact),
        (&oak_count, MatchMode::Exact),
        (&by_src, MatchMode::Exact),
        (&by_src, MatchMode::Superset),
    ] {
        let verdict = match_schemas(&sfo, other, mode, None, &db)?;
        println!("SFO vs {} ({mode:?}): {}", other.label, serde_json::to_string(&verdict)?);
    }

    let sub = BinaryOp::Stat(ArithOp::Sub);
    match compose_binary(&sfo, &oak_count, sub, &ComposeOptions::default(), Env::new(&db)) {
        Ok(v) => println!("\ncomposed {}", v.label),
        Err(e) => println!("\nrefused: {e}"),
    }
    let forced = compose_binary(&sfo, &oak_count, sub, &ComposeOptions::overriding(), Env::new(&db))?;
    println!("with override: {}\n{}", forced.label, forced.evaluate(&db)?);
    Ok(())
}
