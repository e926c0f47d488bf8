//! The expression language: parse, print and evaluate against named views.

use std::collections::BTreeMap;
use std::error::Error;

use vca::dsl::{eval_str, parse, DslEnv, EvalValue};
use vca::relcore::{load_csv, RoleHints};
use vca::{AggFn, Database, MarkType, Predicate, QueryExpr, View};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/flights.csv");
    let db = Database::new().with(load_csv(path, &RoleHints::new())?)?;
    let mut views = BTreeMap::new();
    for src in ["SFO", "OAK"] {
        let q = QueryExpr::base("flights").select(Predicate::eq("src", src)).group_by(&["date"], AggFn::Avg, "delay", "y");
        views.insert(src.to_string(), View::with_default_mapping(q, MarkType::Bar, src, &db)?);
    }
    let all = QueryExpr::base("flights").group_by(&["date", "src"], AggFn::Avg, "delay", "y");
    views.insert("ALL".into(), View::with_default_mapping(all, MarkType::Bar, "ALL", &db)?);
    let env = DslEnv::new(&db, &views);

    for text in [
        "SFO - OAK",
        "union(explode(ALL, src))",
        "stat([SFO, OAK], avg)",
        "explode(ALL, src) - SFO",
        "SFO - lift(SFO, linear, [date])",
    ] {
        println!("> {text}\n  parsed as {}", parse(text)?);
        match eval_str(text, &env)? {
            EvalValue::View(v) => println!("{}", v.evaluate(&db)?),
            EvalValue::ViewSet(vs) => {
                for v in &vs.views {
                    println!("{}\n{}", v.label, v.evaluate(&db)?);
                }
            }
            EvalValue::Model(m) => println!("{} models\n", m.models.len()),
        }
    }

    if let Err(e) = eval_str("SFO - NOPE", &env) {
        println!("> SFO - NOPE\n  error: {e}");
    }
    Ok(())
}
