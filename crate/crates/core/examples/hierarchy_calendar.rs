//! Composition across the day -> month hierarchy: daily profit against the
//! monthly average, and monthly totals against daily profit.

use std::collections::BTreeMap;
use std::error::Error;

use vca::compose::{compose_binary, BinaryOp};
use vca::relcore::{load_csv, Fd, RoleHints};
use vca::{AggFn, ArithOp, ComposeOptions, Database, Env, Hierarchy, MarkType, QueryExpr, View};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/calendar.csv");
    let db = Database::new().with(load_csv(path, &RoleHints::new())?)?;
    let h = Hierarchy::register(vec![Fd::new("day", "month")], BTreeMap::new(), &db)?;
    let env = Env::with_hierarchy(&db, &h);
    println!("day -> month: {:?}\n", h.translation_map("day", "month", &db)?);

    let view = |key: &str, agg: AggFn, label: &str| {
        let q = QueryExpr::base("calendar").group_by(&[key], agg, "profit", "y");
        View::with_default_mapping(q, MarkType::Bar, label, &db)
    };
    let daily = view("day", AggFn::Avg, "daily")?;
    let monthly = view("month", AggFn::Avg, "monthly")?;
    let monthly_sum = view("month", AggFn::Sum, "monthlySum")?;
    let sub = BinaryOp::Stat(ArithOp::Sub);
    let opts = ComposeOptions::default();

    let fine = compose_binary(&daily, &monthly, sub, &opts, env)?;
    println!("{}\n{}", fine.label, fine.evaluate(&db)?);
    let coarse = compose_binary(&monthly_sum, &daily, sub, &opts, env)?;
    println!("{}\n{}", coarse.label, coarse.evaluate(&db)?);
    let both = compose_binary(&daily, &monthly, BinaryOp::Union, &opts, env)?;
    println!("{}\n{}", both.label, both.evaluate(&db)?);
    Ok(())
}
