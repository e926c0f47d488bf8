//! Model views: fit a line to the AM and PM prices by date, render the
//! fitted lines, and take the residual of the observed prices.

use std::error::Error;

use vca::compose::{compose_binary, BinaryOp, Side};
use vca::modelview::{compose_model_model, compose_view_model, lift, render_model, ModelKind};
use vca::relcore::{load_csv, RoleHints};
use vca::{AggFn, ArithOp, ComposeOptions, Database, Env, MarkType, QueryExpr, Sampling, View};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/prices.csv");
    let db = Database::new().with(load_csv(path, &RoleHints::new())?)?;
    let env = Env::new(&db);
    let opts = ComposeOptions::default();
    let sub = BinaryOp::Stat(ArithOp::Sub);

    let q = QueryExpr::base("prices").group_by(&["date", "ampm"], AggFn::Avg, "price", "y");
    let prices = View::with_default_mapping(q, MarkType::Point, "prices", &db)?;
    let model = lift(&prices, ModelKind::Linear, &["date".into()], &["ampm".into()], &db)?;
    for g in &model.models {
        println!("{:?}: {:?}", g.key, g.params);
    }

    let lines = render_model(&model, &Sampling::Observed)?;
    println!("\n{}\n{}", lines.label, lines.evaluate(&db)?);

    let residual = compose_view_model(&prices, &model, sub, Side::Right, &opts, env)?;
    println!("{}\n{}", residual.label, residual.evaluate(&db)?);

    // AM minus PM, once on the observations and once on the fitted lines.
    let session = |s: &str| {
        let q = QueryExpr::base("prices").select(vca::Predicate::eq("ampm", s)).group_by(&["date"], AggFn::Avg, "price", "y");
        View::with_default_mapping(q, MarkType::Line, s, &db)
    };
    let (am, pm) = (session("AM")?, session("PM")?);
    let observed = compose_binary(&am, &pm, sub, &opts, env)?;
    println!("{}\n{}", observed.label, observed.evaluate(&db)?);
    let fit = |v: &View| lift(v, ModelKind::Linear, &["date".into()], &[], &db);
    let fitted = compose_model_model(&fit(&am)?, &fit(&pm)?, sub, &Sampling::Observed, &opts, env)?;
    println!("{}\n{}", fitted.label, fitted.evaluate(&db)?);
    Ok(())
}
