//! Difference between the SFO and OAK daily delay views, printed as a table
//! and as a chart description.
//!
//! ```text
//! cargo run -p vca --example flights_difference
//! ```

use std::error::Error;

use vca::compose::{chart_spec, compose_binary, BinaryOp};
use vca::relcore::{load_csv, RoleHints};
use vca::{ArithOp, ComposeOptions, Database, Env, ViewDef};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/flights.csv");
    let db = Database::new().with(load_csv(path, &RoleHints::new())?)?;

    let airport = |name: &str| {
        let def: ViewDef = serde_json::from_value(serde_json::json!({
            "name": name,
            "source": "flights",
            "pred": format!("src = '{name}'"),
            "groupby": ["date"],
            "agg": "avg",
            "measure": "delay",
            "mark": "bar",
        }))?;
        Ok::<_, Box<dyn Error>>(def.build(&db)?)
    };
    let (sfo, oak) = (airport("SFO")?, airport("OAK")?);

    let diff = compose_binary(&sfo, &oak, BinaryOp::Stat(ArithOp::Sub), &ComposeOptions::default(), Env::new(&db))?;
    println!("{}\n{}", diff.label, diff.evaluate(&db)?);

    let spec = chart_spec(&diff, &db)?;
    println!("{}", serde_json::to_string_pretty(&spec)?);
    Ok(())
}
