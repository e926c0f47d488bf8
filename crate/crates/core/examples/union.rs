//! Union composition: both airports in one chart, told apart by a qid
//! attribute on a free visual channel.

use vca::compose::{chart_spec, compose_binary, BinaryOp, ComposeOptions, Env, MarkType, View};
use vca::relcore::{load_csv, RoleHints};
use vca::{AggFn, Database, Predicate, QueryExpr};

fn airport(db: &Database, src: &str, mark: MarkType) -> vca::Result<View> {
    let q = QueryExpr::base("flights").select(Predicate::eq("src", src)).group_by(&["date"], AggFn::Avg, "delay", "y");
    View::with_default_mapping(q, mark, src, db)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/flights.csv");
    let db = Database::new().with(load_csv(path, &RoleHints::new())?)?;
    let env = Env::new(&db);

    for mark in [MarkType::Bar, MarkType::Line] {
        let u = compose_binary(&airport(&db, "SFO", mark)?, &airport(&db, "OAK", mark)?, BinaryOp::Union, &ComposeOptions::default(), env)?;
        let spec = chart_spec(&u, &db)?;
        println!("{mark:?}: layout {:?}, encodings {:?}", spec.layout_mode, spec.encodings);
        print!("{}", u.evaluate(&db)?);
        println!();
    }
    Ok(())
}
