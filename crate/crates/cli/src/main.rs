//! `vca`: evaluate and check view composition expressions over CSV data, or
//! serve the HTTP API.
//!
//! ```text
//! vca eval  --data flights.csv --views views.json --expr "SFO - OAK" --out table
//! vca check --data flights.csv --views views.json --expr "SFO - OAK"
//! vca serve --port 8080
//! ```
//!
//! Data goes to stdout, warnings and errors to stderr. Log level comes from
//! `VCA_LOG` (error, warn, info, debug).

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vca::dsl::EvalValue;
use vca::relcore::{RoleHints, Role};
use vca::session::{HierarchyDef, Session, TableData};
use vca::sqlgen::emit_sql;
use vca::{Status, Value, View, ViewDef};

#[derive(Parser)]
#[command(name = "vca", version, about = "Compose, decompose and compare aggregation views")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an expression and print its result.
    Eval {
        #[command(flatten)]
        load: Load,
        #[arg(long)]
        expr: String,
        #[arg(long, value_enum, default_value_t = Out::Table)]
        out: Out,
        /// Print the SQL instead of evaluating; same as `--out sql`.
        #[arg(long, conflicts_with = "out")]
        emit_sql: bool,
        /// Proceed with compositions whose verdict is UnsafeOverridable.
        #[arg(long = "override")]
        override_: bool,
    },
    /// Print the safety verdict of the outermost composition. Exits 0 for
    /// Safe, 2 for UnsafeOverridable, 3 for Unsafe.
    Check {
        #[command(flatten)]
        load: Load,
        #[arg(long)]
        expr: String,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

#[derive(Args)]
struct Load {
    /// CSV file; the table is named after the file stem. Repeatable.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    /// JSON array of view definitions.
    #[arg(long)]
    views: Option<PathBuf>,
    /// JSON hierarchy: {"fds": [{"from": "day", "to": "month"}]}.
    #[arg(long)]
    hierarchy: Option<PathBuf>,
    /// Role hint `attr=dimension|measure`. Repeatable.
    #[arg(long = "roles", value_parser = parse_role)]
    roles: Vec<(String, Role)>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Out {
    Table,
    Chart,
    Sql,
}

fn parse_role(s: &str) -> Result<(String, Role), String> {
    let (attr, role) = s.split_once('=').ok_or("expected attr=role")?;
    let role = match role {
        "dimension" => Role::Dimension,
        "measure" => Role::Measure,
        other => return Err(format!("unknown role {other}; expected dimension or measure")),
    };
    Ok((attr.to_string(), role))
}

type Failure = Box<dyn std::error::Error>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load(args: &Load) -> Result<Session, Failure> {
    let hints: RoleHints = args.roles.iter().cloned().collect();
    let mut session = Session::new();
    for path in &args.data {
        let name = path.file_stem().and_then(|s| s.to_str()).ok_or_else(|| format!("bad file name {}", path.display()))?;
        session.add_csv(name, &read(path)?, &hints)?;
        log::debug!("loaded table {name} from {}", path.display());
    }
    if let Some(path) = &args.hierarchy {
        let def: HierarchyDef = serde_json::from_str(&read(path)?)?;
        session.set_hierarchy(def)?;
    }
    if let Some(path) = &args.views {
        let defs: Vec<ViewDef> = serde_json::from_str(&read(path)?)?;
        for d in &defs {
            session.add_view(d)?;
        }
    }
    Ok(session)
}

fn cell(v: &Value) -> String {
    if v.is_null() {
        String::new()
    } else {
        v.to_string()
    }
}

/// CSV in presentation order. With `label`, a leading `view` column names
/// the viewset member each row belongs to.
fn write_csv(out: impl Write, tables: &[(Option<&str>, &TableData)]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(out);
    let labelled = tables.iter().any(|(l, _)| l.is_some());
    if let Some((_, first)) = tables.first() {
        let mut header: Vec<&str> = first.columns.iter().map(String::as_str).collect();
        if labelled {
            header.insert(0, "view");
        }
        w.write_record(header)?;
    }
    for (label, t) in tables {
        for row in &t.rows {
            let mut rec: Vec<String> = row.iter().map(cell).collect();
            if labelled {
                rec.insert(0, label.unwrap_or_default().to_string());
            }
            w.write_record(rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn eval(session: &Session, expr: &str, out: Out, override_: bool) -> Result<(), Failure> {
    let value = session.eval(expr, override_)?;
    let stdout = std::io::stdout();
    if let Out::Sql = out {
        let views: Vec<View> = match value {
            EvalValue::View(v) => vec![v],
            EvalValue::ViewSet(vs) => vs.views,
            EvalValue::Model(m) => vec![vca::modelview::render_model(&m, &vca::Sampling::Observed)?],
        };
        let mut lock = stdout.lock();
        for v in &views {
            writeln!(lock, "{};", emit_sql(&v.query, &session.db)?)?;
        }
        return Ok(());
    }
    let is_set = matches!(value, EvalValue::ViewSet(_));
    let rendered = session.render_value(value)?;
    for r in &rendered {
        for w in &r.warnings {
            eprintln!("warning: {}: {w}", r.label);
        }
    }
    match out {
        Out::Table => {
            let tables: Vec<(Option<&str>, &TableData)> =
                rendered.iter().map(|r| (is_set.then_some(r.label.as_str()), &r.table)).collect();
            write_csv(stdout.lock(), &tables)?;
        }
        Out::Chart => {
            let specs: Vec<_> = rendered.iter().map(|r| &r.chart_spec).collect();
            let text = if is_set { serde_json::to_string_pretty(&specs)? } else { serde_json::to_string_pretty(specs[0])? };
            writeln!(stdout.lock(), "{text}")?;
        }
        Out::Sql => unreachable!("handled above"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Eval { load: l, expr, out, emit_sql, override_ } => {
            let out = if emit_sql { Out::Sql } else { out };
            eval(&load(&l)?, &expr, out, override_)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { load: l, expr } => {
            let verdict = load(&l)?.check(&expr)?;
            println!("{}", serde_json::to_string_pretty(&verdict)?);
            Ok(ExitCode::from(match verdict.status {
                Status::Safe => 0,
                Status::UnsafeOverridable => 2,
                Status::Unsafe => 3,
            }))
        }
        Command::Serve { port, host } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(vca_server::serve(SocketAddr::new(host, port)))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("VCA_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_flags() {
        assert_eq!(parse_role("delay=measure").unwrap(), ("delay".to_string(), Role::Measure));
        assert!(parse_role("delay").is_err());
        assert!(parse_role("delay=weight").is_err());
    }

    #[test]
    fn csv_leaves_nulls_empty_and_labels_members() {
        let t = TableData { columns: vec!["date".into(), "y".into()], rows: vec![vec![Value::Int(1), Value::Null]] };
        let mut out = Vec::new();
        write_csv(&mut out, &[(None, &t)]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "date,y\n1,\n");
        let mut out = Vec::new();
        write_csv(&mut out, &[(Some("a"), &t), (Some("b"), &t)]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "view,date,y\na,1,\nb,1,\n");
    }
}
