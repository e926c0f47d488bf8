use std::fmt;

use crate::dsl::parser::RESERVED;
use crate::dsl::{ExprKind, VcaExpr};
use crate::relalg::{ArithOp, Predicate};
use crate::value::Value;

/// Identifier as it must be written in the DSL: bare when it lexes as a
/// plain identifier, otherwise in backticks.
pub fn quote_ident(name: &str) -> String {
    let mut chars = name.chars();
    let plain = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED.contains(&name.to_ascii_lowercase().as_str());
    if plain {
        name.to_string()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}

fn literal(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Int(i) => i.to_string(),
        Value::Float(x) => format!("{x:?}"),
        Value::Str(s) => format!("'{}'", s.replace('\'', "''")),
        Value::Date(d) => format!("date '{}'", d.format("%Y-%m-%d")),
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::True => f.write_str("true"),
            Predicate::Cmp { attr, op, value } => write!(f, "{} {} {}", quote_ident(attr), op.symbol(), literal(value)),
            Predicate::In { attr, values } => {
                let vs: Vec<String> = values.iter().map(literal).collect();
                write!(f, "{} in ({})", quote_ident(attr), vs.join(", "))
            }
            Predicate::And { left, right } => write!(f, "({left} and {right})"),
            Predicate::Or { left, right } => write!(f, "({left} or {right})"),
            Predicate::Not { inner } => write!(f, "not {inner}"),
        }
    }
}

fn is_infix(e: &VcaExpr) -> bool {
    matches!(&e.kind, ExprKind::StatCompose { op: ArithOp::Add | ArithOp::Sub, opts, .. } if opts.is_default())
}

fn idents(names: &[String]) -> String {
    names.iter().map(|n| quote_ident(n)).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for VcaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::ViewRef { name } => f.write_str(&quote_ident(name)),
            ExprKind::StatCompose { left, right, op, .. } if is_infix(self) => {
                if is_infix(right) {
                    write!(f, "{left} {op} ({right})")
                } else {
                    write!(f, "{left} {op} {right}")
                }
            }
            ExprKind::StatCompose { left, right, op, opts } => {
                write!(f, "compose({left}, {right}, op=\"{op}\"")?;
                if let Some(r) = opts.reagg {
                    write!(f, ", reagg={r}")?;
                }
                if opts.override_ {
                    f.write_str(", override")?;
                }
                f.write_str(")")
            }
            ExprKind::UnionCompose { left, right, opts } => {
                write!(f, "union({left}, {right}")?;
                if let Some(r) = opts.reagg {
                    write!(f, ", reagg={r}")?;
                }
                if opts.override_ {
                    f.write_str(", override")?;
                }
                f.write_str(")")
            }
            ExprKind::Extract { input, pred } => write!(f, "extract({input}, {pred})"),
            ExprKind::Explode { input, attrs } => write!(f, "explode({input}, {})", idents(attrs)),
            ExprKind::Lift { input, model, ad, ac } => {
                let kind = serde_json::to_value(model).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
                write!(f, "lift({input}, {kind}, [{}], [{}])", idents(ad), idents(ac))
            }
            ExprKind::ViewsetStat { input, agg } => write!(f, "stat({input}, {agg})"),
            ExprKind::ViewsetUnion { input } => write!(f, "union({input})"),
            ExprKind::List { items } => {
                let items: Vec<String> = items.iter().map(ToString::to_string).collect();
                write!(f, "[{}]", items.join(", "))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    #[test]
    fn prints_minimal_parentheses() {
        for src in ["A - B + C", "A - (B - C)", "compose(A, B, op=\"*\") - C", "stat([A, B], avg)"] {
            assert_eq!(parse(src).unwrap().to_string(), src);
        }
    }

    #[test]
    fn quotes_when_needed() {
        assert_eq!(quote_ident("src"), "src");
        assert_eq!(quote_ident("not"), "`not`");
        assert_eq!(quote_ident("a b"), "`a b`");
        assert_eq!(quote_ident("a`b"), "`a``b`");
        let p = Predicate::eq("or", "it's").and(Predicate::eq("x", -2i64));
        assert_eq!(p.to_string(), "(`or` = 'it''s' and x = -2)");
    }
}
