use std::str::FromStr;

use crate::dsl::lexer::{tokenize, Tok, Token};
use crate::dsl::{ExprKind, HierOpts, Span, SyntaxError, VcaExpr};
use crate::modelview::ModelKind;
use crate::relalg::{AggFn, ArithOp, CmpOp, Predicate};
use crate::value::Value;

pub(crate) const FUNCTIONS: [&str; 6] = ["compose", "union", "extract", "explode", "lift", "stat"];
/// Words that cannot start a predicate atom unquoted.
pub(crate) const RESERVED: [&str; 5] = ["and", "or", "not", "in", "true"];

/// Parse a composition expression.
pub fn parse(text: &str) -> Result<VcaExpr, SyntaxError> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parse a standalone predicate such as `src = 'SFO' and date >= 2`.
pub fn parse_predicate(text: &str) -> Result<Predicate, SyntaxError> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    let pred = p.pred()?;
    p.expect_eof()?;
    Ok(pred)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> SyntaxError {
        let t = &self.toks[self.pos];
        SyntaxError { line: t.span.line, col: t.span.col, expected: expected.into(), found: t.tok.describe() }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<Span, SyntaxError> {
        if self.peek() == &t {
            Ok(self.bump().span)
        } else {
            Err(self.error(what))
        }
    }

    fn expect_eof(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => Err(self.error("end of input")),
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident { name, quoted: false } if name.eq_ignore_ascii_case(kw))
    }

    fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident { name, .. } => {
                self.bump();
                Ok(name)
            }
            _ => Err(self.error(what)),
        }
    }

    fn span_from(&self, start: Span) -> Span {
        let end = self.toks[self.pos.saturating_sub(1)].span.end;
        Span { end: end.max(start.start), ..start }
    }

    fn finish(&self, start: Span, kind: ExprKind) -> VcaExpr {
        VcaExpr { kind, span: self.span_from(start) }
    }

    // expr = term { ("+" | "-") term }
    fn expr(&mut self) -> Result<VcaExpr, SyntaxError> {
        let start = self.span();
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.term()?;
            left = self.finish(
                start,
                ExprKind::StatCompose { left: Box::new(left), right: Box::new(right), op, opts: HierOpts::default() },
            );
        }
    }

    fn term(&mut self) -> Result<VcaExpr, SyntaxError> {
        let start = self.span();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let mut e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                e.span = self.span_from(start);
                Ok(e)
            }
            Tok::LBrack => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat(&Tok::RBrack) {
                    loop {
                        items.push(self.expr()?);
                        if self.eat(&Tok::RBrack) {
                            break;
                        }
                        self.expect(Tok::Comma, "',' or ']'")?;
                    }
                }
                Ok(self.finish(start, ExprKind::List { items }))
            }
            Tok::Ident { name, quoted } => {
                self.bump();
                if !quoted && self.peek() == &Tok::LParen {
                    let lower = name.to_ascii_lowercase();
                    if !FUNCTIONS.contains(&lower.as_str()) {
                        return Err(SyntaxError {
                            line: start.line,
                            col: start.col,
                            expected: format!("one of {}", FUNCTIONS.join(", ")),
                            found: format!("call to {name}"),
                        });
                    }
                    self.bump();
                    let kind = self.call(&lower)?;
                    self.expect(Tok::RParen, "')'")?;
                    return Ok(self.finish(start, kind));
                }
                Ok(self.finish(start, ExprKind::ViewRef { name }))
            }
            _ => Err(self.error("a view name, a call, '(' or '['")),
        }
    }

    fn call(&mut self, name: &str) -> Result<ExprKind, SyntaxError> {
        let first = Box::new(self.expr()?);
        match name {
            "compose" => {
                self.expect(Tok::Comma, "','")?;
                let right = Box::new(self.expr()?);
                let mut op = ArithOp::Sub;
                let opts = self.options(Some(&mut op))?;
                Ok(ExprKind::StatCompose { left: first, right, op, opts })
            }
            "union" => {
                if self.peek() == &Tok::RParen {
                    return Ok(ExprKind::ViewsetUnion { input: first });
                }
                self.expect(Tok::Comma, "',' or ')'")?;
                let right = Box::new(self.expr()?);
                let opts = self.options(None)?;
                Ok(ExprKind::UnionCompose { left: first, right, opts })
            }
            "extract" => {
                self.expect(Tok::Comma, "','")?;
                Ok(ExprKind::Extract { input: first, pred: self.pred()? })
            }
            "explode" => {
                let mut attrs = Vec::new();
                while self.eat(&Tok::Comma) {
                    attrs.push(self.ident("an attribute name")?);
                }
                if attrs.is_empty() {
                    return Err(self.error("',' and an attribute name"));
                }
                Ok(ExprKind::Explode { input: first, attrs })
            }
            "lift" => {
                self.expect(Tok::Comma, "','")?;
                let model_span = self.span();
                let model_name = self.ident("a model kind")?;
                let model = ModelKind::from_str(&model_name).map_err(|_| SyntaxError {
                    line: model_span.line,
                    col: model_span.col,
                    expected: "model kind linear".into(),
                    found: model_name.clone(),
                })?;
                self.expect(Tok::Comma, "','")?;
                let ad = self.ident_list()?;
                let ac = if self.eat(&Tok::Comma) { self.ident_list()? } else { Vec::new() };
                Ok(ExprKind::Lift { input: first, model, ad, ac })
            }
            "stat" => {
                self.expect(Tok::Comma, "','")?;
                let agg = self.agg()?;
                Ok(ExprKind::ViewsetStat { input: first, agg })
            }
            _ => unreachable!("checked against FUNCTIONS"),
        }
    }

    fn agg(&mut self) -> Result<AggFn, SyntaxError> {
        let span = self.span();
        let name = self.ident("an aggregate")?;
        AggFn::from_str(&name).map_err(|_| SyntaxError {
            line: span.line,
            col: span.col,
            expected: "one of avg, min, max, sum, count, std".into(),
            found: name,
        })
    }

    fn ident_list(&mut self) -> Result<Vec<String>, SyntaxError> {
        self.expect(Tok::LBrack, "'['")?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBrack) {
            return Ok(out);
        }
        loop {
            out.push(self.ident("an attribute name")?);
            if self.eat(&Tok::RBrack) {
                return Ok(out);
            }
            self.expect(Tok::Comma, "',' or ']'")?;
        }
    }

    /// `{"," option}` where option is `op="*"`, `reagg=f` or `override`.
    fn options(&mut self, mut op: Option<&mut ArithOp>) -> Result<HierOpts, SyntaxError> {
        let mut opts = HierOpts::default();
        let allowed = if op.is_some() { "op=, reagg= or override" } else { "reagg= or override" };
        while self.eat(&Tok::Comma) {
            if self.keyword("override") {
                self.bump();
                opts.override_ = true;
            } else if self.keyword("reagg") && self.peek_at(1) == &Tok::Eq {
                self.bump();
                self.bump();
                opts.reagg = Some(self.agg()?);
            } else if op.is_some() && self.keyword("op") && self.peek_at(1) == &Tok::Eq {
                self.bump();
                self.bump();
                let span = self.span();
                let text = match self.bump().tok {
                    Tok::Str(s) => s,
                    Tok::Plus => "+".into(),
                    Tok::Minus => "-".into(),
                    _ => String::new(),
                };
                let parsed = ArithOp::from_str(&text).map_err(|_| SyntaxError {
                    line: span.line,
                    col: span.col,
                    expected: "\"+\", \"-\", \"*\" or \"/\"".into(),
                    found: text.clone(),
                })?;
                if let Some(slot) = op.as_deref_mut() {
                    *slot = parsed;
                }
            } else {
                return Err(self.error(allowed));
            }
        }
        Ok(opts)
    }

    // pred = conj { "or" conj }
    fn pred(&mut self) -> Result<Predicate, SyntaxError> {
        let mut left = self.conj()?;
        while self.keyword("or") {
            self.bump();
            let right = self.conj()?;
            left = Predicate::Or { left: Box::new(left), right: Box::new(right) };
        }
        Ok(left)
    }

    // conj = neg { "and" neg }
    fn conj(&mut self) -> Result<Predicate, SyntaxError> {
        let mut left = self.neg()?;
        while self.keyword("and") {
            self.bump();
            let right = self.neg()?;
            left = Predicate::And { left: Box::new(left), right: Box::new(right) };
        }
        Ok(left)
    }

    // neg = "not" neg | atom
    fn neg(&mut self) -> Result<Predicate, SyntaxError> {
        if self.keyword("not") {
            self.bump();
            return Ok(Predicate::Not { inner: Box::new(self.neg()?) });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Predicate, SyntaxError> {
        if self.keyword("true") {
            self.bump();
            return Ok(Predicate::True);
        }
        if self.eat(&Tok::LParen) {
            let p = self.pred()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(p);
        }
        let attr = match self.peek() {
            Tok::Ident { quoted: false, name } if RESERVED.contains(&name.to_ascii_lowercase().as_str()) => {
                return Err(self.error("an attribute name"));
            }
            _ => self.ident("an attribute name, 'true', 'not' or '('")?,
        };
        if self.keyword("in") {
            self.bump();
            self.expect(Tok::LParen, "'('")?;
            let mut values = Vec::new();
            if !self.eat(&Tok::RParen) {
                loop {
                    values.push(self.literal()?);
                    if self.eat(&Tok::RParen) {
                        break;
                    }
                    self.expect(Tok::Comma, "',' or ')'")?;
                }
            }
            return Ok(Predicate::In { attr, values });
        }
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Err(self.error("a comparison operator or 'in'")),
        };
        self.bump();
        Ok(Predicate::Cmp { attr, op, value: self.literal()? })
    }

    fn literal(&mut self) -> Result<Value, SyntaxError> {
        let span = self.span();
        let negative = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Num(text) => {
                self.bump();
                let text = if negative { format!("-{text}") } else { text };
                let bad = |_| SyntaxError { line: span.line, col: span.col, expected: "a number".into(), found: text.clone() };
                if text.contains(['.', 'e', 'E']) {
                    text.parse::<f64>().map(Value::Float).map_err(|e| bad(e.to_string()))
                } else {
                    text.parse::<i64>().map(Value::Int).map_err(|e| bad(e.to_string()))
                }
            }
            _ if negative => Err(self.error("a number")),
            Tok::Str(s) => {
                self.bump();
                Ok(Value::Str(s))
            }
            _ if self.keyword("null") => {
                self.bump();
                Ok(Value::Null)
            }
            _ if self.keyword("date") && matches!(self.peek_at(1), Tok::Str(_)) => {
                self.bump();
                let at = self.span();
                let Tok::Str(s) = self.bump().tok else { unreachable!() };
                Value::date(&s).ok_or(SyntaxError {
                    line: at.line,
                    col: at.col,
                    expected: "a YYYY-MM-DD date".into(),
                    found: format!("'{s}'"),
                })
            }
            _ => Err(self.error("a literal")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Box<VcaExpr> {
        Box::new(VcaExpr::view(name))
    }

    #[test]
    fn infix_is_left_associative() {
        let e = parse("A - B + C").unwrap();
        let want = VcaExpr::stat(VcaExpr::stat(VcaExpr::view("A"), VcaExpr::view("B"), ArithOp::Sub), VcaExpr::view("C"), ArithOp::Add);
        assert_eq!(e, want);
        let e = parse("A - (B + C)").unwrap();
        let want = VcaExpr::stat(VcaExpr::view("A"), VcaExpr::stat(VcaExpr::view("B"), VcaExpr::view("C"), ArithOp::Add), ArithOp::Sub);
        assert_eq!(e, want);
    }

    #[test]
    fn seed_cases() {
        assert_eq!(parse("SFO - OAK").unwrap(), VcaExpr::stat(VcaExpr::view("SFO"), VcaExpr::view("OAK"), ArithOp::Sub));
        assert_eq!(
            parse("union(explode(ALL, src))").unwrap().kind,
            ExprKind::ViewsetUnion {
                input: Box::new(VcaExpr::new(ExprKind::Explode { input: v("ALL"), attrs: vec!["src".into()] }))
            }
        );
        assert_eq!(
            parse("lift(SFO, linear, [date], [])").unwrap().kind,
            ExprKind::Lift { input: v("SFO"), model: ModelKind::Linear, ad: vec!["date".into()], ac: vec![] }
        );
    }

    #[test]
    fn options() {
        let e = parse(r#"compose(a, b, op="*", reagg=sum, override)"#).unwrap();
        assert_eq!(
            e.kind,
            ExprKind::StatCompose {
                left: v("a"),
                right: v("b"),
                op: ArithOp::Mul,
                opts: HierOpts { reagg: Some(AggFn::Sum), override_: true }
            }
        );
        assert!(parse("union(a, b, op=\"*\")").is_err());
    }

    #[test]
    fn predicates() {
        let p = parse_predicate("not a = -1.5e2 and b in ('x', 2) or true").unwrap();
        let want = Predicate::Or {
            left: Box::new(Predicate::And {
                left: Box::new(Predicate::Not { inner: Box::new(Predicate::cmp("a", CmpOp::Eq, -150.0)) }),
                right: Box::new(Predicate::In { attr: "b".into(), values: vec![Value::str("x"), Value::Int(2)] }),
            }),
            right: Box::new(Predicate::True),
        };
        assert_eq!(p, want);
        assert_eq!(
            parse_predicate("d <= date '2021-01-02'").unwrap(),
            Predicate::cmp("d", CmpOp::Le, Value::date("2021-01-02").unwrap())
        );
        assert_eq!(parse_predicate("`and` = 1").unwrap(), Predicate::eq("and", 1i64));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("SFO -").unwrap_err();
        assert_eq!((e.line, e.col), (1, 6));
        let e = parse("frob(A)").unwrap_err();
        assert!(e.expected.contains("compose"));
        let e = parse("extract(A, src ==)").unwrap_err();
        assert_eq!(e.col, 17);
        assert!(parse("A B").is_err());
    }

    #[test]
    fn spans() {
        let e = parse("A - extract(B, x = 1)").unwrap();
        let ExprKind::StatCompose { right, .. } = &e.kind else { panic!() };
        assert_eq!((right.span.start, right.span.end, right.span.col), (4, 21, 5));
    }
}
