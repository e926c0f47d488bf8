use crate::dsl::{Span, SyntaxError};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Identifier; `quoted` when written in backticks (never a keyword).
    Ident { name: String, quoted: bool },
    Str(String),
    /// Unsigned numeric text, parsed once the sign is known.
    Num(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Plus,
    Minus,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident { name, .. } => format!("identifier {name}"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Eof => "end of input".into(),
            other => format!("'{}'", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Comma => ",",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            _ => "",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let byte = |i: usize| chars.get(i).map_or(text.len(), |c| c.0);
    let err = |line, col, expected: &str, found: String| SyntaxError { line, col, expected: expected.into(), found };
    while i < chars.len() {
        let c = chars[i].1;
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (start, start_line, start_col) = (i, line, col);
        let peek = chars.get(i + 1).map(|c| c.1);
        let tok = match c {
            '(' => single(&mut i, Tok::LParen),
            ')' => single(&mut i, Tok::RParen),
            '[' => single(&mut i, Tok::LBrack),
            ']' => single(&mut i, Tok::RBrack),
            ',' => single(&mut i, Tok::Comma),
            '+' => single(&mut i, Tok::Plus),
            '-' => single(&mut i, Tok::Minus),
            '=' => single(&mut i, Tok::Eq),
            '!' if peek == Some('=') => {
                i += 2;
                Tok::Ne
            }
            '<' if peek == Some('=') => {
                i += 2;
                Tok::Le
            }
            '<' if peek == Some('>') => {
                i += 2;
                Tok::Ne
            }
            '<' => single(&mut i, Tok::Lt),
            '>' if peek == Some('=') => {
                i += 2;
                Tok::Ge
            }
            '>' => single(&mut i, Tok::Gt),
            '\'' | '"' | '`' => {
                let quote = c;
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i).map(|c| c.1) {
                        None => return Err(err(start_line, start_col, &format!("closing {quote}"), "end of input".into())),
                        Some(ch) if ch == quote => {
                            if chars.get(i + 1).map(|c| c.1) == Some(quote) {
                                s.push(quote);
                                i += 2;
                            } else {
                                i += 1;
                                break;
                            }
                        }
                        Some('\n') => {
                            return Err(err(start_line, start_col, &format!("closing {quote}"), "end of line".into()))
                        }
                        Some(ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                if quote == '`' {
                    Tok::Ident { name: s, quoted: true }
                } else {
                    Tok::Str(s)
                }
            }
            c if c.is_ascii_digit() || (c == '.' && peek.is_some_and(|p| p.is_ascii_digit())) => {
                let mut s = String::new();
                let digits = |i: &mut usize, s: &mut String| {
                    while let Some(&(_, d)) = chars.get(*i).filter(|c| c.1.is_ascii_digit()) {
                        s.push(d);
                        *i += 1;
                    }
                };
                digits(&mut i, &mut s);
                if chars.get(i).map(|c| c.1) == Some('.') {
                    s.push('.');
                    i += 1;
                    digits(&mut i, &mut s);
                }
                if matches!(chars.get(i).map(|c| c.1), Some('e' | 'E')) {
                    let mut j = i + 1;
                    let mut exp = String::from("e");
                    if let Some(sign @ ('+' | '-')) = chars.get(j).map(|c| c.1) {
                        exp.push(sign);
                        j += 1;
                    }
                    if chars.get(j).is_some_and(|c| c.1.is_ascii_digit()) {
                        i = j;
                        s.push_str(&exp);
                        digits(&mut i, &mut s);
                    }
                }
                Tok::Num(s)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&(_, ch)) = chars.get(i).filter(|c| c.1.is_alphanumeric() || c.1 == '_') {
                    s.push(ch);
                    i += 1;
                }
                Tok::Ident { name: s, quoted: false }
            }
            other => return Err(err(line, col, "a token", format!("'{other}'"))),
        };
        col += i - start;
        out.push(Token { tok, span: Span { start: byte(start), end: byte(i), line: start_line, col: start_col } });
    }
    let end = text.len();
    out.push(Token { tok: Tok::Eof, span: Span { start: end, end, line, col } });
    Ok(out)
}

fn single(i: &mut usize, t: Tok) -> Tok {
    *i += 1;
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_strings() {
        assert_eq!(
            toks("1.5e-3 'it''s' `a b`"),
            vec![
                Tok::Num("1.5e-3".into()),
                Tok::Str("it's".into()),
                Tok::Ident { name: "a b".into(), quoted: true },
                Tok::Eof
            ]
        );
        assert_eq!(toks("2e"), vec![Tok::Num("2".into()), Tok::Ident { name: "e".into(), quoted: false }, Tok::Eof]);
    }

    #[test]
    fn positions() {
        let t = tokenize("a\n  - b").unwrap();
        assert_eq!((t[1].span.line, t[1].span.col), (2, 3));
        assert_eq!((t[2].span.line, t[2].span.col), (2, 5));
    }

    #[test]
    fn unterminated_string() {
        let e = tokenize("x = 'abc").unwrap_err();
        assert_eq!((e.line, e.col), (1, 5));
    }
}
