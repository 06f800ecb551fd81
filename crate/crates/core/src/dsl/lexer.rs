use crate::model::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    DotDot,
    DashDash,
    Star,
    /// A character or sequence the lexer could not make sense of.
    Invalid(String),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::DashDash => "`--`".into(),
            Tok::Star => "`*`".into(),
            Tok::Invalid(s) => format!("invalid input `{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

/// Splits source text into tokens. Never fails: unrecognized input becomes
/// [`Tok::Invalid`] and is reported by the parser.
pub(crate) fn tokenize(src: &str) -> Vec<Token> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    while i < chars.len() {
        let c = chars[i];
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
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        let start = i;
        let tok = if c.is_ascii_alphabetic() {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit()
            || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit))
        {
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            match text.parse() {
                Ok(n) => Tok::Int(n),
                Err(_) => Tok::Invalid(text),
            }
        } else {
            let two = chars.get(i + 1).copied();
            let (tok, width) = match (c, two) {
                ('.', Some('.')) => (Tok::DotDot, 2),
                ('-', Some('-')) => (Tok::DashDash, 2),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                (',', _) => (Tok::Comma, 1),
                (':', _) => (Tok::Colon, 1),
                ('*', _) => (Tok::Star, 1),
                _ => (Tok::Invalid(c.to_string()), 1),
            };
            i += width;
            tok
        };
        let len = (i - start) as u32;
        col += len;
        out.push(Token {
            tok,
            span: SourceSpan::new(line, start_col, len),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::new(line, col, 0),
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_one_based() {
        let toks = tokenize("model M\n  kind Person # c\n[1..*]");
        let spans: Vec<_> = toks.iter().map(|t| (t.span.line, t.span.column)).collect();
        assert_eq!(
            spans,
            [(1, 1), (1, 7), (2, 3), (2, 8), (3, 1), (3, 2), (3, 3), (3, 5), (3, 6), (3, 7)]
        );
        assert_eq!(toks[3].span.length, 6);
    }

    #[test]
    fn dash_dash_and_invalid() {
        let toks = tokenize("A -- B - é");
        assert_eq!(toks[1].tok, Tok::DashDash);
        assert_eq!(toks[3].tok, Tok::Invalid("-".into()));
        assert_eq!(toks[4].tok, Tok::Invalid("é".into()));
    }
}
