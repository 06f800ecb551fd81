use std::collections::BTreeSet;

use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::model::{
    Classifier, Derivation, Direction, GeneralizationSet, Model, ModelBuilder, Multiplicity,
    QualityRef, QualitySpace, RelationDecl, RelationStereotype, SourceSpan, SpaceKind, Stereotype,
};

const RESERVED: &[&str] = &[
    "model",
    "abstract",
    "specializes",
    "space",
    "ordered",
    "nominal",
    "derivedFrom",
    "via",
    "genset",
    "disjoint",
    "complete",
    "general",
    "specifics",
];

fn is_reserved(s: &str) -> bool {
    RESERVED.contains(&s)
        || Stereotype::from_keyword(s).is_some()
        || RelationStereotype::from_keyword(s).is_some()
        || Direction::from_keyword(s).is_some()
}

fn starts_declaration(tok: &Tok) -> bool {
    match tok {
        Tok::Ident(s) => {
            matches!(s.as_str(), "abstract" | "genset" | "space")
                || Stereotype::from_keyword(s).is_some()
                || RelationStereotype::from_keyword(s).is_some()
        }
        _ => false,
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    errors: Vec<ParseError>,
    builder: ModelBuilder,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        let message = match expected {
            [] => format!("unexpected {}", t.tok.describe()),
            [one] => format!("expected {one}, found {}", t.tok.describe()),
            many => format!("expected one of {}, found {}", many.join(", "), t.tok.describe()),
        };
        ParseError {
            span: t.span,
            message,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error_here(&[&format!("`{kw}`")]))
        }
    }

    fn expect(&mut self, want: Tok) -> PResult<Token> {
        if self.peek().tok == want {
            Ok(self.bump())
        } else {
            Err(self.error_here(&[&want.describe()]))
        }
    }

    fn ident(&mut self) -> PResult<(String, SourceSpan)> {
        match &self.peek().tok {
            Tok::Ident(s) if !is_reserved(s) => {
                let t = self.bump();
                let Tok::Ident(s) = t.tok else { unreachable!() };
                Ok((s, t.span))
            }
            _ => Err(self.error_here(&["identifier"])),
        }
    }

    fn int(&mut self) -> PResult<(i64, SourceSpan)> {
        match self.peek().tok {
            Tok::Int(n) => {
                let span = self.bump().span;
                Ok((n, span))
            }
            _ => Err(self.error_here(&["integer"])),
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let mut out = vec![self.ident()?.0];
        while self.peek().tok == Tok::Comma {
            self.bump();
            out.push(self.ident()?.0);
        }
        Ok(out)
    }

    fn card(&mut self) -> PResult<Multiplicity> {
        let open = self.expect(Tok::LBracket)?;
        let (min, _) = self.int()?;
        self.expect(Tok::DotDot)?;
        let max = match self.peek().tok {
            Tok::Star => {
                self.bump();
                None
            }
            Tok::Int(_) => Some(self.int()?.0),
            _ => return Err(self.error_here(&["integer", "`*`"])),
        };
        let close = self.expect(Tok::RBracket)?;
        let span = SourceSpan::new(
            open.span.line,
            open.span.column,
            if close.span.line == open.span.line {
                close.span.column + 1 - open.span.column
            } else {
                1
            },
        );
        let to_u32 = |n: i64| u32::try_from(n).ok();
        let m = match (to_u32(min), max.map(to_u32)) {
            (Some(min), None) => Multiplicity::new(min, None),
            (Some(min), Some(Some(max))) => Multiplicity::new(min, Some(max)),
            _ => {
                return Err(ParseError {
                    span,
                    message: "multiplicity bound out of range".into(),
                    expected: vec![],
                })
            }
        };
        if !m.is_valid() {
            return Err(ParseError {
                span,
                message: format!("invalid multiplicity {m}"),
                expected: vec![],
            });
        }
        Ok(m)
    }

    fn model_header(&mut self) {
        let start = self.pos;
        if self.eat_keyword("model") {
            match self.ident() {
                Ok((name, span)) => self.builder.set_name(name, span),
                Err(e) => {
                    self.errors.push(e);
                    self.recover(start);
                }
            }
        } else {
            self.errors.push(self.error_here(&["`model`"]));
            self.builder.set_name("Unnamed", self.peek().span);
            if !starts_declaration(&self.peek().tok) {
                self.recover(start);
            }
        }
    }

    /// Skips to the next token that can begin a declaration. At least one
    /// token is consumed unless the failed declaration already consumed some.
    fn recover(&mut self, decl_start: usize) {
        if self.pos > decl_start && starts_declaration(&self.peek().tok) {
            return;
        }
        loop {
            if self.peek().tok == Tok::Eof {
                return;
            }
            self.bump();
            if starts_declaration(&self.peek().tok) {
                return;
            }
        }
    }

    fn declaration(&mut self) -> PResult<()> {
        let Tok::Ident(word) = self.peek().tok.clone() else {
            return Err(self.error_here(&["declaration"]));
        };
        if word == "abstract" {
            self.bump();
            return match &self.peek().tok {
                Tok::Ident(s) if Stereotype::from_keyword(s).is_some() => {
                    self.classifier(true)
                }
                _ => Err(self.error_here(&["classifier stereotype"])),
            };
        }
        if Stereotype::from_keyword(&word).is_some() {
            return self.classifier(false);
        }
        if RelationStereotype::from_keyword(&word).is_some() {
            return self.relation();
        }
        match word.as_str() {
            "genset" => self.genset(),
            "space" => self.space(),
            _ => Err(self.error_here(&["declaration"])),
        }
    }

    fn classifier(&mut self, is_abstract: bool) -> PResult<()> {
        let Tok::Ident(kw) = self.bump().tok else { unreachable!() };
        let stereotype = Stereotype::from_keyword(&kw).expect("checked by caller");
        let (name, span) = self.ident()?;
        let parents = if self.eat_keyword("specializes") {
            self.ident_list()?
        } else {
            Vec::new()
        };
        let mut c = Classifier::new(name, stereotype)
            .with_parents(parents)
            .with_span(span);
        c.is_abstract = is_abstract;
        self.builder.push_classifier(c);
        Ok(())
    }

    fn relation(&mut self) -> PResult<()> {
        let Tok::Ident(kw) = self.bump().tok else { unreachable!() };
        let stereotype = RelationStereotype::from_keyword(&kw).expect("checked by caller");
        let comparative = stereotype == RelationStereotype::Comparative;
        let (name, span) = self.ident()?;
        self.expect(Tok::Colon)?;
        let (source, _) = self.ident()?;

        let card_or_reject = |p: &mut Parser| -> PResult<Multiplicity> {
            if comparative {
                if p.peek().tok == Tok::LBracket {
                    let at = p.peek().span;
                    return Err(ParseError {
                        span: at,
                        message: "comparative relations carry no multiplicities".into(),
                        expected: vec![],
                    });
                }
                Ok(Multiplicity::ANY)
            } else {
                p.card()
            }
        };
        let source_mult = card_or_reject(self)?;
        self.expect(Tok::DashDash)?;
        let target_mult = card_or_reject(self)?;
        let (target, _) = self.ident()?;

        let mut rel = RelationDecl::new(
            name,
            stereotype,
            source,
            source_mult,
            target_mult,
            target,
        );
        rel.span = span;
        if self.eat_keyword("derivedFrom") {
            let (relator, _) = self.ident()?;
            let multiplicity = self.card()?;
            rel.derived_from = Some(Derivation {
                relator,
                multiplicity,
            });
        }
        if self.eat_keyword("via") {
            let (quality, _) = self.ident()?;
            let direction = match &self.peek().tok {
                Tok::Ident(s) => Direction::from_keyword(s),
                _ => None,
            };
            let Some(direction) = direction else {
                let dirs: Vec<String> = Direction::ALL
                    .iter()
                    .map(|d| format!("`{}`", d.keyword()))
                    .collect();
                let dirs: Vec<&str> = dirs.iter().map(String::as_str).collect();
                return Err(self.error_here(&dirs));
            };
            self.bump();
            rel.via_quality = Some(QualityRef { quality, direction });
        }
        self.builder.push_relation(rel);
        Ok(())
    }

    fn genset(&mut self) -> PResult<()> {
        self.bump();
        let (name, span) = self.ident()?;
        let is_disjoint = self.eat_keyword("disjoint");
        let is_complete = self.eat_keyword("complete");
        self.expect_keyword("general")?;
        let (general, _) = self.ident()?;
        self.expect_keyword("specifics")?;
        let specifics: BTreeSet<String> = self.ident_list()?.into_iter().collect();
        self.builder.push_generalization_set(GeneralizationSet {
            name,
            general,
            specifics,
            is_disjoint,
            is_complete,
            span,
        });
        Ok(())
    }

    fn space(&mut self) -> PResult<()> {
        self.bump();
        let (owner, span) = self.ident()?;
        let kind = if self.eat_keyword("ordered") {
            let (lo, _) = self.int()?;
            self.expect(Tok::DotDot)?;
            let (hi, _) = self.int()?;
            SpaceKind::Ordered { lo, hi }
        } else if self.eat_keyword("nominal") {
            self.expect(Tok::LBrace)?;
            let labels = self.ident_list()?;
            self.expect(Tok::RBrace)?;
            SpaceKind::Nominal(labels)
        } else {
            return Err(self.error_here(&["`ordered`", "`nominal`"]));
        };
        self.builder.push_space(QualitySpace { owner, kind, span });
        Ok(())
    }
}

/// Parses DSL source into a resolved [`Model`], or reports every syntax and
/// resolution error found. Parsing resumes at the next declaration keyword
/// after an error.
pub fn parse_text(source: &str) -> Result<Model, Vec<ParseError>> {
    let mut p = Parser {
        toks: tokenize(source),
        pos: 0,
        errors: Vec::new(),
        builder: ModelBuilder::default(),
    };
    p.model_header();
    while p.peek().tok != Tok::Eof {
        let start = p.pos;
        if let Err(e) = p.declaration() {
            p.errors.push(e);
            p.recover(start);
        }
    }
    if !p.errors.is_empty() {
        return Err(p.errors);
    }
    p.builder.build().map_err(|errs| {
        errs.into_iter()
            .map(|e| ParseError {
                span: e.span,
                message: e.message,
                expected: vec![],
            })
            .collect()
    })
}

/// Like [`parse_text`] but accepts arbitrary bytes; invalid UTF-8 is a parse
/// error located at the first offending byte.
pub fn parse_bytes(bytes: &[u8]) -> Result<Model, Vec<ParseError>> {
    match std::str::from_utf8(bytes) {
        Ok(s) => parse_text(s),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).unwrap_or("");
            let line = valid.matches('\n').count() as u32 + 1;
            let column = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) as u32 + 1;
            Err(vec![ParseError {
                span: SourceSpan::new(line, column, 1),
                message: "input is not valid UTF-8".into(),
                expected: vec![],
            }])
        }
    }
}
