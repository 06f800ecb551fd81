//! Textual front end: the `.onto` modelling language.
//!
//! ```text
//! model      := "model" IDENT decl* ;
//! decl       := classifier | relation | genset | space ;
//! classifier := ["abstract"] STEREO IDENT ["specializes" IDENT {"," IDENT}] ;
//! space      := "space" IDENT ("ordered" INT ".." INT | "nominal" "{" IDENT {"," IDENT} "}") ;
//! relation   := RELSTEREO IDENT ":" IDENT CARD "--" CARD IDENT
//!               ["derivedFrom" IDENT CARD] ["via" IDENT DIRECTION] ;
//! genset     := "genset" IDENT ["disjoint"] ["complete"]
//!               "general" IDENT "specifics" IDENT {"," IDENT} ;
//! CARD       := "[" INT ".." (INT | "*") "]" ;
//! DIRECTION  := "asc" | "desc" | "ascOrEqual" | "descOrEqual" ;
//! ```
//!
//! Comparative relations omit both `CARD`s. For a mediation the left card
//! counts relators per mediated instance and the right card counts mediated
//! instances per relator.

mod lexer;
mod parser;
mod printer;

use std::fmt;

use crate::model::SourceSpan;

pub use parser::{parse_bytes, parse_text};
pub use printer::to_dsl;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    /// Descriptions of the tokens that would have been accepted.
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

impl std::error::Error for ParseError {}
