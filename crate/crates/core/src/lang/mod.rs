//! The modelling language (`.gcm` files) and the property language.
//!
//! A model is a set of constants, modules owning bounded integer
//! variables with guarded commands, and named reward structures:
//!
//! ```text
//! const double koff1 = 0.2;
//! module PDGFR
//!   PDGFR : [0..2] init 0;
//!   [bkoff1] PDGFR=1 -> koff1 : (PDGFR'=0); //@reaction 2
//! endmodule
//! rewards "PDGFRactive"
//!   PDGFR=1 : 1;
//! endrewards
//! ```
//!
//! The full grammar is in `docs/grammar.md`.

pub mod ast;
pub mod eval;
mod lexer;
mod parser;
pub mod printer;
pub mod property;
mod validate;

use thiserror::Error;

pub use lexer::Pos;
pub use printer::{format_rational, print_expr, print_formula, print_model};
pub use validate::validate;

use ast::{Constant, ModelAst};
use parser::Parser;
use property::StateFormula;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationKind {
    DuplicateName,
    NoVariables,
    EmptyRange,
    InitOutOfRange,
    MissingRate,
    NonConstantRate,
    NonPositiveRate,
    ForeignUpdate,
    UnknownIdentifier,
    TypeMismatch,
    NegativeReward,
    Arithmetic,
    BoundOutOfRange,
    ReversedInterval,
    UnknownReward,
}

fn fmt_pos(pos: &Option<Pos>) -> String {
    pos.map(|p| format!("{p}: ")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("{pos}: lex error: {msg}")]
    Lex { pos: Pos, msg: String },
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{}validation error: {msg}", fmt_pos(.pos))]
    Validation {
        pos: Option<Pos>,
        kind: ValidationKind,
        msg: String,
    },
}

impl LangError {
    pub(crate) fn lex(pos: Pos, msg: impl Into<String>) -> Self {
        LangError::Lex { pos, msg: msg.into() }
    }

    pub(crate) fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        LangError::Syntax { pos, msg: msg.into() }
    }

    pub(crate) fn validation(pos: Option<Pos>, kind: ValidationKind, msg: impl Into<String>) -> Self {
        LangError::Validation {
            pos,
            kind,
            msg: msg.into(),
        }
    }

    pub fn pos(&self) -> Option<Pos> {
        match self {
            LangError::Lex { pos, .. } | LangError::Syntax { pos, .. } => Some(*pos),
            LangError::Validation { pos, .. } => *pos,
        }
    }

    pub fn validation_kind(&self) -> Option<ValidationKind> {
        match self {
            LangError::Validation { kind, .. } => Some(*kind),
            _ => None,
        }
    }
}

/// Source positions of the items of a parsed program, index-aligned with
/// the corresponding vectors of [`ModelAst`].
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub constants: Vec<Pos>,
    pub modules: Vec<Pos>,
    pub variables: Vec<Vec<Pos>>,
    pub commands: Vec<Vec<Pos>>,
    pub rewards: Vec<Pos>,
    pub state_items: Vec<Vec<Pos>>,
    pub trans_items: Vec<Vec<Pos>>,
}

/// Parse and validate a model.
pub fn parse_model(src: &str) -> Result<ModelAst, LangError> {
    parse_model_with_constants(src, &[])
}

/// Parse a model whose expressions may refer to externally supplied
/// constants (e.g. a separate rate file). The constants are prepended to
/// the result.
pub fn parse_model_with_constants(src: &str, base: &[Constant]) -> Result<ModelAst, LangError> {
    let (ast, map) = Parser::new(src, None)?.parse_program(base)?;
    validate(&ast, Some(&map))?;
    Ok(ast)
}

/// Parse a file that only declares constants.
pub fn parse_constants(src: &str) -> Result<Vec<Constant>, LangError> {
    let (ast, map) = Parser::new(src, None)?.parse_program(&[])?;
    if let Some(pos) = map.modules.first().or(map.rewards.first()) {
        return Err(LangError::syntax(*pos, "constant file may only contain `const` declarations"));
    }
    validate(&ast, Some(&map))?;
    Ok(ast.constants)
}

/// Parse one property. With a model, identifiers and reward structure
/// names are resolved against it.
pub fn parse_property(src: &str, model: Option<&ModelAst>) -> Result<StateFormula, LangError> {
    Parser::new(src, model)?.parse_formula_eof()
}

/// Parse a property file: one formula per line, `#` starts a comment.
/// Returns `(line number, formula)` pairs; error positions are file-relative.
pub fn parse_property_file(src: &str, model: Option<&ModelAst>) -> Result<Vec<(usize, StateFormula)>, LangError> {
    let mut out = Vec::new();
    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let text = raw.split('#').next().unwrap_or_default();
        if text.trim().is_empty() {
            continue;
        }
        let shift = |p: Pos| Pos { line: line_no, col: p.col };
        let f = parse_property(text, model).map_err(|e| match e {
            LangError::Lex { pos, msg } => LangError::Lex { pos: shift(pos), msg },
            LangError::Syntax { pos, msg } => LangError::Syntax { pos: shift(pos), msg },
            LangError::Validation { pos, kind, msg } => LangError::Validation {
                pos: pos.map(shift),
                kind,
                msg,
            },
        })?;
        out.push((line_no, f));
    }
    Ok(out)
}
