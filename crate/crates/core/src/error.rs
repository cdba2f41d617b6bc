//! Crate-wide error type and its coarse classification.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::checker::CheckError;
use crate::compose::ComposeError;
use crate::lang::LangError;
use crate::numerics::NumericsError;
use crate::sim::SimError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("{file}: {source}")]
    InFile { file: String, source: LangError },
    #[error(transparent)]
    Build(#[from] ComposeError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    /// Experiment description or edit problems.
    #[error("{0}")]
    Spec(String),
    #[error("variant `{name}`: {source}")]
    Variant { name: String, source: Box<Error> },
}

/// What kind of failure an [`Error`] is; printed as `error[<class>]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    Io,
    Lex,
    Syntax,
    Validation,
    Build,
    Check,
    Solve,
    Sim,
    Spec,
}

impl ErrorClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::Io => "io",
            ErrorClass::Lex => "lex",
            ErrorClass::Syntax => "syntax",
            ErrorClass::Validation => "validation",
            ErrorClass::Build => "build",
            ErrorClass::Check => "check",
            ErrorClass::Solve => "solve",
            ErrorClass::Sim => "sim",
            ErrorClass::Spec => "spec",
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn lang_class(e: &LangError) -> ErrorClass {
    match e {
        LangError::Lex { .. } => ErrorClass::Lex,
        LangError::Syntax { .. } => ErrorClass::Syntax,
        LangError::Validation { .. } => ErrorClass::Validation,
    }
}

fn compose_class(e: &ComposeError) -> ErrorClass {
    match e {
        ComposeError::Invalid(l) => lang_class(l),
        ComposeError::UnknownReward(_) => ErrorClass::Check,
        _ => ErrorClass::Build,
    }
}

fn numerics_class(e: &NumericsError) -> ErrorClass {
    match e {
        NumericsError::InvalidArgument(_) | NumericsError::EpsilonTooSmall(_) => ErrorClass::Check,
        _ => ErrorClass::Solve,
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::Lang(e) | Error::InFile { source: e, .. } => lang_class(e),
            Error::Build(e) => compose_class(e),
            // a query naming something the model lacks
            Error::Check(CheckError::Model(ComposeError::Eval(_))) => ErrorClass::Check,
            Error::Check(CheckError::Model(e)) => compose_class(e),
            Error::Check(CheckError::Numerics(e)) | Error::Numerics(e) => numerics_class(e),
            Error::Check(CheckError::NestedQuery) => ErrorClass::Validation,
            Error::Sim(SimError::Model(e)) => compose_class(e),
            Error::Sim(SimError::InvalidArgument(_)) => ErrorClass::Sim,
            Error::Spec(_) => ErrorClass::Spec,
            Error::Variant { source, .. } => source.class(),
        }
    }

    pub fn in_file(path: &Path, e: LangError) -> Self {
        Error::InFile {
            file: path.display().to_string(),
            source: e,
        }
    }

    pub fn in_variant(self, name: &str) -> Self {
        Error::Variant {
            name: name.to_string(),
            source: Box::new(self),
        }
    }
}
