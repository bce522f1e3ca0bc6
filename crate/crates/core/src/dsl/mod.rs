//! Scenario description language: parse, validate, lower.

mod ast;
mod lexer;
mod lower;
mod parser;
mod pretty;
mod validate;

pub use ast::*;
pub use lower::{lower, LowerError, Lowered};
pub use parser::parse;
pub use pretty::pretty;
pub use validate::validate;

/// Parses, validates and lowers a scenario source in one step.
pub fn compile(source: &str, name: &str) -> Result<Lowered, CompileError> {
    let doc = parse(source).map_err(CompileError::Parse)?;
    let semantic = validate(&doc);
    if !semantic.is_empty() {
        return Err(CompileError::Semantic(semantic));
    }
    let mut lowered = lower(&doc).map_err(|e| match e {
        LowerError::Invalid(errors) => CompileError::Semantic(errors),
    })?;
    lowered.scenario.name = name.to_string();
    Ok(lowered)
}

/// Failure of [`compile`]: either the source does not parse or it does not
/// validate.
#[derive(Debug, Clone)]
pub enum CompileError {
    Parse(Vec<ParseError>),
    Semantic(Vec<SemanticError>),
}

impl std::fmt::Display for CompileError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CompileError::Parse(errors) => {
                for e in errors {
                    writeln!(f, "{e}")?;
                }
            }
            CompileError::Semantic(errors) => {
                for e in errors {
                    writeln!(f, "{e}")?;
                }
            }
        }
        Ok(())
    }
}

impl std::error::Error for CompileError {}
