//! Signatures: the vocabulary of predicate, function and constant symbols.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Words with a fixed meaning in the formula language. Signature symbols may
/// not shadow them.
const RESERVED: &[&str] = &["=", "not", "and", "or", "implies", "forall", "exists"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SignatureError {
    #[error("duplicate symbol '{0}'")]
    DuplicateSymbol(String),
    #[error("symbol '{0}' has arity 0; constants are declared separately")]
    ZeroArity(String),
    #[error("symbol '{0}' is reserved")]
    ReservedSymbol(String),
    #[error("symbol '{0}' would clash with variable syntax x<index>")]
    VariableLikeSymbol(String),
    #[error("symbol '{0}' contains whitespace or delimiter characters")]
    BadSymbolToken(String),
}

/// A finite first-order signature. Equality is part of the formula language
/// and is never declared here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    name: String,
    predicates: BTreeMap<String, usize>,
    functions: BTreeMap<String, usize>,
    constants: BTreeSet<String>,
}

/// True for tokens usable as symbol or element names in the text formats.
pub fn valid_token(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| {
            c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '+' | '*' | '<' | '>')
        })
}

/// True for tokens that the term parser would read as a variable.
pub fn variable_like(s: &str) -> bool {
    s.len() > 1 && s.starts_with('x') && s[1..].chars().all(|c| c.is_ascii_digit())
}

impl Signature {
    pub fn new(
        name: impl Into<String>,
        predicates: Vec<(String, usize)>,
        functions: Vec<(String, usize)>,
        constants: Vec<String>,
    ) -> Result<Self, SignatureError> {
        let mut seen = BTreeSet::new();
        let mut check = |sym: &str, arity: Option<usize>| -> Result<(), SignatureError> {
            if !valid_token(sym) {
                return Err(SignatureError::BadSymbolToken(sym.to_string()));
            }
            if RESERVED.contains(&sym) {
                return Err(SignatureError::ReservedSymbol(sym.to_string()));
            }
            if variable_like(sym) {
                return Err(SignatureError::VariableLikeSymbol(sym.to_string()));
            }
            if arity == Some(0) {
                return Err(SignatureError::ZeroArity(sym.to_string()));
            }
            if !seen.insert(sym.to_string()) {
                return Err(SignatureError::DuplicateSymbol(sym.to_string()));
            }
            Ok(())
        };
        for (sym, ar) in &predicates {
            check(sym, Some(*ar))?;
        }
        for (sym, ar) in &functions {
            check(sym, Some(*ar))?;
        }
        for sym in &constants {
            check(sym, None)?;
        }
        Ok(Signature {
            name: name.into(),
            predicates: predicates.into_iter().collect(),
            functions: functions.into_iter().collect(),
            constants: constants.into_iter().collect(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn predicate_arity(&self, sym: &str) -> Option<usize> {
        self.predicates.get(sym).copied()
    }

    pub fn function_arity(&self, sym: &str) -> Option<usize> {
        self.functions.get(sym).copied()
    }

    pub fn has_constant(&self, sym: &str) -> bool {
        self.constants.contains(sym)
    }

    pub fn predicates(&self) -> impl Iterator<Item = (&str, usize)> {
        self.predicates.iter().map(|(s, a)| (s.as_str(), *a))
    }

    pub fn functions(&self) -> impl Iterator<Item = (&str, usize)> {
        self.functions.iter().map(|(s, a)| (s.as_str(), *a))
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.constants.iter().map(|s| s.as_str())
    }

    /// True if every symbol of `self` is declared in `other` with the same
    /// kind and arity. A scheme over a sub-signature can run on any structure
    /// of the larger one.
    pub fn sub_signature_of(&self, other: &Signature) -> bool {
        self.predicates.iter().all(|(s, a)| other.predicate_arity(s) == Some(*a))
            && self.functions.iter().all(|(s, a)| other.function_arity(s) == Some(*a))
            && self.constants.iter().all(|s| other.has_constant(s))
    }
}

impl fmt::Display for Signature {
    /// The signature file format: one declaration per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "signature {}", self.name)?;
        for sym in &self.constants {
            writeln!(f, "constant {sym}")?;
        }
        for (sym, ar) in &self.functions {
            writeln!(f, "function {sym}/{ar}")?;
        }
        for (sym, ar) in &self.predicates {
            writeln!(f, "predicate {sym}/{ar}")?;
        }
        Ok(())
    }
}

/// Parse error for the line-based text formats, carrying the 1-based line.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }
}

/// Lines of a keyed text document, with comments and blanks stripped.
pub fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Split a `sym/arity` token.
pub(crate) fn parse_sym_arity(tok: &str, line: usize) -> Result<(String, usize), ParseError> {
    let (sym, ar) = tok
        .split_once('/')
        .ok_or_else(|| ParseError::new(line, format!("expected <symbol>/<arity>, got '{tok}'")))?;
    let arity =
        ar.parse::<usize>().map_err(|_| ParseError::new(line, format!("bad arity '{ar}'")))?;
    Ok((sym.to_string(), arity))
}

/// Parse a signature file.
pub fn parse_signature(text: &str) -> Result<Signature, ParseError> {
    let mut name = None;
    let mut predicates = Vec::new();
    let mut functions = Vec::new();
    let mut constants = Vec::new();
    let mut first_line = 1;
    for (line, content) in content_lines(text) {
        let mut words = content.split_whitespace();
        let keyword = words.next().unwrap();
        let rest: Vec<&str> = words.collect();
        match keyword {
            "signature" => {
                if name.is_some() {
                    return Err(ParseError::new(line, "duplicate 'signature' header"));
                }
                if rest.len() != 1 {
                    return Err(ParseError::new(line, "expected: signature <name>"));
                }
                name = Some(rest[0].to_string());
                first_line = line;
            }
            "predicate" | "function" => {
                if rest.len() != 1 {
                    return Err(ParseError::new(
                        line,
                        format!("expected: {keyword} <sym>/<arity>"),
                    ));
                }
                let entry = parse_sym_arity(rest[0], line)?;
                if keyword == "predicate" {
                    predicates.push(entry);
                } else {
                    functions.push(entry);
                }
            }
            "constant" => {
                if rest.len() != 1 {
                    return Err(ParseError::new(line, "expected: constant <sym>"));
                }
                constants.push(rest[0].to_string());
            }
            other => {
                return Err(ParseError::new(
                    line,
                    format!("unexpected keyword '{other}' in signature file"),
                ));
            }
        }
    }
    let name = name.ok_or_else(|| ParseError::new(1, "missing 'signature <name>' header"))?;
    Signature::new(name, predicates, functions, constants)
        .map_err(|e| ParseError::new(first_line, e.to_string()))
}
