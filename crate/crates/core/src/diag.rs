//! Analysis diagnostics. Problems found while analyzing code never abort a
//! run; they are collected here and printed one per line with a stable
//! `TYPIFY-Wxxx` prefix.

use std::collections::HashSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code {
    ParseFailure,
    ArityMismatch,
    UnresolvedCallee,
    PassCapHit,
    ImportEscapesRoot,
    DecoratorNotModeled,
    BadRetrievedType,
    EmptyIndex,
    CorpusFileSkipped,
    AnnotationInRuntimePosition,
}

impl Code {
    pub fn id(self) -> &'static str {
        match self {
            Code::ParseFailure => "TYPIFY-W001",
            Code::ArityMismatch => "TYPIFY-W002",
            Code::UnresolvedCallee => "TYPIFY-W003",
            Code::PassCapHit => "TYPIFY-W004",
            Code::ImportEscapesRoot => "TYPIFY-W005",
            Code::DecoratorNotModeled => "TYPIFY-W006",
            Code::BadRetrievedType => "TYPIFY-W007",
            Code::EmptyIndex => "TYPIFY-W008",
            Code::CorpusFileSkipped => "TYPIFY-W009",
            Code::AnnotationInRuntimePosition => "TYPIFY-W010",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagnostic {
    pub code: Code,
    /// Where it happened: a module name, a file path, or `file:line`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.code.id(), self.location, self.message)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    items: Vec<Diagnostic>,
    seen: HashSet<Diagnostic>,
}

impl Diagnostics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, code: Code, location: impl Into<String>, message: impl Into<String>) {
        let d = Diagnostic {
            code,
            location: location.into(),
            message: message.into(),
        };
        // the same call site can be revisited on every fixpoint pass
        if self.seen.insert(d.clone()) {
            self.items.push(d);
        }
    }

    pub fn extend(&mut self, other: Diagnostics) {
        for d in other.items {
            if self.seen.insert(d.clone()) {
                self.items.push(d);
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Diagnostic> {
        self.items.iter()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn count(&self, code: Code) -> usize {
        self.items.iter().filter(|d| d.code == code).count()
    }
}
