//! Loading and parsing Python source files.

use std::path::{Path, PathBuf};

use rustpython_parser::{ast, Parse};

use crate::error::{io_err, Result};
use crate::exec::{par_map, Exec};

/// Byte offsets of line starts, for turning AST offsets into positions.
#[derive(Clone, Debug)]
pub struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    pub fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { starts }
    }

    /// 1-based line, 0-based byte column.
    pub fn position(&self, offset: usize) -> (usize, usize) {
        let line = match self.starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (line + 1, offset - self.starts[line])
    }

    pub fn line_count(&self) -> usize {
        self.starts.len()
    }
}

#[derive(Clone, Debug)]
pub struct SourceFile {
    /// Path relative to the project root, `/`-separated.
    pub rel_path: String,
    pub text: String,
    pub lines: LineIndex,
}

impl SourceFile {
    pub fn new(rel_path: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let lines = LineIndex::new(&text);
        SourceFile {
            rel_path: rel_path.into(),
            text,
            lines,
        }
    }

    pub fn read(root: &Path, rel: &Path) -> Result<Self> {
        let full = root.join(rel);
        let text = std::fs::read_to_string(&full).map_err(io_err(&full))?;
        Ok(SourceFile::new(rel_path_string(rel), text))
    }

    pub fn position(&self, offset: impl Into<usize>) -> (usize, usize) {
        self.lines.position(offset.into())
    }
}

pub fn rel_path_string(rel: &Path) -> String {
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

pub type Suite = Vec<ast::Stmt>;

/// Parses a whole file. The error string carries the parser's message.
pub fn parse_suite(src: &SourceFile) -> std::result::Result<Suite, String> {
    ast::Suite::parse(&src.text, &src.rel_path).map_err(|e| {
        let (line, col) = src.position(usize::from(e.offset));
        format!("line {line}, column {col}: {}", e.error)
    })
}

/// Parses many files, in parallel when `exec` allows it.
pub fn parse_many(exec: Exec, files: &[SourceFile]) -> Vec<std::result::Result<Suite, String>> {
    par_map(exec, files, parse_suite)
}

pub fn absolute(p: &Path) -> PathBuf {
    std::fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}
