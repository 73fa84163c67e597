//! Context-matching completion for slots that usage evidence left empty:
//! an index of (source window, annotation) pairs searched with BM25, then a
//! naming-convention fallback.

mod heuristic;
mod index;
mod tokenize;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use heuristic::name_heuristic;
pub use index::{Hit, IndexMeta, RetrievalDoc, RetrievalIndex, B, K1};
pub use tokenize::{split_words, tokenize, window_text};

use crate::diag::{Code, Diagnostics};
use crate::exec::Exec;
use crate::graph::discover_modules;
use crate::slot::{Provenance, SlotKind, TypeSlot};
use crate::source::{absolute, parse_many, SourceFile};
use crate::syntax::{annotation_sites, strip_sites};
use crate::types::parse_type;
use crate::Result;

pub const DEFAULT_WINDOW: usize = 2;
pub const DEFAULT_TOP_K: usize = 5;

/// Slot kinds as seen by the index. Attribute annotations are indexed and
/// queried as variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Variable,
    Argument,
    Return,
}

impl From<SlotKind> for DocKind {
    fn from(k: SlotKind) -> Self {
        match k {
            SlotKind::Variable | SlotKind::Attribute => DocKind::Variable,
            SlotKind::Argument => DocKind::Argument,
            SlotKind::Return => DocKind::Return,
        }
    }
}

/// Query or document tokens for the window around `line`.
pub fn context_tokens(text: &str, line: usize, window: usize) -> Vec<String> {
    tokenize(&window_text(text, line, window))
}

/// One document per annotated slot in a file. Contexts come from the
/// annotation-free text, matching what queries on stripped code see.
pub fn docs_from_source(src: &SourceFile, suite: &[rustpython_parser::ast::Stmt], window: usize, diags: &mut Diagnostics) -> Vec<RetrievalDoc> {
    let sites = annotation_sites(suite, src);
    let stripped = strip_sites(&src.text, &sites);
    let mut docs = Vec::new();
    for site in &sites {
        if site.name.is_empty() {
            continue;
        }
        let ty = match parse_type(&site.annotation) {
            Ok(t) => t.render(),
            Err(e) => {
                diags.push(Code::BadRetrievedType, format!("{}:{}", src.rel_path, site.line), e.to_string());
                continue;
            }
        };
        docs.push(RetrievalDoc {
            context: context_tokens(&stripped, site.line, window).join(" "),
            type_string: ty,
            kind: site.kind.into(),
            source: src.rel_path.clone(),
            line: site.line,
        });
    }
    docs.sort_by_key(|d| d.line);
    docs
}

/// Indexes every annotated slot under `corpus_root`, in path then line
/// order.
pub fn build_index(corpus_root: &Path, window: usize, exec: Exec) -> Result<(RetrievalIndex, Diagnostics)> {
    let mut diags = Diagnostics::new();
    let modules = discover_modules(corpus_root)?;
    let mut files = Vec::new();
    for m in &modules {
        if let Some(p) = &m.path {
            files.push(SourceFile::read(corpus_root, p)?);
        }
    }
    files.sort_by(|a, b| a.rel_path.cmp(&b.rel_path));
    let parsed = parse_many(exec, &files);
    let mut docs = Vec::new();
    for (src, res) in files.iter().zip(parsed) {
        match res {
            Ok(suite) => docs.extend(docs_from_source(src, &suite, window, &mut diags)),
            Err(msg) => diags.push(Code::CorpusFileSkipped, src.rel_path.clone(), msg),
        }
    }
    if docs.is_empty() {
        diags.push(Code::EmptyIndex, corpus_root.display().to_string(), "corpus has no annotated slots");
    }
    let mut index = RetrievalIndex::new(docs, window);
    index.corpus_root = Some(absolute(corpus_root).display().to_string());
    Ok((index, diags))
}

/// Fills empty slots: ranked index matches (mid confidence), else a naming
/// heuristic (low confidence). Slots with a value are never touched.
pub fn retrieve_and_fill(
    slots: &mut [TypeSlot],
    texts: &HashMap<String, String>,
    index: Option<&RetrievalIndex>,
    scope_types: &BTreeMap<String, Vec<String>>,
    top_k: usize,
) {
    let no_types = Vec::new();
    for slot in slots.iter_mut() {
        if slot.current.is_some() || !slot.candidates.is_empty() {
            continue;
        }
        if let (Some(idx), Some(text)) = (index, texts.get(&slot.file)) {
            let q = context_tokens(text, slot.line, idx.window);
            let found = idx.search(&q, slot.kind.into(), top_k);
            let cands: Vec<_> = found.iter().filter_map(|(t, _)| parse_type(t).ok()).collect();
            if !cands.is_empty() {
                slot.candidates = cands;
                slot.provenance = Some(Provenance::Index);
                continue;
            }
        }
        let name = match slot.kind {
            SlotKind::Return => slot.qualname.rsplit('.').next().unwrap_or(&slot.qualname),
            _ => slot.name.as_str(),
        };
        let scope = scope_types.get(&slot.module).unwrap_or(&no_types);
        if let Some(t) = name_heuristic(name, scope) {
            slot.candidates = vec![t];
            slot.provenance = Some(Provenance::Heuristic);
        }
    }
}
