//! Annotation stripping: an annotation-free copy of a project plus the
//! removed annotations as ground truth.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::diag::{Code, Diagnostics};
use crate::error::{io_err, Error, Result};
use crate::graph::module_for_path;
use crate::slot::SlotKind;
use crate::source::{parse_suite, rel_path_string, SourceFile};
use crate::syntax::{annotation_sites, strip_sites};
use crate::types::parse_type;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub file: String,
    pub qualname: String,
    pub kind: SlotKind,
    pub name: String,
    pub line: usize,
    pub col: usize,
    /// The annotation as written.
    pub truth: String,
}

impl GroundTruthEntry {
    pub fn key(&self) -> (&str, &str, SlotKind, &str) {
        (&self.file, &self.qualname, self.kind, &self.name)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StripReport {
    pub files: usize,
    pub entries: usize,
    /// Removed annotations rendering to `Any` or `None`, not recorded.
    pub excluded: usize,
    /// Later annotations of an already recorded slot, not recorded.
    pub duplicates: usize,
    /// Class-body annotations with runtime meaning (dataclass fields and
    /// the like) that were removed anyway.
    pub runtime_sites: usize,
}

/// Truths rendering to `Any` or `None` are not scored.
pub fn is_excluded_truth(annotation: &str) -> bool {
    parse_type(annotation).is_ok_and(|t| t.is_any() || t.is_none())
}

/// Strips one file. Returns the new text and its truth entries.
pub fn strip_source(src: &SourceFile, report: &mut StripReport, diags: &mut Diagnostics) -> std::result::Result<(String, Vec<GroundTruthEntry>), String> {
    let suite = parse_suite(src)?;
    let sites = annotation_sites(&suite, src);
    let text = strip_sites(&src.text, &sites);
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for s in &sites {
        if s.runtime {
            report.runtime_sites += 1;
            diags.push(
                Code::AnnotationInRuntimePosition,
                format!("{}:{}", src.rel_path, s.line),
                format!("annotation on `{}` has runtime meaning; removed anyway", s.name),
            );
        }
        if s.name.is_empty() {
            continue;
        }
        if is_excluded_truth(&s.annotation) {
            report.excluded += 1;
            continue;
        }
        if !seen.insert((s.qualname.clone(), s.kind, s.name.clone())) {
            report.duplicates += 1;
            continue;
        }
        entries.push(GroundTruthEntry {
            file: src.rel_path.clone(),
            qualname: s.qualname.clone(),
            kind: s.kind,
            name: s.name.clone(),
            line: s.line,
            col: s.col,
            truth: s.annotation.clone(),
        });
    }
    Ok((text, entries))
}

/// Writes the stripped copy of `root` into `out` along with `truth.json`.
/// Files that do not parse are copied unchanged.
pub fn strip_project(root: &Path, out: &Path, diags: &mut Diagnostics) -> Result<(Vec<GroundTruthEntry>, StripReport)> {
    if !root.is_dir() {
        return Err(Error::BadRoot(root.to_path_buf()));
    }
    let mut report = StripReport::default();
    let mut truth = Vec::new();
    let walker = WalkDir::new(root).sort_by_file_name().into_iter().filter_entry(|e| {
        let name = e.file_name().to_string_lossy();
        e.depth() == 0 || !(name.starts_with('.') || name == "__pycache__")
    });
    for entry in walker {
        let entry = entry.map_err(|e| Error::Io {
            path: root.to_path_buf(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).expect("under root");
        let dest = out.join(rel);
        if let Some(parent) = dest.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        if module_for_path(rel).is_none() && rel.extension().and_then(|e| e.to_str()) != Some("py") {
            std::fs::copy(entry.path(), &dest).map_err(io_err(&dest))?;
            continue;
        }
        let src = SourceFile::read(root, rel)?;
        report.files += 1;
        match strip_source(&src, &mut report, diags) {
            Ok((text, entries)) => {
                std::fs::write(&dest, text).map_err(io_err(&dest))?;
                truth.extend(entries);
            }
            Err(msg) => {
                diags.push(Code::ParseFailure, rel_path_string(rel), msg);
                std::fs::write(&dest, &src.text).map_err(io_err(&dest))?;
            }
        }
    }
    report.entries = truth.len();
    let path = out.join("truth.json");
    let mut json = serde_json::to_vec_pretty(&truth).expect("truth serializes");
    json.push(b'\n');
    std::fs::write(&path, json).map_err(io_err(&path))?;
    Ok((truth, report))
}
