use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use walkdir::WalkDir;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleKind {
    Regular,
    PackageInit,
    External,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ModuleId {
    pub qualified_name: String,
    /// Relative to the project root; `None` for externals.
    pub path: Option<PathBuf>,
    pub kind: ModuleKind,
}

impl ModuleId {
    pub fn external(name: impl Into<String>) -> Self {
        ModuleId {
            qualified_name: name.into(),
            path: None,
            kind: ModuleKind::External,
        }
    }

    pub fn is_external(&self) -> bool {
        self.kind == ModuleKind::External
    }

    /// Dotted package that relative imports in this module start from.
    pub fn package(&self) -> Vec<&str> {
        let mut parts: Vec<&str> = self.qualified_name.split('.').collect();
        parts.pop();
        parts
    }

    /// Prefix used for class names defined in this module:
    /// `pkg.__init__` contributes `pkg`.
    pub fn namespace(&self) -> &str {
        match self.kind {
            ModuleKind::PackageInit => self
                .qualified_name
                .strip_suffix(".__init__")
                .unwrap_or(&self.qualified_name),
            _ => &self.qualified_name,
        }
    }
}

fn skip_dir(name: &str) -> bool {
    name.starts_with('.')
        || matches!(
            name,
            "__pycache__" | "venv" | "env" | "node_modules" | "site-packages" | "build" | "dist"
        )
}

/// Module for a `.py` path relative to the project root; `None` for the
/// root's own `__init__.py` and for non-Python files.
pub fn module_for_path(rel: &Path) -> Option<ModuleId> {
    if rel.extension().and_then(|e| e.to_str()) != Some("py") {
        return None;
    }
    let mut parts: Vec<String> = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    let file = parts.pop()?;
    let stem = file.trim_end_matches(".py").to_string();
    if stem == "__init__" && parts.is_empty() {
        return None;
    }
    let kind = if stem == "__init__" {
        ModuleKind::PackageInit
    } else {
        ModuleKind::Regular
    };
    parts.push(stem);
    Some(ModuleId {
        qualified_name: parts.join("."),
        path: Some(rel.to_path_buf()),
        kind,
    })
}

/// Maps every `.py` file under `root` to a module, in sorted order.
///
/// Directory nesting becomes dotted names; `pkg/__init__.py` becomes
/// `pkg.__init__`. The root's own `__init__.py`, if any, marks the root as a
/// package and is not assigned a module of its own.
pub fn discover_modules(root: &Path) -> Result<Vec<ModuleId>> {
    if !root.is_dir() || std::fs::read_dir(root).is_err() {
        return Err(Error::BadRoot(root.to_path_buf()));
    }
    let mut out = Vec::new();
    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            e.depth() == 0 || !e.file_type().is_dir() || !skip_dir(&e.file_name().to_string_lossy())
        });
    for entry in walker.flatten() {
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("py") {
            continue;
        }
        let rel = path.strip_prefix(root).expect("walkdir stays under root");
        if let Some(m) = module_for_path(rel) {
            out.push(m);
        }
    }
    out.sort();
    out.dedup_by(|a, b| a.qualified_name == b.qualified_name);
    Ok(out)
}

/// The project-level module symbol table: dotted names to modules.
#[derive(Clone, Debug, Default)]
pub struct ProjectIndex {
    root_name: Option<String>,
    modules: BTreeMap<String, ModuleId>,
}

impl ProjectIndex {
    pub fn new(root_name: Option<String>, modules: &[ModuleId]) -> Self {
        ProjectIndex {
            root_name,
            modules: modules
                .iter()
                .map(|m| (m.qualified_name.clone(), m.clone()))
                .collect(),
        }
    }

    pub fn from_root(root: &Path, modules: &[ModuleId]) -> Self {
        let root_name = root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .filter(|_| root.join("__init__.py").is_file());
        ProjectIndex::new(root_name, modules)
    }

    pub fn get(&self, qualified: &str) -> Option<&ModuleId> {
        self.modules.get(qualified)
    }

    pub fn modules(&self) -> impl Iterator<Item = &ModuleId> {
        self.modules.values()
    }

    /// Resolves an absolute dotted import path to a project module, trying
    /// the package `__init__` and a leading root-package name.
    pub fn resolve(&self, dotted: &str) -> Option<&str> {
        let direct = |name: &str| -> Option<&str> {
            if let Some(m) = self.modules.get(name) {
                return Some(m.qualified_name.as_str());
            }
            self.modules
                .get(&format!("{name}.__init__"))
                .map(|m| m.qualified_name.as_str())
        };
        if let Some(found) = direct(dotted) {
            return Some(found);
        }
        let root = self.root_name.as_deref()?;
        let rest = dotted.strip_prefix(root)?.strip_prefix('.')?;
        direct(rest)
    }

    /// Whether `dotted` is a package prefix of some project module.
    pub fn is_package_prefix(&self, dotted: &str) -> bool {
        let prefix = format!("{dotted}.");
        self.modules
            .range(prefix.clone()..)
            .next()
            .is_some_and(|(k, _)| k.starts_with(&prefix))
    }
}
