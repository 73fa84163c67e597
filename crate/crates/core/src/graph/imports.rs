//! Import extraction and resolution against the project module table.

use std::collections::BTreeSet;

use rustpython_parser::ast::{self, Stmt};

use super::discover::{ModuleId, ProjectIndex};
use crate::diag::{Code, Diagnostics};
use crate::syntax::walk_stmts;

/// What an imported dotted path refers to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Target {
    Project(String),
    External(String),
}

impl Target {
    pub fn name(&self) -> &str {
        match self {
            Target::Project(n) | Target::External(n) => n,
        }
    }
}

/// Turns `from <dots><module> import ...` into an absolute dotted path, or
/// `Err` when the dots climb above the project root.
pub fn absolute_from(importer: &ModuleId, level: u32, module: Option<&str>) -> Result<String, String> {
    let mut parts = importer.package();
    if level == 0 {
        return Ok(module.unwrap_or_default().to_string());
    }
    for _ in 1..level {
        if parts.pop().is_none() {
            return Err(format!("`{}` climbs above the project root", dots(level, module)));
        }
    }
    let mut out: Vec<&str> = parts;
    if let Some(m) = module {
        out.extend(m.split('.'));
    }
    Ok(out.join("."))
}

fn dots(level: u32, module: Option<&str>) -> String {
    format!("{}{}", ".".repeat(level as usize), module.unwrap_or_default())
}

/// Resolves `import a.b.c`: the deepest project module along the path, or
/// an external named by the top-level package.
pub fn resolve_import(index: &ProjectIndex, dotted: &str) -> Target {
    if let Some(m) = index.resolve(dotted) {
        return Target::Project(m.to_string());
    }
    let parts: Vec<&str> = dotted.split('.').collect();
    for n in (1..parts.len()).rev() {
        if let Some(m) = index.resolve(&parts[..n].join(".")) {
            return Target::Project(m.to_string());
        }
    }
    Target::External(dotted.to_string())
}

/// Resolves `from base import name`: the submodule `base.name` when it
/// exists, otherwise `base` itself.
pub fn resolve_from(index: &ProjectIndex, base: &str, name: &str) -> Option<Target> {
    let sub = if base.is_empty() {
        name.to_string()
    } else {
        format!("{base}.{name}")
    };
    if name != "*" {
        if let Some(m) = index.resolve(&sub) {
            return Some(Target::Project(m.to_string()));
        }
    }
    if base.is_empty() {
        // `from . import x` at the root: the root package has no module
        return None;
    }
    Some(resolve_import(index, base))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModuleImports {
    pub targets: BTreeSet<Target>,
    /// Project modules whose public names are star-imported.
    pub star_from: BTreeSet<String>,
}

/// Collects every import statement anywhere in the module, including
/// conditional and function-local ones.
pub fn extract_imports(
    module: &ModuleId,
    suite: &[Stmt],
    index: &ProjectIndex,
    diags: &mut Diagnostics,
) -> ModuleImports {
    let mut out = ModuleImports::default();
    walk_stmts(suite, &mut |s| match s {
        Stmt::Import(imp) => {
            for alias in &imp.names {
                out.targets.insert(resolve_import(index, alias.name.as_str()));
            }
        }
        Stmt::ImportFrom(imp) => from_stmt(module, imp, index, diags, &mut out),
        _ => {}
    });
    out
}

fn from_stmt(
    module: &ModuleId,
    imp: &ast::StmtImportFrom,
    index: &ProjectIndex,
    diags: &mut Diagnostics,
    out: &mut ModuleImports,
) {
    let level = imp.level.as_ref().map(|l| l.to_u32()).unwrap_or(0);
    let modname = imp.module.as_ref().map(|m| m.as_str());
    let base = match absolute_from(module, level, modname) {
        Ok(b) => b,
        Err(msg) => {
            diags.push(Code::ImportEscapesRoot, &module.qualified_name, msg);
            out.targets.insert(Target::External(dots(level, modname)));
            return;
        }
    };
    for alias in &imp.names {
        let name = alias.name.as_str();
        let Some(target) = resolve_from(index, &base, name) else {
            continue;
        };
        if name == "*" {
            if let Target::Project(m) = &target {
                out.star_from.insert(m.clone());
            }
        }
        out.targets.insert(target);
    }
}
