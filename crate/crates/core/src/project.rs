//! A loaded project: discovered modules, parsed sources and the dependency
//! graph over them.

use std::collections::BTreeMap;
use std::path::Path;

use crate::diag::{Code, Diagnostics};
use crate::exec::Exec;
use crate::graph::{discover_modules, extract_imports, module_for_path, DependencyGraph, ModuleId, ProjectIndex};
use crate::infer::{infer_project, InferConfig, InferenceOutcome, ModuleUnit};
use crate::source::{parse_many, SourceFile};
use crate::Result;

pub struct Project {
    pub index: ProjectIndex,
    /// Every discovered module, including ones that failed to parse.
    pub modules: Vec<ModuleId>,
    /// Parsed modules in name order.
    pub units: Vec<ModuleUnit>,
    pub graph: DependencyGraph,
    pub diagnostics: Diagnostics,
}

impl Project {
    pub fn load(root: &Path, exec: Exec) -> Result<Project> {
        let modules = discover_modules(root)?;
        let index = ProjectIndex::from_root(root, &modules);
        let mut files = Vec::new();
        for m in &modules {
            if let Some(p) = &m.path {
                files.push((m.clone(), SourceFile::read(root, p)?));
            }
        }
        Ok(Project::assemble(index, modules, files, exec))
    }

    /// Builds a project from in-memory `(relative path, text)` pairs.
    pub fn from_sources(root_name: Option<&str>, sources: &[(&str, &str)], exec: Exec) -> Project {
        let mut files: Vec<(ModuleId, SourceFile)> = sources
            .iter()
            .filter_map(|(path, text)| {
                module_for_path(Path::new(path)).map(|m| (m, SourceFile::new(*path, *text)))
            })
            .collect();
        files.sort_by(|a, b| a.0.cmp(&b.0));
        files.dedup_by(|a, b| a.0.qualified_name == b.0.qualified_name);
        let modules: Vec<ModuleId> = files.iter().map(|(m, _)| m.clone()).collect();
        let index = ProjectIndex::new(root_name.map(String::from), &modules);
        Project::assemble(index, modules, files, exec)
    }

    fn assemble(index: ProjectIndex, modules: Vec<ModuleId>, files: Vec<(ModuleId, SourceFile)>, exec: Exec) -> Project {
        let mut diagnostics = Diagnostics::new();
        let srcs: Vec<SourceFile> = files.iter().map(|(_, s)| s.clone()).collect();
        let parsed = parse_many(exec, &srcs);
        let mut units = Vec::new();
        for ((id, src), res) in files.into_iter().zip(parsed) {
            match res {
                Ok(suite) => units.push(ModuleUnit { id, src, suite }),
                Err(msg) => diagnostics.push(Code::ParseFailure, src.rel_path.clone(), msg),
            }
        }
        let mut imports = BTreeMap::new();
        for u in &units {
            let imps = extract_imports(&u.id, &u.suite, &index, &mut diagnostics);
            imports.insert(u.id.qualified_name.clone(), imps);
        }
        let graph = DependencyGraph::build(&modules, &imports);
        Project {
            index,
            modules,
            units,
            graph,
            diagnostics,
        }
    }

    pub fn infer(&self, cfg: &InferConfig) -> InferenceOutcome {
        infer_project(&self.units, &self.graph, &self.index, cfg)
    }
}
