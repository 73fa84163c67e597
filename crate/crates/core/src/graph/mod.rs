//! Module discovery, import edges, and the SCC schedule.

mod discover;
mod imports;
mod scc;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

pub use discover::{discover_modules, module_for_path, ModuleId, ModuleKind, ProjectIndex};
pub use imports::{absolute_from, extract_imports, resolve_from, resolve_import, ModuleImports, Target};
pub use scc::{schedule, tarjan_scc};

/// Modules as nodes, direct imports as edges, plus the SCC condensation.
///
/// `sccs` is stored in schedule order: every component appears after all
/// components it imports from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    /// Sorted by qualified name; externals included.
    pub nodes: Vec<ModuleId>,
    /// (importer, imported) node indices.
    pub edges: BTreeSet<(usize, usize)>,
    pub sccs: Vec<Vec<usize>>,
    pub scc_of: Vec<usize>,
}

impl DependencyGraph {
    pub fn build(modules: &[ModuleId], imports: &BTreeMap<String, ModuleImports>) -> Self {
        let mut by_name: BTreeMap<String, ModuleId> = modules
            .iter()
            .map(|m| (m.qualified_name.clone(), m.clone()))
            .collect();
        for imps in imports.values() {
            for t in &imps.targets {
                if let Target::External(name) = t {
                    by_name
                        .entry(name.clone())
                        .or_insert_with(|| ModuleId::external(name.clone()));
                }
            }
        }
        let nodes: Vec<ModuleId> = by_name.into_values().collect();
        let pos: BTreeMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, m)| (m.qualified_name.as_str(), i))
            .collect();
        let mut edges = BTreeSet::new();
        for (importer, imps) in imports {
            let Some(&from) = pos.get(importer.as_str()) else {
                continue;
            };
            for t in &imps.targets {
                if let Some(&to) = pos.get(t.name()) {
                    edges.insert((from, to));
                }
            }
        }
        let n = nodes.len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adj[a].push(b);
        }
        let comps = tarjan_scc(n, &adj);
        let mut comp_of = vec![0; n];
        for (c, members) in comps.iter().enumerate() {
            for &m in members {
                comp_of[m] = c;
            }
        }
        let order = schedule(&comps, &comp_of, &adj);
        let sccs: Vec<Vec<usize>> = order.iter().map(|&c| comps[c].clone()).collect();
        let mut scc_of = vec![0; n];
        for (i, members) in sccs.iter().enumerate() {
            for &m in members {
                scc_of[m] = i;
            }
        }
        DependencyGraph { nodes, edges, sccs, scc_of }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes
            .binary_search_by(|m| m.qualified_name.as_str().cmp(name))
            .ok()
    }

    /// A component needs fixpoint iteration if it has several members or a
    /// self-import.
    pub fn is_cyclic(&self, scc: usize) -> bool {
        let members = &self.sccs[scc];
        members.len() > 1 || self.edges.contains(&(members[0], members[0]))
    }

    pub fn member_names(&self, scc: usize) -> Vec<&str> {
        self.sccs[scc]
            .iter()
            .map(|&i| self.nodes[i].qualified_name.as_str())
            .collect()
    }

    pub fn dump(&self) -> GraphDump {
        let name = |i: usize| self.nodes[i].qualified_name.clone();
        let groups: Vec<Vec<String>> = (0..self.sccs.len())
            .map(|c| self.member_names(c).into_iter().map(String::from).collect())
            .collect();
        GraphDump {
            nodes: self
                .nodes
                .iter()
                .map(|m| NodeDump {
                    name: m.qualified_name.clone(),
                    path: m.path.as_ref().map(|p| crate::source::rel_path_string(p)),
                    kind: m.kind,
                })
                .collect(),
            edges: self.edges.iter().map(|&(a, b)| [name(a), name(b)]).collect(),
            sccs: groups.clone(),
            schedule: groups,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeDump {
    pub name: String,
    pub path: Option<String>,
    pub kind: ModuleKind,
}

/// JSON shape of `typify graph`.
#[derive(Clone, Debug, Serialize)]
pub struct GraphDump {
    pub nodes: Vec<NodeDump>,
    pub edges: Vec<[String; 2]>,
    /// Components with sorted members, listed in schedule order.
    pub sccs: Vec<Vec<String>>,
    pub schedule: Vec<Vec<String>>,
}
