//! Usage-driven inference: modules are executed abstractly in schedule
//! order, calls bind argument types into callee parameters and run the
//! callee body, and every observation is merged into its slot.

mod builtins;
mod call;
mod expr;
mod registry;
mod stmt;
mod value;

use std::collections::{BTreeMap, HashMap, HashSet};

use rustpython_parser::ast::Stmt;
use serde::Serialize;

pub use builtins::{binop, elem_type};
pub use registry::{ClassInfo, FunctionInfo, ParamKind, Registry};
pub use value::{ClassId, Frame, FuncId, Value};

use crate::diag::{Code, Diagnostics};
use crate::graph::{DependencyGraph, ModuleId, ProjectIndex};
use crate::slot::{Provenance, TypeSlot};
use crate::source::{SourceFile, Suite};
use crate::types::{merge, subsumes, widen, Caps, TypeExpr};

/// A parsed project module.
pub struct ModuleUnit {
    pub id: ModuleId,
    pub src: SourceFile,
    pub suite: Suite,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InferConfig {
    pub pass_cap: usize,
    pub caps: Caps,
    pub max_call_depth: usize,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            pass_cap: 10,
            caps: Caps::default(),
            max_call_depth: 24,
        }
    }
}

/// Map from slot id to its type: the module state compared across passes.
pub type ModuleSnapshot = BTreeMap<String, TypeExpr>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SccReport {
    pub modules: Vec<String>,
    pub cyclic: bool,
    pub passes: usize,
    pub converged: bool,
}

pub struct InferenceOutcome {
    /// Every slot, sorted by file, position and id.
    pub slots: Vec<TypeSlot>,
    pub diagnostics: Diagnostics,
    pub sccs: Vec<SccReport>,
    /// Module names in the order their bodies were analyzed.
    pub invocations: Vec<String>,
    /// Slot updates whose result did not subsume the previous value.
    pub monotonicity_violations: Vec<String>,
    /// Per module, the project classes defined or imported there.
    pub scope_types: BTreeMap<String, Vec<String>>,
}

pub struct Engine<'a> {
    pub(crate) units: &'a [ModuleUnit],
    pub(crate) project: &'a ProjectIndex,
    pub(crate) unit_of: HashMap<String, usize>,
    pub(crate) reg: Registry<'a>,
    pub(crate) cfg: InferConfig,
    /// Module environments as left by their last pass.
    pub(crate) globals: Vec<Frame>,
    pub(crate) frames: Vec<Frame>,
    pub(crate) stack: Vec<FuncId>,
    pub(crate) memo: HashMap<(FuncId, String), TypeExpr>,
    pub(crate) executed: HashSet<FuncId>,
    /// Functions reached by a real call at any point in the run.
    pub(crate) called: HashSet<FuncId>,
    pub(crate) defaults: HashMap<(FuncId, usize), TypeExpr>,
    pub(crate) bases: HashMap<ClassId, Vec<ClassId>>,
    pub(crate) diags: Diagnostics,
    pub(crate) invocations: Vec<String>,
    pub(crate) violations: Vec<String>,
}

impl<'a> Engine<'a> {
    pub fn new(units: &'a [ModuleUnit], project: &'a ProjectIndex, cfg: InferConfig) -> Self {
        let reg = Registry::build(units);
        let mut e = Engine {
            units,
            project,
            unit_of: units
                .iter()
                .enumerate()
                .map(|(i, u)| (u.id.qualified_name.clone(), i))
                .collect(),
            reg,
            cfg,
            globals: (0..units.len()).map(Frame::module).collect(),
            frames: Vec::new(),
            stack: Vec::new(),
            memo: HashMap::new(),
            executed: HashSet::new(),
            called: HashSet::new(),
            defaults: HashMap::new(),
            bases: HashMap::new(),
            diags: Diagnostics::new(),
            invocations: Vec::new(),
            violations: Vec::new(),
        };
        for u in 0..units.len() {
            e.globals[u] = e.hoist(u);
        }
        e
    }

    pub fn unit_index(&self, module: &str) -> Option<usize> {
        self.unit_of.get(module).copied()
    }

    pub fn slots(&self) -> &[TypeSlot] {
        &self.reg.slots.slots
    }

    pub fn slot(&self, id: &str) -> Option<&TypeSlot> {
        self.reg.slots.by_id.get(id).map(|&i| &self.reg.slots.slots[i])
    }

    pub fn snapshot(&self, unit: usize) -> ModuleSnapshot {
        self.reg.slots.by_unit[unit]
            .iter()
            .filter_map(|&i| {
                let s = &self.reg.slots.slots[i];
                s.current.clone().map(|t| (s.slot_id.clone(), t))
            })
            .collect()
    }

    /// Runs the whole schedule. Acyclic components get a single pass;
    /// cyclic ones repeat until every member's snapshot is stable.
    pub fn run(&mut self, graph: &DependencyGraph) -> Vec<SccReport> {
        let mut reports = Vec::new();
        for scc in 0..graph.sccs.len() {
            let members: Vec<usize> = graph
                .member_names(scc)
                .into_iter()
                .filter_map(|n| self.unit_index(n))
                .collect();
            if members.is_empty() {
                continue;
            }
            let cyclic = graph.is_cyclic(scc);
            let names: Vec<String> = members
                .iter()
                .map(|&u| self.units[u].id.qualified_name.clone())
                .collect();
            if !cyclic {
                self.infer_module(members[0]);
                reports.push(SccReport { modules: names, cyclic, passes: 1, converged: true });
                continue;
            }
            let mut prev: Option<Vec<ModuleSnapshot>> = None;
            let mut passes = 0;
            let mut converged = false;
            while passes < self.cfg.pass_cap {
                passes += 1;
                for &u in &members {
                    self.infer_module(u);
                }
                let snap: Vec<ModuleSnapshot> = members.iter().map(|&u| self.snapshot(u)).collect();
                if prev.as_ref() == Some(&snap) {
                    converged = true;
                    break;
                }
                prev = Some(snap);
            }
            if !converged {
                self.diags.push(
                    Code::PassCapHit,
                    names.join(","),
                    format!("no fixpoint after {passes} passes; keeping last state"),
                );
            }
            reports.push(SccReport { modules: names, cyclic, passes, converged });
        }
        self.final_sweep(graph);
        reports
    }

    /// Functions no call ever reached are run once more after the whole
    /// schedule, so they see attributes that later modules filled in.
    fn final_sweep(&mut self, graph: &DependencyGraph) {
        for scc in 0..graph.sccs.len() {
            for name in graph.member_names(scc) {
                if let Some(u) = self.unit_index(name) {
                    self.executed.clone_from(&self.called);
                    self.sweep(u);
                }
            }
        }
    }

    /// Re-analyzes every module once and reports whether any snapshot
    /// changed.
    pub fn extra_pass(&mut self, graph: &DependencyGraph) -> bool {
        let before: Vec<ModuleSnapshot> = (0..self.units.len()).map(|u| self.snapshot(u)).collect();
        for scc in 0..graph.sccs.len() {
            for name in graph.member_names(scc) {
                if let Some(u) = self.unit_index(name) {
                    self.infer_module(u);
                }
            }
        }
        (0..self.units.len()).any(|u| self.snapshot(u) != before[u])
    }

    /// One traversal of a module body in source order, followed by a sweep
    /// over functions that no call reached.
    pub fn infer_module(&mut self, u: usize) {
        self.invocations.push(self.units[u].id.qualified_name.clone());
        self.memo.clear();
        self.executed.clear();
        self.bases.clear();
        let frame = self.hoist(u);
        self.frames.push(frame);
        self.exec_body(&self.units[u].suite);
        let done = self.frames.pop().expect("module frame");
        self.globals[u] = done;
        self.sweep(u);
    }

    fn sweep(&mut self, u: usize) {
        let funcs = self.reg.unit_funcs[u].clone();
        for f in funcs {
            if self.executed.contains(&f) {
                continue;
            }
            let info = &self.reg.funcs[f];
            let recv = match (info.receiver, info.class.or(info.self_class)) {
                (Some(_), Some(c)) if info.is_classmethod => Some(Value::Class(c)),
                (Some(_), Some(c)) => Some(Value::Type(self.instance_type(c))),
                _ => None,
            };
            self.memo.clear();
            self.execute(f, recv, Vec::new(), Vec::new(), true);
        }
    }

    pub fn finish(mut self, sccs: Vec<SccReport>) -> InferenceOutcome {
        let mut scope_types = BTreeMap::new();
        for (u, unit) in self.units.iter().enumerate() {
            let mut names: Vec<String> = self.globals[u]
                .vars
                .values()
                .filter_map(|v| match v {
                    Value::Class(c) => Some(self.reg.classes[*c].full.clone()),
                    _ => None,
                })
                .chain(self.reg.classes.iter().filter(|c| c.unit == u).map(|c| c.full.clone()))
                .collect();
            names.sort();
            names.dedup();
            scope_types.insert(unit.id.qualified_name.clone(), names);
        }
        let mut slots = std::mem::take(&mut self.reg.slots.slots);
        for s in &mut slots {
            if s.current.is_some() {
                s.provenance = Some(Provenance::Usage);
            }
        }
        slots.sort_by(|a, b| {
            (&a.file, a.line, a.col, &a.slot_id).cmp(&(&b.file, b.line, b.col, &b.slot_id))
        });
        InferenceOutcome {
            slots,
            diagnostics: self.diags,
            sccs,
            invocations: self.invocations,
            monotonicity_violations: self.violations,
            scope_types,
        }
    }

    // ---- slots -------------------------------------------------------

    /// Merges an observation into a slot. `Any` carries no evidence.
    pub(crate) fn observe(&mut self, slot: usize, t: &TypeExpr) {
        if t.is_any() {
            return;
        }
        let caps = self.cfg.caps;
        let s = &mut self.reg.slots.slots[slot];
        let new = match &s.current {
            None => widen(t, caps),
            Some(old) => {
                let new = widen(&merge(old, t), caps);
                if !subsumes(&new, old) {
                    self.violations.push(format!("{}: {} -> {}", s.slot_id, old, new));
                }
                new
            }
        };
        s.current = Some(new);
    }

    pub(crate) fn slot_type(&self, slot: usize) -> TypeExpr {
        self.reg.slots.slots[slot].current.clone().unwrap_or_else(TypeExpr::any)
    }

    // ---- values ------------------------------------------------------

    pub(crate) fn instance_type(&self, c: ClassId) -> TypeExpr {
        TypeExpr::simple(self.reg.classes[c].full.clone())
    }

    pub(crate) fn class_of_type(&self, t: &TypeExpr) -> Option<ClassId> {
        if !t.args().is_empty() {
            return None;
        }
        self.reg.class_by_full.get(t.base()).copied()
    }

    /// The type describing a value.
    pub(crate) fn ty(&self, v: &Value) -> TypeExpr {
        match v {
            Value::Type(t) => t.clone(),
            Value::Function(f) | Value::Bound(f, _) => {
                TypeExpr::callable(None, self.slot_type(self.reg.funcs[*f].return_slot)).normalize()
            }
            Value::Class(c) => TypeExpr::raw("type", vec![self.instance_type(*c)]),
            Value::Builtin(b) if builtins::table().classes.contains(b) => {
                TypeExpr::raw("type", vec![TypeExpr::simple(b.clone())])
            }
            Value::Builtin(_) | Value::Method(..) => TypeExpr::callable(None, TypeExpr::any()).normalize(),
            Value::Module(_) | Value::External(_) | Value::Super(..) => TypeExpr::any(),
        }
    }

    pub(crate) fn widen(&self, t: &TypeExpr) -> TypeExpr {
        widen(t, self.cfg.caps)
    }

    // ---- frames and names ---------------------------------------------

    pub(crate) fn top(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("active frame")
    }

    pub(crate) fn top_ref(&self) -> &Frame {
        self.frames.last().expect("active frame")
    }

    pub(crate) fn current_unit(&self) -> usize {
        self.top_ref().unit
    }

    /// The live module frame for `u` when its body is executing.
    fn module_frame_index(&self, u: usize) -> Option<usize> {
        self.frames.iter().rposition(|f| f.is_module() && f.unit == u)
    }

    pub(crate) fn global_value(&self, u: usize, name: &str) -> Option<Value> {
        let vars = match self.module_frame_index(u) {
            Some(i) => &self.frames[i].vars,
            None => &self.globals[u].vars,
        };
        if let Some(v) = vars.get(name) {
            return Some(v.clone());
        }
        self.reg.module_vars[u]
            .get(name)
            .and_then(|&s| self.reg.slots.slots[s].current.clone())
            .map(Value::Type)
    }

    pub(crate) fn set_global(&mut self, u: usize, name: &str, v: Value) {
        match self.module_frame_index(u) {
            Some(i) => self.frames[i].vars.insert(name.to_string(), v),
            None => self.globals[u].vars.insert(name.to_string(), v),
        };
    }

    /// Resolves a name at the current program point.
    pub(crate) fn lookup(&self, name: &str) -> Value {
        let top = self.top_ref();
        if let Some(v) = top.vars.get(name) {
            return v.clone();
        }
        let unit = top.unit;
        if let Some(f) = top.func {
            let info = &self.reg.funcs[f];
            if !info.globals.contains(name) {
                if info.locals.contains(name) && !info.nonlocals.contains(name) {
                    // bound later in this scope
                    return Value::any();
                }
                if let Some(v) = self.enclosing(info.parent, name) {
                    return v;
                }
            }
        }
        if let Some(v) = self.global_value(unit, name) {
            return v;
        }
        let table = builtins::table();
        if table.functions.contains_key(name) || table.classes.contains(name) || call::SPECIAL_BUILTINS.contains(&name) {
            return Value::Builtin(name.to_string());
        }
        Value::any()
    }

    /// Closure lookup through enclosing function scopes.
    fn enclosing(&self, mut parent: Option<FuncId>, name: &str) -> Option<Value> {
        while let Some(p) = parent {
            if let Some(fr) = self.frames.iter().rev().find(|fr| fr.func == Some(p)) {
                if let Some(v) = fr.vars.get(name) {
                    return Some(v.clone());
                }
            }
            let info = &self.reg.funcs[p];
            if info.locals.contains(name) {
                if let Some(&s) = info.var_slots.get(name) {
                    return Some(Value::Type(self.slot_type(s)));
                }
                if let Some(pi) = info.params.iter().find(|pi| pi.name == name) {
                    return Some(Value::Type(self.slot_type(pi.slot)));
                }
                let nested = self.reg.unit_funcs[info.unit]
                    .iter()
                    .find(|&&g| self.reg.funcs[g].parent == Some(p) && self.reg.funcs[g].def.name == name);
                return Some(nested.map(|&g| Value::Function(g)).unwrap_or_else(Value::any));
            }
            parent = info.parent;
        }
        None
    }

    /// Slot receiving assignments to `name` in the current scope, and
    /// whether the binding lives in the module frame.
    pub(crate) fn name_slot(&self, name: &str) -> (Option<usize>, NameHome) {
        let top = self.top_ref();
        let unit = top.unit;
        if let Some(c) = top.class {
            return (self.reg.classes[c].attr_slots.get(name).copied(), NameHome::Local);
        }
        match top.func {
            None => (self.reg.module_vars[unit].get(name).copied(), NameHome::Local),
            Some(f) => {
                let info = &self.reg.funcs[f];
                if info.globals.contains(name) {
                    return (self.reg.module_vars[unit].get(name).copied(), NameHome::Global);
                }
                if info.nonlocals.contains(name) {
                    let mut p = info.parent;
                    while let Some(pf) = p {
                        let pi = &self.reg.funcs[pf];
                        if let Some(&s) = pi.var_slots.get(name) {
                            return (Some(s), NameHome::Enclosing(pf));
                        }
                        p = pi.parent;
                    }
                    return (None, NameHome::Local);
                }
                if let Some(&s) = info.var_slots.get(name) {
                    return (Some(s), NameHome::Local);
                }
                if let Some(p) = info.params.iter().find(|p| p.name == name) {
                    return (Some(p.slot), NameHome::Param);
                }
                if !info.locals.contains(name) && self.global_value(unit, name).is_some() {
                    return (self.reg.module_vars[unit].get(name).copied(), NameHome::Global);
                }
                (None, NameHome::Local)
            }
        }
    }

    /// Rebinds a name where it lives.
    pub(crate) fn rebind(&mut self, name: &str, home: NameHome, v: Value) {
        match home {
            NameHome::Local | NameHome::Param => {
                self.top().vars.insert(name.to_string(), v);
            }
            NameHome::Global => {
                let u = self.current_unit();
                self.set_global(u, name, v);
            }
            NameHome::Enclosing(p) => {
                if let Some(fr) = self.frames.iter_mut().rev().find(|fr| fr.func == Some(p)) {
                    fr.vars.insert(name.to_string(), v);
                }
            }
        }
    }

    /// Top-level definitions and imports, visible before the body runs.
    fn hoist(&mut self, u: usize) -> Frame {
        let mut frame = Frame::module(u);
        self.frames.push(frame);
        let suite: &'a [Stmt] = &self.units[u].suite;
        for s in suite {
            match s {
                Stmt::FunctionDef(_) | Stmt::AsyncFunctionDef(_) => {
                    let def = crate::syntax::FnDef::of(s).expect("function");
                    if let Some(&f) = self.reg.func_at.get(&(u, def.start)) {
                        self.top().vars.insert(def.name.to_string(), Value::Function(f));
                    }
                }
                Stmt::ClassDef(c) => {
                    let start = usize::from(c.range.start());
                    if let Some(&id) = self.reg.class_at.get(&(u, start)) {
                        self.top().vars.insert(c.name.to_string(), Value::Class(id));
                    }
                }
                Stmt::Import(_) | Stmt::ImportFrom(_) => self.exec_import(s),
                _ => {}
            }
        }
        frame = self.frames.pop().expect("hoist frame");
        frame
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum NameHome {
    Local,
    Param,
    Global,
    Enclosing(FuncId),
}

/// Runs usage-driven inference over a parsed project.
pub fn infer_project(
    units: &[ModuleUnit],
    graph: &DependencyGraph,
    project: &ProjectIndex,
    cfg: &InferConfig,
) -> InferenceOutcome {
    let mut engine = Engine::new(units, project, cfg.clone());
    let sccs = engine.run(graph);
    engine.finish(sccs)
}

#[cfg(test)]
mod tests;
