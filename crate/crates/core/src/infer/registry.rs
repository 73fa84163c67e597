//! Static prepass: every function, class and slot in the project gets an
//! id before any code is executed.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rustpython_parser::ast::{self, Expr, Ranged, Stmt};

use super::value::{ClassId, FuncId};
use super::ModuleUnit;
use crate::slot::{slot_id, SlotKind, TypeSlot, MODULE_SCOPE, RETURN_NAME};
use crate::syntax::{child_bodies, contains_yield, decorator_name, is_stub_body, join_qual, FnDef};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Positional,
    KwOnly,
    VarArgs,
    VarKw,
}

#[derive(Clone)]
pub struct ParamInfo<'a> {
    pub name: &'a str,
    pub kind: ParamKind,
    pub default: Option<&'a Expr>,
    pub annotation: Option<&'a Expr>,
    pub slot: usize,
}

/// Decorators with a modeled meaning; anything else is reported once.
const TRANSPARENT_DECORATORS: [&str; 10] = [
    "staticmethod",
    "classmethod",
    "property",
    "setter",
    "getter",
    "deleter",
    "wraps",
    "lru_cache",
    "cache",
    "abstractmethod",
];

pub struct FunctionInfo<'a> {
    pub unit: usize,
    pub qualname: String,
    pub def: FnDef<'a>,
    /// Class whose body defines this function directly.
    pub class: Option<ClassId>,
    /// Class whose instances `self` refers to, also for nested helpers.
    pub self_class: Option<ClassId>,
    pub receiver: Option<&'a str>,
    /// Enclosing function, for closure lookups.
    pub parent: Option<FuncId>,
    /// Parameters without the receiver.
    pub params: Vec<ParamInfo<'a>>,
    pub return_slot: usize,
    pub var_slots: HashMap<String, usize>,
    /// Every name bound in this scope, slot or not.
    pub locals: BTreeSet<String>,
    pub globals: BTreeSet<String>,
    pub nonlocals: BTreeSet<String>,
    pub is_generator: bool,
    pub is_stub: bool,
    pub is_static: bool,
    pub is_classmethod: bool,
    pub is_property: bool,
    pub unmodeled_decorators: Vec<String>,
}

pub struct ClassInfo<'a> {
    pub unit: usize,
    pub qualname: String,
    /// Fully qualified type name, e.g. `pkg.models.User`.
    pub full: String,
    pub def: &'a ast::StmtClassDef,
    pub methods: BTreeMap<String, FuncId>,
    pub attr_slots: BTreeMap<String, usize>,
    /// Declared fields of dataclass-like classes, in order; these become
    /// constructor parameters when no `__init__` is defined.
    pub fields: Vec<(String, usize)>,
    pub record_like: bool,
}

#[derive(Default)]
pub struct SlotTable {
    pub slots: Vec<TypeSlot>,
    pub by_id: HashMap<String, usize>,
    pub by_unit: Vec<Vec<usize>>,
}

impl SlotTable {
    fn ensure(&mut self, unit: &ModuleUnit, u: usize, qualname: &str, kind: SlotKind, name: &str, at: usize) -> usize {
        let module = &unit.id.qualified_name;
        let id = slot_id(module, qualname, kind, name);
        if let Some(&i) = self.by_id.get(&id) {
            return i;
        }
        let (line, col) = unit.src.position(at);
        let i = self.slots.len();
        self.slots.push(TypeSlot {
            slot_id: id.clone(),
            module: module.clone(),
            file: unit.src.rel_path.clone(),
            qualname: qualname.to_string(),
            kind,
            name: name.to_string(),
            line,
            col,
            current: None,
            candidates: Vec::new(),
            provenance: None,
        });
        self.by_id.insert(id, i);
        if self.by_unit.len() <= u {
            self.by_unit.resize(u + 1, Vec::new());
        }
        self.by_unit[u].push(i);
        i
    }
}

#[derive(Default)]
pub struct Registry<'a> {
    pub funcs: Vec<FunctionInfo<'a>>,
    pub classes: Vec<ClassInfo<'a>>,
    /// (unit, statement start) of a def or class statement.
    pub func_at: HashMap<(usize, usize), FuncId>,
    pub class_at: HashMap<(usize, usize), ClassId>,
    pub class_by_full: HashMap<String, ClassId>,
    pub module_vars: Vec<HashMap<String, usize>>,
    /// Functions of each unit in definition order.
    pub unit_funcs: Vec<Vec<FuncId>>,
    pub slots: SlotTable,
}

#[derive(Clone, Copy)]
enum Scope {
    Module,
    Function(FuncId),
    Class(ClassId),
}

struct Builder<'r, 'a> {
    reg: &'r mut Registry<'a>,
    unit: &'a ModuleUnit,
    u: usize,
}

impl<'a> Registry<'a> {
    pub fn build(units: &'a [ModuleUnit]) -> Self {
        let mut reg = Registry {
            module_vars: vec![HashMap::new(); units.len()],
            unit_funcs: vec![Vec::new(); units.len()],
            ..Registry::default()
        };
        reg.slots.by_unit = vec![Vec::new(); units.len()];
        for (u, unit) in units.iter().enumerate() {
            let mut b = Builder { reg: &mut reg, unit, u };
            b.body(&unit.suite, Scope::Module, None);
        }
        reg
    }

    pub fn scope_qual(&self, func: Option<FuncId>) -> &str {
        match func {
            Some(f) => &self.funcs[f].qualname,
            None => MODULE_SCOPE,
        }
    }
}

impl<'r, 'a> Builder<'r, 'a> {
    fn qual(&self, scope: Scope) -> String {
        match scope {
            Scope::Module => MODULE_SCOPE.to_string(),
            Scope::Function(f) => self.reg.funcs[f].qualname.clone(),
            Scope::Class(c) => self.reg.classes[c].qualname.clone(),
        }
    }

    fn slot(&mut self, qual: &str, kind: SlotKind, name: &str, at: usize) -> usize {
        self.reg.slots.ensure(self.unit, self.u, qual, kind, name, at)
    }

    fn module_var(&mut self, name: &str, at: usize) -> usize {
        let s = self.slot(MODULE_SCOPE, SlotKind::Variable, name, at);
        self.reg.module_vars[self.u].insert(name.to_string(), s);
        s
    }

    /// `self_ctx`: class and receiver name for `self.x` targets.
    fn body(&mut self, body: &'a [Stmt], scope: Scope, self_ctx: Option<(ClassId, &'a str)>) {
        for s in body {
            self.stmt(s, scope, self_ctx);
        }
    }

    fn stmt(&mut self, s: &'a Stmt, scope: Scope, self_ctx: Option<(ClassId, &'a str)>) {
        if let Some(f) = FnDef::of(s) {
            self.function(f, scope, self_ctx);
            return;
        }
        match s {
            Stmt::ClassDef(c) => {
                self.class(c, scope);
                return;
            }
            Stmt::Assign(a) => {
                for t in &a.targets {
                    self.target(t, scope, self_ctx);
                }
            }
            Stmt::AugAssign(a) => self.target(&a.target, scope, self_ctx),
            Stmt::AnnAssign(a) => self.target(&a.target, scope, self_ctx),
            Stmt::For(x) => self.target(&x.target, scope, self_ctx),
            Stmt::AsyncFor(x) => self.target(&x.target, scope, self_ctx),
            Stmt::With(x) => {
                for item in &x.items {
                    if let Some(v) = &item.optional_vars {
                        self.target(v, scope, self_ctx);
                    }
                }
            }
            Stmt::AsyncWith(x) => {
                for item in &x.items {
                    if let Some(v) = &item.optional_vars {
                        self.target(v, scope, self_ctx);
                    }
                }
            }
            Stmt::Import(x) => {
                for a in &x.names {
                    let bound = match &a.asname {
                        Some(n) => n.as_str(),
                        None => a.name.as_str().split('.').next().unwrap_or_default(),
                    };
                    self.local(scope, bound);
                }
            }
            Stmt::ImportFrom(x) => {
                for a in &x.names {
                    self.local(scope, a.asname.as_ref().unwrap_or(&a.name).as_str());
                }
            }
            _ => {}
        }
        for child in child_bodies(s) {
            self.body(child, scope, self_ctx);
        }
    }

    fn local(&mut self, scope: Scope, name: &str) {
        if let Scope::Function(f) = scope {
            self.reg.funcs[f].locals.insert(name.to_string());
        }
    }

    fn target(&mut self, t: &'a Expr, scope: Scope, self_ctx: Option<(ClassId, &'a str)>) {
        let at = usize::from(t.range().start());
        match t {
            Expr::Name(n) => {
                let name = n.id.as_str();
                match scope {
                    Scope::Module => {
                        self.module_var(name, at);
                    }
                    Scope::Class(c) => {
                        let qual = self.reg.classes[c].qualname.clone();
                        let s = self.slot(&qual, SlotKind::Attribute, name, at);
                        self.reg.classes[c].attr_slots.entry(name.to_string()).or_insert(s);
                    }
                    Scope::Function(f) => {
                        if self.reg.funcs[f].globals.contains(name) {
                            self.module_var(name, at);
                            return;
                        }
                        if self.reg.funcs[f].nonlocals.contains(name) {
                            return;
                        }
                        let info = &self.reg.funcs[f];
                        if info.receiver == Some(name) || info.params.iter().any(|p| p.name == name) {
                            return;
                        }
                        let qual = self.reg.funcs[f].qualname.clone();
                        let s = self.slot(&qual, SlotKind::Variable, name, at);
                        let info = &mut self.reg.funcs[f];
                        info.locals.insert(name.to_string());
                        info.var_slots.entry(name.to_string()).or_insert(s);
                    }
                }
            }
            Expr::Tuple(x) => x.elts.iter().for_each(|e| self.target(e, scope, self_ctx)),
            Expr::List(x) => x.elts.iter().for_each(|e| self.target(e, scope, self_ctx)),
            Expr::Starred(x) => self.target(&x.value, scope, self_ctx),
            Expr::Attribute(a) => {
                let Some((c, recv)) = self_ctx else { return };
                if matches!(&*a.value, Expr::Name(n) if n.id.as_str() == recv) {
                    let qual = self.reg.classes[c].qualname.clone();
                    let s = self.slot(&qual, SlotKind::Attribute, a.attr.as_str(), at);
                    self.reg.classes[c].attr_slots.entry(a.attr.to_string()).or_insert(s);
                }
            }
            _ => {}
        }
    }

    fn class(&mut self, c: &'a ast::StmtClassDef, scope: Scope) {
        let qual = join_qual(&self.qual(scope), c.name.as_str());
        let full = format!("{}.{}", self.unit.id.namespace(), qual);
        let id = self.reg.classes.len();
        let record_like = is_record_like(c);
        self.reg.classes.push(ClassInfo {
            unit: self.u,
            qualname: qual.clone(),
            full: full.clone(),
            def: c,
            methods: BTreeMap::new(),
            attr_slots: BTreeMap::new(),
            fields: Vec::new(),
            record_like,
        });
        if record_like {
            // a stripped `x: int` field survives as the bare statement `x`
            for s in &c.body {
                let target = match s {
                    Stmt::AnnAssign(a) => Some(&*a.target),
                    Stmt::Assign(a) if a.targets.len() == 1 => Some(&a.targets[0]),
                    Stmt::Expr(e) => Some(&*e.value),
                    _ => None,
                };
                if let Some(Expr::Name(n)) = target {
                    let at = usize::from(n.range.start());
                    let slot = self.slot(&qual, SlotKind::Attribute, n.id.as_str(), at);
                    let info = &mut self.reg.classes[id];
                    info.attr_slots.entry(n.id.to_string()).or_insert(slot);
                    if !info.fields.iter().any(|(f, _)| f == n.id.as_str()) {
                        info.fields.push((n.id.to_string(), slot));
                    }
                }
            }
        }
        self.reg.class_at.insert((self.u, usize::from(c.range.start())), id);
        self.reg.class_by_full.entry(full).or_insert(id);
        if let Scope::Function(_) = scope {
            self.local(scope, c.name.as_str());
        }
        self.body(&c.body, Scope::Class(id), None);
    }

    fn function(&mut self, f: FnDef<'a>, scope: Scope, self_ctx: Option<(ClassId, &'a str)>) {
        let qual = join_qual(&self.qual(scope), f.name);
        let class = match scope {
            Scope::Class(c) => Some(c),
            _ => None,
        };
        let receiver = f.receiver(class.is_some());
        let is_static = f.has_decorator("staticmethod");
        let is_classmethod = f.has_decorator("classmethod");
        let is_property = f.has_decorator("property");
        // nested helpers keep seeing the method's `self` unless they rebind it
        let self_ctx = match (class, receiver) {
            (Some(c), Some(r)) if !is_classmethod => Some((c, r)),
            (Some(_), _) => None,
            (None, _) => self_ctx.filter(|(_, r)| !f.positional().any(|p| p.def.arg.as_str() == *r)),
        };
        let id = self.reg.funcs.len();
        let ret_at = f.start;
        let return_slot = self.slot(&qual, SlotKind::Return, RETURN_NAME, ret_at);
        let unmodeled_decorators = f
            .decorators
            .iter()
            .filter_map(|d| decorator_name(d))
            .filter(|n| !TRANSPARENT_DECORATORS.contains(n))
            .map(String::from)
            .collect();
        let (mut globals, mut nonlocals) = (BTreeSet::new(), BTreeSet::new());
        collect_outer(f.body, &mut globals, &mut nonlocals);
        self.reg.funcs.push(FunctionInfo {
            unit: self.u,
            qualname: qual.clone(),
            def: f,
            class,
            self_class: self_ctx.map(|(c, _)| c),
            receiver,
            parent: match scope {
                Scope::Function(p) => Some(p),
                _ => None,
            },
            params: Vec::new(),
            return_slot,
            var_slots: HashMap::new(),
            locals: BTreeSet::new(),
            globals,
            nonlocals,
            is_generator: contains_yield(f.body),
            is_stub: is_stub_body(f.body),
            is_static,
            is_classmethod,
            is_property,
            unmodeled_decorators,
        });
        self.reg.func_at.insert((self.u, f.start), id);
        self.reg.unit_funcs[self.u].push(id);
        match scope {
            Scope::Class(c) => {
                self.reg.classes[c].methods.entry(f.name.to_string()).or_insert(id);
            }
            Scope::Function(_) => self.local(scope, f.name),
            Scope::Module => {}
        }

        let a = f.args;
        let mut params = Vec::new();
        let mut add = |b: &mut Self, p: &'a ast::Arg, kind: ParamKind, default: Option<&'a Expr>| {
            let name = p.arg.as_str();
            b.reg.funcs[id].locals.insert(name.to_string());
            if Some(name) == receiver {
                return;
            }
            let slot = b.slot(&qual, SlotKind::Argument, name, usize::from(p.range.start()));
            params.push(ParamInfo {
                name,
                kind,
                default,
                annotation: p.annotation.as_deref(),
                slot,
            });
        };
        for p in a.posonlyargs.iter().chain(&a.args) {
            add(self, &p.def, ParamKind::Positional, p.default.as_deref());
        }
        if let Some(v) = &a.vararg {
            add(self, v, ParamKind::VarArgs, None);
        }
        for p in &a.kwonlyargs {
            add(self, &p.def, ParamKind::KwOnly, p.default.as_deref());
        }
        if let Some(v) = &a.kwarg {
            add(self, v, ParamKind::VarKw, None);
        }
        self.reg.funcs[id].params = params;
        self.body(f.body, Scope::Function(id), self_ctx);
    }
}

const RECORD_DECORATORS: [&str; 3] = ["dataclass", "attrs", "define"];
const RECORD_BASES: [&str; 2] = ["NamedTuple", "BaseModel"];

fn is_record_like(c: &ast::StmtClassDef) -> bool {
    c.decorator_list
        .iter()
        .any(|d| decorator_name(d).is_some_and(|n| RECORD_DECORATORS.contains(&n)))
        || c.bases
            .iter()
            .any(|b| decorator_name(b).is_some_and(|n| RECORD_BASES.contains(&n)))
}

/// Names declared `global` and `nonlocal` directly in this function body.
fn collect_outer(body: &[Stmt], globals: &mut BTreeSet<String>, nonlocals: &mut BTreeSet<String>) {
    for s in body {
        match s {
            Stmt::Global(g) => globals.extend(g.names.iter().map(|n| n.to_string())),
            Stmt::Nonlocal(g) => nonlocals.extend(g.names.iter().map(|n| n.to_string())),
            Stmt::FunctionDef(_) | Stmt::AsyncFunctionDef(_) | Stmt::ClassDef(_) => {}
            _ => {
                for child in child_bodies(s) {
                    collect_outer(child, globals, nonlocals);
                }
            }
        }
    }
}
