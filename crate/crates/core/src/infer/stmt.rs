//! Statement execution: assignments, control flow merging, definitions
//! and imports.

use rustpython_parser::ast::{self, Expr, Stmt};

use super::builtins::elem_type;
use super::value::{join_frames, Frame, Value};
use super::{Engine, NameHome};
use crate::diag::Code;
use crate::graph::{absolute_from, resolve_from, Target};
use crate::syntax::{annotation_type, FnDef};
use crate::types::{base, TypeExpr};

impl<'a> Engine<'a> {
    pub(crate) fn exec_body(&mut self, body: &'a [Stmt]) {
        for s in body {
            if !self.top_ref().alive {
                break;
            }
            self.exec_stmt(s);
        }
    }

    fn fork(&self) -> Frame {
        self.top_ref().clone()
    }

    fn swap_top(&mut self, f: Frame) -> Frame {
        std::mem::replace(self.top(), f)
    }

    fn join(&self, a: Frame, b: Frame) -> Frame {
        join_frames(a, b, &|v| self.ty(v))
    }

    /// Runs `body` from the current state and joins the result with the
    /// state before it, as for a branch that may not be taken.
    fn optional_body(&mut self, body: &'a [Stmt]) {
        let pre = self.fork();
        self.exec_body(body);
        let post = self.swap_top(pre.clone());
        let joined = self.join(pre, post);
        *self.top() = joined;
    }

    pub(crate) fn exec_stmt(&mut self, s: &'a Stmt) {
        if let Some(def) = FnDef::of(s) {
            self.exec_def(def);
            return;
        }
        match s {
            Stmt::ClassDef(c) => self.exec_class(c),
            Stmt::Return(r) => {
                let t = match &r.value {
                    Some(v) => {
                        let v = self.eval(v);
                        self.ty(&v)
                    }
                    None => TypeExpr::none(),
                };
                let top = self.top();
                if !top.is_module() {
                    top.add_return(t);
                }
                top.alive = false;
            }
            Stmt::Delete(d) => {
                for t in &d.targets {
                    match t {
                        Expr::Name(n) => {
                            self.top().vars.remove(n.id.as_str());
                        }
                        other => {
                            self.eval(other);
                        }
                    }
                }
            }
            Stmt::Assign(a) => {
                let v = self.eval(&a.value);
                for t in &a.targets {
                    self.assign(t, v.clone());
                }
            }
            Stmt::AugAssign(a) => {
                let cur = self.eval(&a.target);
                let rhs = self.eval(&a.value);
                let res = self.binop_values(a.op, &cur, &rhs);
                let res = match (&cur, &res) {
                    (Value::Type(c), Value::Type(r)) if !c.is_any() && r.is_any() => cur.clone(),
                    _ => res,
                };
                self.assign(&a.target, res);
            }
            Stmt::AnnAssign(a) => {
                if let Some(t) = self.annotation(&a.annotation) {
                    self.observe_target(&a.target, &t);
                }
                if let Some(v) = &a.value {
                    let v = self.eval(v);
                    self.assign(&a.target, v);
                }
            }
            Stmt::For(f) => self.exec_for(&f.target, &f.iter, &f.body, &f.orelse),
            Stmt::AsyncFor(f) => self.exec_for(&f.target, &f.iter, &f.body, &f.orelse),
            Stmt::While(w) => {
                self.eval(&w.test);
                self.optional_body(&w.body);
                self.exec_body(&w.orelse);
            }
            Stmt::If(i) => {
                self.eval(&i.test);
                let pre = self.fork();
                self.exec_body(&i.body);
                let then = self.swap_top(pre);
                self.exec_body(&i.orelse);
                let other = self.swap_top(Frame::default());
                let joined = self.join(then, other);
                *self.top() = joined;
            }
            Stmt::With(w) => {
                self.exec_with_items(&w.items);
                self.exec_body(&w.body);
            }
            Stmt::AsyncWith(w) => {
                self.exec_with_items(&w.items);
                self.exec_body(&w.body);
            }
            Stmt::Match(m) => {
                self.eval(&m.subject);
                let pre = self.fork();
                let mut acc = pre.clone();
                for case in &m.cases {
                    self.swap_top(pre.clone());
                    if let Some(g) = &case.guard {
                        self.eval(g);
                    }
                    self.exec_body(&case.body);
                    let out = self.swap_top(Frame::default());
                    acc = self.join(acc, out);
                }
                *self.top() = acc;
            }
            Stmt::Raise(r) => {
                if let Some(e) = &r.exc {
                    self.eval(e);
                }
                self.top().alive = false;
            }
            Stmt::Try(t) => self.exec_try(&t.body, &t.handlers, &t.orelse, &t.finalbody),
            Stmt::TryStar(t) => self.exec_try(&t.body, &t.handlers, &t.orelse, &t.finalbody),
            Stmt::Assert(a) => {
                self.eval(&a.test);
            }
            Stmt::Import(_) | Stmt::ImportFrom(_) => self.exec_import(s),
            Stmt::Expr(e) => {
                self.eval(&e.value);
            }
            _ => {}
        }
    }

    fn exec_for(&mut self, target: &'a Expr, iter: &'a Expr, body: &'a [Stmt], orelse: &'a [Stmt]) {
        let it = self.eval(iter);
        let elem = self.iter_elem(&it);
        let pre = self.fork();
        self.assign(target, Value::Type(elem));
        self.exec_body(body);
        let post = self.swap_top(Frame::default());
        // the loop body may run zero times
        let joined = self.join(pre, post);
        *self.top() = joined;
        self.exec_body(orelse);
    }

    fn exec_with_items(&mut self, items: &'a [ast::WithItem]) {
        for item in items {
            let v = self.eval(&item.context_expr);
            if let Some(target) = &item.optional_vars {
                let entered = self.enter_value(v);
                self.assign(target, entered);
            }
        }
    }

    fn enter_value(&mut self, v: Value) -> Value {
        if let Value::Type(t) = &v {
            if let Some(c) = self.class_of_type(t) {
                if let Some(super::call::Member::Method(f)) = self.class_member(c, "__enter__") {
                    let r = self.execute(f, Some(v.clone()), Vec::new(), Vec::new(), false);
                    return Value::Type(r);
                }
            }
        }
        v
    }

    fn exec_try(
        &mut self,
        body: &'a [Stmt],
        handlers: &'a [ast::ExceptHandler],
        orelse: &'a [Stmt],
        finalbody: &'a [Stmt],
    ) {
        let pre = self.fork();
        self.exec_body(body);
        let after_body = self.fork();
        self.exec_body(orelse);
        let mut acc = self.swap_top(Frame::default());
        // a handler may start anywhere in the body
        let mut entry = self.join(pre, after_body);
        entry.alive = true;
        for h in handlers {
            let ast::ExceptHandler::ExceptHandler(h) = h;
            self.swap_top(entry.clone());
            if let Some(t) = &h.type_ {
                self.eval(t);
            }
            if let Some(name) = &h.name {
                let exc = match &h.type_ {
                    Some(t) => {
                        let v = self.eval(t);
                        self.construct_type(&v)
                    }
                    None => TypeExpr::simple("BaseException"),
                };
                self.top().vars.insert(name.to_string(), Value::Type(exc));
            }
            self.exec_body(&h.body);
            let out = self.swap_top(Frame::default());
            acc = self.join(acc, out);
        }
        *self.top() = acc;
        if !finalbody.is_empty() {
            let alive = self.top_ref().alive;
            self.top().alive = true;
            self.exec_body(finalbody);
            let top = self.top();
            top.alive = top.alive && alive;
        }
    }

    /// Instance type for an exception class expression.
    fn construct_type(&self, v: &Value) -> TypeExpr {
        match v {
            Value::Class(c) => self.instance_type(*c),
            Value::Builtin(b) => TypeExpr::simple(b.clone()),
            _ => TypeExpr::any(),
        }
    }

    fn exec_def(&mut self, def: FnDef<'a>) {
        let u = self.current_unit();
        let Some(&f) = self.reg.func_at.get(&(u, def.start)) else {
            return;
        };
        for d in def.decorators {
            self.eval(d);
        }
        let info = &self.reg.funcs[f];
        if !info.unmodeled_decorators.is_empty() {
            let msg = format!(
                "decorator `{}` on `{}` is not modeled; analyzing the undecorated body",
                info.unmodeled_decorators.join("`, `"),
                info.qualname
            );
            let loc = format!("{}:{}", self.units[u].src.rel_path, self.units[u].src.position(def.start).0);
            self.diags.push(Code::DecoratorNotModeled, loc, msg);
        }
        let params: Vec<(usize, Option<&'a Expr>, Option<&'a Expr>, usize)> = info
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.default, p.annotation, p.slot))
            .collect();
        for (i, default, ann, slot) in params {
            if let Some(d) = default {
                let v = self.eval(d);
                let t = self.ty(&v);
                self.observe(slot, &t);
                self.defaults.insert((f, i), t);
            }
            if let Some(a) = ann {
                if let Some(t) = self.annotation(a) {
                    self.observe(slot, &t);
                }
            }
        }
        if let Some(r) = def.returns {
            if let Some(t) = self.annotation(r) {
                let slot = self.reg.funcs[f].return_slot;
                self.observe(slot, &t);
            }
        }
        self.bind_def(def.name, Value::Function(f));
    }

    fn bind_def(&mut self, name: &str, v: Value) {
        let (_, home) = self.name_slot(name);
        self.rebind(name, home, v);
    }

    fn exec_class(&mut self, c: &'a ast::StmtClassDef) {
        let u = self.current_unit();
        let start = usize::from(c.range.start());
        let Some(&id) = self.reg.class_at.get(&(u, start)) else {
            return;
        };
        let mut bases = Vec::new();
        for b in &c.bases {
            if let Value::Class(bc) = self.eval(b) {
                bases.push(bc);
            }
        }
        for d in &c.decorator_list {
            self.eval(d);
        }
        self.bases.insert(id, bases);
        let frame = Frame {
            unit: u,
            func: None,
            class: Some(id),
            alive: true,
            ..Frame::default()
        };
        self.frames.push(frame);
        self.exec_body(&c.body);
        self.frames.pop();
        self.bind_def(c.name.as_str(), Value::Class(id));
    }

    /// Parses an annotation already present in the source, resolving class
    /// names defined or imported in this module.
    pub(crate) fn annotation(&self, ann: &Expr) -> Option<TypeExpr> {
        let u = self.current_unit();
        let t = annotation_type(&self.units[u].src, ann).ok()?;
        Some(t.substitute(&|b: &str| {
            if b.contains('.') || b.starts_with('$') {
                return None;
            }
            match self.global_value(u, b) {
                Some(Value::Class(c)) => Some(self.instance_type(c)),
                _ => None,
            }
        }))
    }

    /// Annotation evidence for an assignment target.
    fn observe_target(&mut self, target: &'a Expr, t: &TypeExpr) {
        match target {
            Expr::Name(n) => {
                if let (Some(slot), _) = self.name_slot(n.id.as_str()) {
                    self.observe(slot, t);
                }
            }
            Expr::Attribute(a) => {
                let obj = self.eval(&a.value);
                if let Some(slot) = self.attr_slot_of(&obj, a.attr.as_str()) {
                    self.observe(slot, t);
                }
            }
            _ => {}
        }
    }

    /// Binds `v` to an assignment target and records the evidence.
    pub(crate) fn assign(&mut self, target: &'a Expr, v: Value) {
        match target {
            Expr::Name(n) => {
                let name = n.id.as_str();
                let (slot, home) = self.name_slot(name);
                let v = match v {
                    Value::Type(t) => Value::Type(self.widen(&t)),
                    other => other,
                };
                if let Some(slot) = slot {
                    if home != NameHome::Param {
                        let t = self.ty(&v);
                        self.observe(slot, &t);
                    }
                }
                self.rebind(name, home, v);
            }
            Expr::Tuple(_) | Expr::List(_) => {
                let elts = match target {
                    Expr::Tuple(t) => &t.elts,
                    Expr::List(l) => &l.elts,
                    _ => unreachable!(),
                };
                let t = self.ty(&v);
                let fixed = t.is(base::TUPLE)
                    && !t.args().last().is_some_and(|a| a.is(base::ELLIPSIS))
                    && t.args().len() == elts.len()
                    && !elts.iter().any(|e| matches!(e, Expr::Starred(_)));
                let elem = elem_type(&t);
                for (i, e) in elts.iter().enumerate() {
                    match e {
                        Expr::Starred(s) => {
                            self.assign(&s.value, Value::Type(TypeExpr::list(elem.clone()).normalize()))
                        }
                        _ => {
                            let part = if fixed { t.args()[i].clone() } else { elem.clone() };
                            self.assign(e, Value::Type(part));
                        }
                    }
                }
            }
            Expr::Starred(s) => {
                let t = self.ty(&v);
                self.assign(&s.value, Value::Type(TypeExpr::list(elem_type(&t)).normalize()));
            }
            Expr::Attribute(a) => {
                let obj = self.eval(&a.value);
                if let Some(slot) = self.attr_slot_of(&obj, a.attr.as_str()) {
                    let t = self.ty(&v);
                    self.observe(slot, &t);
                }
            }
            Expr::Subscript(s) => {
                let key = self.eval(&s.slice);
                let key = self.ty(&key);
                let value = self.ty(&v);
                let container = self.eval(&s.value);
                let container = self.ty(&container);
                if let Some(c) = self.class_of_type(&container) {
                    if let Some(super::call::Member::Method(f)) = self.class_member(c, "__setitem__") {
                        self.execute(
                            f,
                            Some(Value::Type(container)),
                            vec![Value::Type(key), Value::Type(value)],
                            Vec::new(),
                            false,
                        );
                    }
                    return;
                }
                let evidence = if container.is(base::LIST) {
                    TypeExpr::list(value)
                } else if container.is_any() || container.is(base::DICT) {
                    TypeExpr::dict(key, value)
                } else {
                    return;
                };
                if let Some(place) = self.place_of(&s.value) {
                    self.update_place(&place, &evidence.normalize());
                }
            }
            _ => {}
        }
    }

    // ---- imports -------------------------------------------------------

    pub(crate) fn module_value(&self, dotted: &str) -> Value {
        if let Some(m) = self.project.resolve(dotted) {
            return Value::Module(m.to_string());
        }
        if self.project.is_package_prefix(dotted) {
            return Value::Module(dotted.to_string());
        }
        Value::External(dotted.to_string())
    }

    pub(crate) fn module_member(&self, module: &str, name: &str) -> Value {
        let ns = module.strip_suffix(".__init__").unwrap_or(module);
        let sub = format!("{ns}.{name}");
        if let Some(m) = self.project.resolve(&sub) {
            if self.project.get(m).is_some_and(|id| id.qualified_name != module) {
                return Value::Module(m.to_string());
            }
        }
        if self.project.is_package_prefix(&sub) {
            return Value::Module(sub);
        }
        match self.unit_index(module) {
            Some(u) => self.global_value(u, name).unwrap_or_else(Value::any),
            None => Value::any(),
        }
    }

    pub(crate) fn exec_import(&mut self, s: &'a Stmt) {
        let u = self.current_unit();
        match s {
            Stmt::Import(imp) => {
                for alias in &imp.names {
                    let full = alias.name.as_str();
                    let (name, v) = match &alias.asname {
                        Some(a) => (a.to_string(), self.module_value(full)),
                        None => {
                            let head = full.split('.').next().unwrap_or(full).to_string();
                            let v = self.module_value(&head);
                            (head, v)
                        }
                    };
                    self.bind_def(&name, v);
                }
            }
            Stmt::ImportFrom(imp) => {
                let level = imp.level.as_ref().map(|l| l.to_u32()).unwrap_or(0);
                let modname = imp.module.as_ref().map(|m| m.as_str());
                let id = self.units[u].id.clone();
                let base_path = match absolute_from(&id, level, modname) {
                    Ok(b) => b,
                    Err(_) => {
                        for alias in &imp.names {
                            let bound = alias.asname.as_ref().unwrap_or(&alias.name).to_string();
                            self.bind_def(&bound, Value::any());
                        }
                        return;
                    }
                };
                for alias in &imp.names {
                    let name = alias.name.as_str();
                    if name == "*" {
                        if let Some(Target::Project(m)) = resolve_from(self.project, &base_path, "*") {
                            if let Some(src) = self.unit_index(&m) {
                                let vars = match self.frames.iter().rposition(|f| f.is_module() && f.unit == src) {
                                    Some(i) => self.frames[i].vars.clone(),
                                    None => self.globals[src].vars.clone(),
                                };
                                for (k, v) in vars {
                                    if !k.starts_with('_') {
                                        self.bind_def(&k, v);
                                    }
                                }
                            }
                        }
                        continue;
                    }
                    let bound = alias.asname.as_ref().unwrap_or(&alias.name).to_string();
                    let v = match resolve_from(self.project, &base_path, name) {
                        Some(Target::Project(m)) => {
                            let ns = m.strip_suffix(".__init__").unwrap_or(&m);
                            let is_sub = ns.rsplit('.').next() == Some(name)
                                && (base_path.is_empty() || ns != base_path.as_str());
                            if is_sub && ns.ends_with(name) && ns != base_path {
                                Value::Module(m.clone())
                            } else {
                                self.module_member(&m, name)
                            }
                        }
                        Some(Target::External(p)) => {
                            if self.project.is_package_prefix(&base_path) {
                                Value::any()
                            } else {
                                Value::External(format!("{p}.{name}"))
                            }
                        }
                        None => Value::any(),
                    };
                    self.bind_def(&bound, v);
                }
            }
            _ => {}
        }
    }

    /// Element type produced by iterating over `v`.
    pub(crate) fn iter_elem(&mut self, v: &Value) -> TypeExpr {
        let t = self.ty(v);
        if let Some(c) = self.class_of_type(&t) {
            if let Some(super::call::Member::Method(f)) = self.class_member(c, "__iter__") {
                let it = self.execute(f, Some(v.clone()), Vec::new(), Vec::new(), false);
                return elem_type(&it);
            }
            return TypeExpr::any();
        }
        elem_type(&t)
    }
}
