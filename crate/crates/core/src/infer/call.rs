//! Call dispatch: project functions are executed with the argument values
//! bound to their parameters; builtins, builtin methods and known externals
//! come from the signature table.

use std::collections::BTreeMap;

use rustpython_parser::ast::{self, Expr};

use super::builtins::{elem_type, table, ExternalEntry};
use super::registry::ParamKind;
use super::value::{ClassId, Frame, FuncId, Value};
use super::Engine;
use crate::diag::Code;
use crate::types::{base, merge, TypeExpr};

/// Builtins with call rules beyond a fixed result template.
pub(crate) const SPECIAL_BUILTINS: [&str; 12] = [
    "dict", "zip", "enumerate", "map", "filter", "reversed", "max", "min", "sum", "next", "super", "type",
];

/// Container methods that feed evidence back into their receiver.
const MUTATORS: [&str; 6] = ["append", "insert", "extend", "add", "update", "setdefault"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Member {
    Method(FuncId),
    Attr(usize),
}

impl<'a> Engine<'a> {
    // ---- classes -------------------------------------------------------

    /// Direct project base classes of `c`.
    pub(crate) fn class_bases(&self, c: ClassId) -> Vec<ClassId> {
        if let Some(b) = self.bases.get(&c) {
            return b.clone();
        }
        let info = &self.reg.classes[c];
        info.def
            .bases
            .iter()
            .filter_map(|b| match self.resolve_static(info.unit, b) {
                Some(Value::Class(k)) if k != c => Some(k),
                _ => None,
            })
            .collect()
    }

    /// Resolves a dotted name against module globals without executing code.
    fn resolve_static(&self, u: usize, e: &Expr) -> Option<Value> {
        match e {
            Expr::Name(n) => self.global_value(u, n.id.as_str()),
            Expr::Attribute(a) => match self.resolve_static(u, &a.value)? {
                Value::Module(m) => Some(self.module_member(&m, a.attr.as_str())),
                Value::Class(k) => self.reg.classes[k]
                    .def
                    .body
                    .iter()
                    .find_map(|s| match s {
                        ast::Stmt::ClassDef(inner) if inner.name.as_str() == a.attr.as_str() => self
                            .reg
                            .class_at
                            .get(&(self.reg.classes[k].unit, usize::from(inner.range.start())))
                            .map(|&id| Value::Class(id)),
                        _ => None,
                    }),
                _ => None,
            },
            Expr::Subscript(s) => self.resolve_static(u, &s.value),
            _ => None,
        }
    }

    /// Depth-first, left-to-right linearization without duplicates.
    pub(crate) fn mro(&self, c: ClassId) -> Vec<ClassId> {
        let mut out = Vec::new();
        let mut todo = vec![c];
        while let Some(k) = todo.pop() {
            if out.contains(&k) {
                continue;
            }
            out.push(k);
            let mut bases = self.class_bases(k);
            bases.reverse();
            todo.extend(bases);
        }
        out
    }

    pub(crate) fn class_member(&self, c: ClassId, name: &str) -> Option<Member> {
        for k in self.mro(c) {
            let info = &self.reg.classes[k];
            if let Some(&f) = info.methods.get(name) {
                return Some(Member::Method(f));
            }
            if let Some(&s) = info.attr_slots.get(name) {
                return Some(Member::Attr(s));
            }
        }
        None
    }

    fn construct(&mut self, c: ClassId, args: Vec<Value>, kwargs: Vec<(String, Value)>) -> Value {
        let inst = Value::Type(self.instance_type(c));
        match self.class_member(c, "__init__") {
            Some(Member::Method(f)) => {
                self.execute(f, Some(inst.clone()), args, kwargs, false);
            }
            _ => {
                let Some(k) = self.mro(c).into_iter().find(|&k| self.reg.classes[k].record_like) else {
                    return inst;
                };
                let fields = self.reg.classes[k].fields.clone();
                for (i, v) in args.iter().enumerate() {
                    if let Some((_, s)) = fields.get(i) {
                        let t = self.ty(v);
                        self.observe(*s, &t);
                    }
                }
                for (name, v) in &kwargs {
                    if let Some((_, s)) = fields.iter().find(|(f, _)| f == name) {
                        let t = self.ty(v);
                        self.observe(*s, &t);
                    }
                }
            }
        }
        inst
    }

    // ---- call sites ----------------------------------------------------

    fn location(&self, offset: usize) -> String {
        let u = self.current_unit();
        let (line, _) = self.units[u].src.position(offset);
        format!("{}:{}", self.units[u].src.rel_path, line)
    }

    pub(crate) fn eval_call(&mut self, c: &'a ast::ExprCall) -> Value {
        let func = self.eval(&c.func);
        let mut args = Vec::new();
        let mut starred = false;
        for a in &c.args {
            match a {
                Expr::Starred(s) => {
                    self.eval(&s.value);
                    starred = true;
                }
                _ => {
                    let v = self.eval(a);
                    if !starred {
                        args.push(v);
                    }
                }
            }
        }
        let mut kwargs = Vec::new();
        for k in &c.keywords {
            let v = self.eval(&k.value);
            if let Some(name) = &k.arg {
                kwargs.push((name.to_string(), v));
            }
        }
        if let (Expr::Attribute(a), Value::Method(..) | Value::Type(_)) = (&*c.func, &func) {
            let name = a.attr.as_str();
            if MUTATORS.contains(&name) {
                self.mutation_evidence(&a.value, &func, name, &args, &kwargs);
            }
        }
        let loc = usize::from(c.range.start());
        self.call_value(&func, args, kwargs, starred, loc)
    }

    /// Records what a container mutation says about its receiver.
    fn mutation_evidence(
        &mut self,
        recv_expr: &'a Expr,
        func: &Value,
        name: &str,
        args: &[Value],
        kwargs: &[(String, Value)],
    ) {
        let recv_t = match func {
            Value::Method(t, _) => t.clone(),
            Value::Type(t) if t.is_any() => t.clone(),
            _ => return,
        };
        let arg = |i: usize| args.get(i).map(|v| self.ty(v));
        let known = |b: &str| recv_t.members().iter().any(|m| m.is(b));
        let evidence = match name {
            "append" if recv_t.is_any() || known(base::LIST) => arg(0).map(TypeExpr::list),
            "insert" if recv_t.is_any() || known(base::LIST) => arg(1).map(TypeExpr::list),
            "extend" if recv_t.is_any() || known(base::LIST) => arg(0).map(|t| TypeExpr::list(elem_type(&t))),
            "add" if known(base::SET) => arg(0).map(TypeExpr::set),
            "update" if known(base::SET) => arg(0).map(|t| TypeExpr::set(elem_type(&t))),
            "update" if known(base::DICT) => match arg(0) {
                Some(t) if t.is(base::DICT) => Some(t),
                Some(_) => None,
                None if !kwargs.is_empty() => {
                    let v = kwargs.iter().map(|(_, v)| self.ty(v)).reduce(|a, b| merge(&a, &b));
                    v.map(|v| TypeExpr::dict(TypeExpr::str(), v))
                }
                None => None,
            },
            "setdefault" if recv_t.is_any() || known(base::DICT) => {
                arg(0).map(|k| TypeExpr::dict(k, arg(1).unwrap_or_else(TypeExpr::none)))
            }
            _ => None,
        };
        let Some(evidence) = evidence else { return };
        if let Some(place) = self.place_of(recv_expr) {
            self.update_place(&place, &evidence.normalize());
        }
    }

    pub(crate) fn call_value(
        &mut self,
        func: &Value,
        args: Vec<Value>,
        kwargs: Vec<(String, Value)>,
        starred: bool,
        loc: usize,
    ) -> Value {
        match func {
            Value::Function(f) => {
                self.check_arity(*f, args.len(), false, &kwargs, starred, loc);
                Value::Type(self.execute(*f, None, args, kwargs, false))
            }
            Value::Bound(f, recv) => {
                self.check_arity(*f, args.len(), true, &kwargs, starred, loc);
                Value::Type(self.execute(*f, Some((**recv).clone()), args, kwargs, false))
            }
            Value::Class(c) => self.construct(*c, args, kwargs),
            Value::Builtin(name) => self.call_builtin(name, args, kwargs),
            Value::Method(t, name) => self.call_method(t, name, args, kwargs),
            Value::External(path) => self.call_external(path, args, kwargs, loc),
            Value::Type(t) => {
                if let Some(c) = self.class_of_type(t) {
                    if let Some(Member::Method(f)) = self.class_member(c, "__call__") {
                        return Value::Type(self.execute(f, Some(func.clone()), args, kwargs, false));
                    }
                    return Value::any();
                }
                if t.is(base::CALLABLE) {
                    return Value::Type(t.arg(1).cloned().unwrap_or_else(TypeExpr::any));
                }
                if t.is(base::TYPE) {
                    if let Some(c) = t.arg(0).and_then(|a| self.class_of_type(a)) {
                        return self.construct(c, args, kwargs);
                    }
                    return Value::Type(t.arg(0).cloned().unwrap_or_else(TypeExpr::any));
                }
                Value::any()
            }
            Value::Module(_) | Value::Super(..) => Value::any(),
        }
    }

    fn check_arity(
        &mut self,
        f: FuncId,
        npos: usize,
        bound: bool,
        kwargs: &[(String, Value)],
        starred: bool,
        loc: usize,
    ) {
        let info = &self.reg.funcs[f];
        let mut positional = info.params.iter().filter(|p| p.kind == ParamKind::Positional).count();
        // an unbound call passes the receiver explicitly
        if !bound && info.receiver.is_some() && !info.is_static {
            positional += 1;
        }
        let varargs = info.params.iter().any(|p| p.kind == ParamKind::VarArgs);
        let varkw = info.params.iter().any(|p| p.kind == ParamKind::VarKw);
        let too_many = !varargs && npos > positional;
        let unknown_kw = !varkw
            && kwargs
                .iter()
                .any(|(k, _)| !info.params.iter().any(|p| p.name == k && p.kind != ParamKind::VarArgs));
        let required = info
            .params
            .iter()
            .filter(|p| matches!(p.kind, ParamKind::Positional | ParamKind::KwOnly) && p.default.is_none())
            .filter(|p| !kwargs.iter().any(|(k, _)| k == p.name))
            .count();
        let provided_pos = if !bound && info.receiver.is_some() && !info.is_static {
            npos.saturating_sub(1)
        } else {
            npos
        };
        let missing = !starred && !varkw && provided_pos < required.min(positional);
        if too_many || unknown_kw || missing {
            let msg = format!("call to `{}` does not match its parameters", info.qualname);
            let at = self.location(loc);
            self.diags.push(Code::ArityMismatch, at, msg);
        }
    }

    // ---- project functions -----------------------------------------------

    /// Runs a function body with the given bindings and returns the result
    /// type. Parameter evidence is recorded before the memo check so every
    /// call site contributes.
    pub(crate) fn execute(
        &mut self,
        f: FuncId,
        recv: Option<Value>,
        args: Vec<Value>,
        kwargs: Vec<(String, Value)>,
        from_sweep: bool,
    ) -> TypeExpr {
        self.executed.insert(f);
        if !from_sweep {
            self.called.insert(f);
        }
        let info = &self.reg.funcs[f];
        let unit = info.unit;
        let body = info.def.body;
        let params = info.params.clone();
        let return_slot = info.return_slot;
        let (is_stub, is_generator) = (info.is_stub, info.is_generator);
        let receiver = info.receiver.filter(|_| !info.is_static);

        let mut frame = Frame {
            unit,
            func: Some(f),
            class: None,
            alive: true,
            ..Frame::default()
        };
        let mut args = args.into_iter();
        if let Some(r) = receiver {
            let rv = match recv {
                Some(v) => v,
                None => args.next().unwrap_or_else(Value::any),
            };
            frame.vars.insert(r.to_string(), rv);
        }
        let mut kwargs: BTreeMap<String, Value> = kwargs.into_iter().collect();
        let mut bound: Vec<(usize, Option<Value>)> = Vec::new();
        for (i, p) in params.iter().enumerate() {
            let v = match p.kind {
                ParamKind::Positional => args.next().or_else(|| kwargs.remove(p.name)),
                ParamKind::KwOnly => kwargs.remove(p.name),
                ParamKind::VarArgs => {
                    let rest: Vec<TypeExpr> = args.by_ref().map(|v| self.ty(&v)).collect();
                    rest.into_iter().reduce(|a, b| merge(&a, &b)).map(Value::Type)
                }
                ParamKind::VarKw => {
                    let rest: Vec<TypeExpr> = std::mem::take(&mut kwargs).values().map(|v| self.ty(v)).collect();
                    rest.into_iter().reduce(|a, b| merge(&a, &b)).map(Value::Type)
                }
            };
            bound.push((i, v));
        }
        let mut key = format!("{f}");
        for (i, v) in bound {
            let p = &params[i];
            let local = match &v {
                Some(v) if !from_sweep => {
                    let t = self.ty(v);
                    self.observe(p.slot, &t);
                    v.clone()
                }
                _ => match self.defaults.get(&(f, i)) {
                    Some(d) if !from_sweep => Value::Type(d.clone()),
                    _ => Value::Type(self.slot_type(p.slot)),
                },
            };
            // the slot holds the element type; the local is the container
            let local = match p.kind {
                ParamKind::VarArgs => Value::Type(TypeExpr::tuple_of(self.ty(&local)).normalize()),
                ParamKind::VarKw => Value::Type(TypeExpr::dict(TypeExpr::str(), self.ty(&local)).normalize()),
                _ => local,
            };
            key.push('|');
            key.push_str(&local.key());
            frame.vars.insert(p.name.to_string(), local);
        }
        if let Some(r) = receiver {
            key.push_str("|self=");
            key.push_str(&frame.vars[r].key());
        }
        if let Some(t) = self.memo.get(&(f, key.clone())) {
            return t.clone();
        }
        if self.stack.contains(&f) || self.stack.len() >= self.cfg.max_call_depth {
            return self.slot_type(return_slot);
        }

        self.stack.push(f);
        self.frames.push(frame);
        self.exec_body(body);
        let done = self.frames.pop().expect("function frame");
        self.stack.pop();

        let result = if is_stub {
            TypeExpr::any()
        } else if is_generator {
            TypeExpr::generator(done.yields.unwrap_or_else(TypeExpr::any)).normalize()
        } else {
            match (done.returns, done.alive) {
                (Some(r), true) => merge(&r, &TypeExpr::none()),
                (Some(r), false) => r,
                (None, true) => TypeExpr::none(),
                (None, false) => TypeExpr::any(),
            }
        };
        let result = self.widen(&result);
        self.observe(return_slot, &result);
        self.memo.insert((f, key), result.clone());
        result
    }

    // ---- builtins --------------------------------------------------------

    fn call_builtin(&mut self, name: &str, args: Vec<Value>, kwargs: Vec<(String, Value)>) -> Value {
        let tys: Vec<TypeExpr> = args.iter().map(|v| self.ty(v)).collect();
        let elem = |i: usize| tys.get(i).map(elem_type).unwrap_or_else(TypeExpr::any);
        let iter_of = |t: TypeExpr| TypeExpr::raw("Iterator", vec![t]).normalize();
        let t = match name {
            "dict" => {
                if let Some(t) = tys.first() {
                    if t.is(base::DICT) {
                        t.clone()
                    } else {
                        let e = elem_type(t);
                        let k = e.arg(0).cloned().unwrap_or_else(TypeExpr::any);
                        let v = e.arg(1).cloned().unwrap_or_else(TypeExpr::any);
                        TypeExpr::dict(k, v).normalize()
                    }
                } else if !kwargs.is_empty() {
                    let v = kwargs.iter().map(|(_, v)| self.ty(v)).reduce(|a, b| merge(&a, &b));
                    TypeExpr::dict(TypeExpr::str(), v.unwrap_or_else(TypeExpr::any)).normalize()
                } else {
                    TypeExpr::dict(TypeExpr::any(), TypeExpr::any()).normalize()
                }
            }
            "zip" => iter_of(TypeExpr::tuple((0..tys.len()).map(elem).collect())),
            "enumerate" => iter_of(TypeExpr::tuple(vec![TypeExpr::int(), elem(0)])),
            "map" => {
                let Some(f) = args.first() else { return Value::any() };
                let ins: Vec<Value> = (1..tys.len()).map(|i| Value::Type(elem(i))).collect();
                let r = self.call_value(f, ins, Vec::new(), false, 0);
                iter_of(self.ty(&r))
            }
            "filter" => iter_of(elem(1)),
            "reversed" => iter_of(elem(0)),
            "max" | "min" => {
                if tys.len() == 1 {
                    elem(0)
                } else {
                    tys.iter().cloned().reduce(|a, b| merge(&a, &b)).unwrap_or_else(TypeExpr::any)
                }
            }
            "sum" => {
                let e = elem(0);
                let e = if tys.is_empty() { TypeExpr::int() } else { e };
                match tys.get(1) {
                    Some(start) => merge(&e, start),
                    None if e.is_any() => TypeExpr::any(),
                    None => e,
                }
            }
            "next" => match tys.get(1) {
                Some(d) => merge(&elem(0), d),
                None => elem(0),
            },
            "super" => return self.super_value(),
            "type" => {
                if let Some(c) = tys.first().and_then(|t| self.class_of_type(t)) {
                    return Value::Class(c);
                }
                return Value::any();
            }
            _ => {
                let tbl = table();
                if let Some(tpl) = tbl.functions.get(name) {
                    if name == "sorted" {
                        self.call_key(&kwargs, elem(0));
                    }
                    tpl.instantiate(&tys, None)
                } else if tbl.classes.contains(name) {
                    TypeExpr::simple(name)
                } else {
                    TypeExpr::any()
                }
            }
        };
        if matches!(name, "max" | "min") {
            let e = if tys.len() == 1 { elem(0) } else { t.clone() };
            self.call_key(&kwargs, e);
        }
        Value::Type(t)
    }

    /// Runs a `key=` callback on the element type for its evidence.
    fn call_key(&mut self, kwargs: &[(String, Value)], elem: TypeExpr) {
        if let Some((_, f)) = kwargs.iter().find(|(k, _)| k == "key") {
            let f = f.clone();
            self.call_value(&f, vec![Value::Type(elem)], Vec::new(), false, 0);
        }
    }

    fn super_value(&self) -> Value {
        let top = self.top_ref();
        let Some(f) = top.func else { return Value::any() };
        let info = &self.reg.funcs[f];
        let Some(c) = info.class.or(info.self_class) else {
            return Value::any();
        };
        let recv = info
            .receiver
            .and_then(|r| top.vars.get(r).cloned())
            .unwrap_or_else(|| Value::Type(self.instance_type(c)));
        Value::Super(c, Box::new(recv))
    }

    fn call_method(&mut self, recv: &TypeExpr, name: &str, args: Vec<Value>, kwargs: Vec<(String, Value)>) -> Value {
        if recv.is_union() {
            let mut out: Option<TypeExpr> = None;
            for m in recv.members() {
                if m.is_none() {
                    continue;
                }
                let mv = Value::Type(m.clone());
                let callee = self.attribute(&mv, name);
                let r = self.call_value(&callee, args.clone(), kwargs.clone(), false, 0);
                let rt = self.ty(&r);
                out = Some(match out {
                    Some(o) => merge(&o, &rt),
                    None => rt,
                });
            }
            return Value::Type(out.unwrap_or_else(TypeExpr::any));
        }
        let tys: Vec<TypeExpr> = args.iter().map(|v| self.ty(v)).collect();
        let value = || recv.arg(1).cloned().unwrap_or_else(TypeExpr::any);
        let t = match (recv.base(), name) {
            (base::DICT, "get") => match tys.get(1) {
                Some(d) => merge(&value(), d),
                None if value().is_any() => TypeExpr::any(),
                None => merge(&value(), &TypeExpr::none()),
            },
            (base::DICT, "setdefault") => merge(&value(), tys.get(1).unwrap_or(&TypeExpr::none())),
            (base::DICT, "pop") if tys.len() > 1 => merge(&value(), &tys[1]),
            (base::LIST, "sort") => {
                self.call_key(&kwargs, elem_type(recv));
                TypeExpr::none()
            }
            _ => match table().method(recv, name) {
                Some(tpl) => tpl.instantiate(&tys, Some(recv)),
                None => match name {
                    "append" | "insert" | "extend" | "add" | "update" => TypeExpr::none(),
                    _ => TypeExpr::any(),
                },
            },
        };
        Value::Type(t)
    }

    fn call_external(&mut self, path: &str, args: Vec<Value>, kwargs: Vec<(String, Value)>, loc: usize) -> Value {
        let tys: Vec<TypeExpr> = args.iter().map(|v| self.ty(v)).collect();
        if path == "collections.defaultdict" {
            let value = match args.first() {
                Some(factory) => {
                    let r = self.call_value(factory, Vec::new(), Vec::new(), false, loc);
                    self.ty(&r)
                }
                None => TypeExpr::any(),
            };
            return Value::Type(TypeExpr::dict(TypeExpr::any(), value).normalize());
        }
        let _ = kwargs;
        match table().externals.get(path) {
            Some(ExternalEntry::Callable(tpl)) => Value::Type(tpl.instantiate(&tys, None)),
            Some(ExternalEntry::Constant(t)) => Value::Type(t.clone()),
            None => {
                let last = path.rsplit('.').next().unwrap_or(path);
                if last.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    // a class from outside the project: instances are opaque
                    return Value::Type(TypeExpr::simple(path));
                }
                let at = self.location(loc);
                self.diags.push(
                    Code::UnresolvedCallee,
                    at,
                    format!("no signature for external callee `{path}`"),
                );
                Value::any()
            }
        }
    }
}
