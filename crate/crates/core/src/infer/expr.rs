//! Expression evaluation, attribute and subscript rules, and the mutation
//! places that receive container evidence.

use rustpython_parser::ast::{self, BoolOp, Constant, Expr, Operator, UnaryOp};

use super::builtins::{binop, dunder, elem_type, table};
use super::call::Member;
use super::value::{ClassId, Value};
use super::Engine;
use crate::types::{base, merge, TypeExpr};

/// Where mutation evidence for a container ends up.
#[derive(Clone, Debug)]
pub(crate) enum Place {
    Name(String),
    Attr(ClassId, String),
    /// An element of another place, reached through a key of this type.
    Index(Box<Place>, TypeExpr),
}

impl<'a> Engine<'a> {
    pub(crate) fn eval(&mut self, e: &'a Expr) -> Value {
        match e {
            Expr::Constant(c) => Value::Type(constant_type(&c.value)),
            Expr::JoinedStr(j) => {
                for v in &j.values {
                    self.eval(v);
                }
                Value::Type(TypeExpr::str())
            }
            Expr::FormattedValue(f) => {
                self.eval(&f.value);
                Value::Type(TypeExpr::str())
            }
            Expr::Name(n) => self.lookup(n.id.as_str()),
            Expr::List(l) => {
                let elem = self.join_elts(&l.elts);
                Value::Type(TypeExpr::list(elem).normalize())
            }
            Expr::Set(s) => {
                let elem = self.join_elts(&s.elts);
                Value::Type(TypeExpr::set(elem).normalize())
            }
            Expr::Tuple(t) => {
                if t.elts.iter().any(|e| matches!(e, Expr::Starred(_))) {
                    let elem = self.join_elts(&t.elts);
                    return Value::Type(TypeExpr::tuple_of(elem).normalize());
                }
                let items = t
                    .elts
                    .iter()
                    .map(|e| {
                        let v = self.eval(e);
                        self.ty(&v)
                    })
                    .collect();
                Value::Type(TypeExpr::tuple(items).normalize())
            }
            Expr::Dict(d) => {
                let mut k: Option<TypeExpr> = None;
                let mut v: Option<TypeExpr> = None;
                for (key, val) in d.keys.iter().zip(&d.values) {
                    let vv = self.eval(val);
                    let vt = self.ty(&vv);
                    let (kt, vt) = match key {
                        Some(key) => {
                            let kv = self.eval(key);
                            (self.ty(&kv), vt)
                        }
                        // `**other` splices another mapping in
                        None => (
                            vt.arg(0).cloned().unwrap_or_else(TypeExpr::any),
                            vt.arg(1).cloned().unwrap_or_else(TypeExpr::any),
                        ),
                    };
                    k = Some(join_opt(k, kt));
                    v = Some(join_opt(v, vt));
                }
                Value::Type(
                    TypeExpr::dict(k.unwrap_or_else(TypeExpr::any), v.unwrap_or_else(TypeExpr::any)).normalize(),
                )
            }
            Expr::BoolOp(b) => {
                let n = b.values.len();
                let mut out: Option<TypeExpr> = None;
                for (i, v) in b.values.iter().enumerate() {
                    let v = self.eval(v);
                    let mut t = self.ty(&v);
                    // a falsy None on the left of `or` never survives
                    if b.op == BoolOp::Or && i + 1 < n {
                        t = drop_none(&t);
                    }
                    out = Some(join_opt(out, t));
                }
                Value::Type(out.unwrap_or_else(TypeExpr::any))
            }
            Expr::NamedExpr(n) => {
                let v = self.eval(&n.value);
                self.assign(&n.target, v.clone());
                v
            }
            Expr::BinOp(b) => {
                let l = self.eval(&b.left);
                let r = self.eval(&b.right);
                self.binop_values(b.op, &l, &r)
            }
            Expr::UnaryOp(u) => {
                let v = self.eval(&u.operand);
                let t = self.ty(&v);
                Value::Type(match u.op {
                    UnaryOp::Not => TypeExpr::bool(),
                    UnaryOp::Invert if t.is(base::BOOL) => TypeExpr::int(),
                    UnaryOp::USub | UnaryOp::UAdd if t.is(base::BOOL) => TypeExpr::int(),
                    _ if matches!(t.base(), base::INT | base::FLOAT | "complex") => t,
                    _ => TypeExpr::any(),
                })
            }
            Expr::Lambda(l) => {
                // parameters are unknown here, so they shadow as Any
                let mut saved = Vec::new();
                for p in l.args.posonlyargs.iter().chain(&l.args.args).chain(&l.args.kwonlyargs) {
                    let name = p.def.arg.to_string();
                    let old = self.top().vars.insert(name.clone(), Value::any());
                    saved.push((name, old));
                }
                let body = self.eval(&l.body);
                let ret = self.ty(&body);
                self.restore(saved);
                Value::Type(TypeExpr::callable(None, ret).normalize())
            }
            Expr::IfExp(i) => {
                self.eval(&i.test);
                let a = self.eval(&i.body);
                let b = self.eval(&i.orelse);
                Value::Type(merge(&self.ty(&a), &self.ty(&b)))
            }
            Expr::ListComp(c) => {
                let t = self.comprehension(&c.generators, &[&c.elt]);
                Value::Type(TypeExpr::list(t[0].clone()).normalize())
            }
            Expr::SetComp(c) => {
                let t = self.comprehension(&c.generators, &[&c.elt]);
                Value::Type(TypeExpr::set(t[0].clone()).normalize())
            }
            Expr::GeneratorExp(c) => {
                let t = self.comprehension(&c.generators, &[&c.elt]);
                Value::Type(TypeExpr::generator(t[0].clone()).normalize())
            }
            Expr::DictComp(c) => {
                let t = self.comprehension(&c.generators, &[&c.key, &c.value]);
                Value::Type(TypeExpr::dict(t[0].clone(), t[1].clone()).normalize())
            }
            Expr::Await(a) => {
                self.eval(&a.value);
                Value::any()
            }
            Expr::Yield(y) => {
                let t = match &y.value {
                    Some(v) => {
                        let v = self.eval(v);
                        self.ty(&v)
                    }
                    None => TypeExpr::none(),
                };
                self.top().add_yield(t);
                Value::any()
            }
            Expr::YieldFrom(y) => {
                let v = self.eval(&y.value);
                let t = self.iter_elem(&v);
                self.top().add_yield(t);
                Value::any()
            }
            Expr::Compare(c) => {
                self.eval(&c.left);
                for x in &c.comparators {
                    self.eval(x);
                }
                Value::Type(TypeExpr::bool())
            }
            Expr::Call(c) => self.eval_call(c),
            Expr::Attribute(a) => {
                let obj = self.eval(&a.value);
                self.attribute(&obj, a.attr.as_str())
            }
            Expr::Subscript(s) => {
                let container = self.eval(&s.value);
                let key = self.eval(&s.slice);
                self.subscript(&container, &key, &s.slice)
            }
            Expr::Starred(s) => self.eval(&s.value),
            Expr::Slice(s) => {
                for x in [&s.lower, &s.upper, &s.step].into_iter().flatten() {
                    self.eval(x);
                }
                Value::Type(TypeExpr::simple("slice"))
            }
        }
    }

    fn join_elts(&mut self, elts: &'a [Expr]) -> TypeExpr {
        let mut out: Option<TypeExpr> = None;
        for e in elts {
            let t = match e {
                Expr::Starred(s) => {
                    let v = self.eval(&s.value);
                    self.iter_elem(&v)
                }
                _ => {
                    let v = self.eval(e);
                    self.ty(&v)
                }
            };
            out = Some(join_opt(out, t));
        }
        out.unwrap_or_else(TypeExpr::any)
    }

    fn restore(&mut self, saved: Vec<(String, Option<Value>)>) {
        for (name, old) in saved.into_iter().rev() {
            match old {
                Some(v) => self.top().vars.insert(name, v),
                None => self.top().vars.remove(&name),
            };
        }
    }

    /// Binds comprehension targets for the duration of the element
    /// expressions and returns their types.
    fn comprehension(&mut self, gens: &'a [ast::Comprehension], elts: &[&'a Expr]) -> Vec<TypeExpr> {
        let before = self.top_ref().vars.clone();
        for g in gens {
            let it = self.eval(&g.iter);
            let elem = self.iter_elem(&it);
            self.bind_local_target(&g.target, elem);
            for cond in &g.ifs {
                self.eval(cond);
            }
        }
        let out = elts
            .iter()
            .map(|e| {
                let v = self.eval(e);
                self.ty(&v)
            })
            .collect();
        self.top().vars = before;
        out
    }

    /// Binds a target in the flow state only, without slot evidence.
    fn bind_local_target(&mut self, target: &'a Expr, t: TypeExpr) {
        match target {
            Expr::Name(n) => {
                self.top().vars.insert(n.id.to_string(), Value::Type(t));
            }
            Expr::Tuple(x) => self.bind_local_elts(&x.elts, t),
            Expr::List(x) => self.bind_local_elts(&x.elts, t),
            _ => {}
        }
    }

    fn bind_local_elts(&mut self, elts: &'a [Expr], t: TypeExpr) {
        let fixed = t.is(base::TUPLE)
            && t.args().len() == elts.len()
            && !t.args().last().is_some_and(|a| a.is(base::ELLIPSIS));
        let elem = elem_type(&t);
        for (i, e) in elts.iter().enumerate() {
            let part = if fixed { t.args()[i].clone() } else { elem.clone() };
            self.bind_local_target(e, part);
        }
    }

    pub(crate) fn binop_values(&mut self, op: Operator, l: &Value, r: &Value) -> Value {
        let (lt, rt) = (self.ty(l), self.ty(r));
        if let Some(t) = binop(op, &lt, &rt) {
            return Value::Type(t);
        }
        if let Some(c) = self.class_of_type(&lt) {
            if let Some(Member::Method(f)) = self.class_member(c, dunder(op)) {
                let t = self.execute(f, Some(l.clone()), vec![r.clone()], Vec::new(), false);
                return Value::Type(t);
            }
        }
        Value::any()
    }

    // ---- attributes ----------------------------------------------------

    pub(crate) fn attribute(&mut self, obj: &Value, attr: &str) -> Value {
        match obj {
            Value::Type(t) if t.is_union() => {
                let mut out: Option<TypeExpr> = None;
                for m in t.members() {
                    if m.is_none() {
                        continue;
                    }
                    let v = self.attribute(&Value::Type(m.clone()), attr);
                    if let Value::Method(..) | Value::Bound(..) = v {
                        // calls on a union receiver dispatch per member
                        return Value::Method(t.clone(), attr.to_string());
                    }
                    let vt = self.ty(&v);
                    out = Some(join_opt(out, vt));
                }
                Value::Type(out.unwrap_or_else(TypeExpr::any))
            }
            Value::Type(t) => {
                if let Some(c) = self.class_of_type(t) {
                    return self.instance_attribute(c, obj.clone(), attr);
                }
                if let Some(cls) = type_arg_class(t, self) {
                    return self.class_attribute(cls, attr);
                }
                if table().method(t, attr).is_some() || is_special_method(t, attr) {
                    return Value::Method(t.clone(), attr.to_string());
                }
                Value::any()
            }
            Value::Class(c) => self.class_attribute(*c, attr),
            Value::Module(m) => self.module_member(m, attr),
            Value::External(p) => {
                let full = format!("{p}.{attr}");
                match table().externals.get(&full) {
                    Some(super::builtins::ExternalEntry::Constant(t)) => Value::Type(t.clone()),
                    _ => Value::External(full),
                }
            }
            Value::Super(c, recv) => {
                let mro = self.mro(*c);
                for &k in mro.iter().skip(1) {
                    if let Some(&f) = self.reg.classes[k].methods.get(attr) {
                        return self.bind_method(f, (**recv).clone(), k);
                    }
                }
                Value::any()
            }
            _ => Value::any(),
        }
    }

    fn instance_attribute(&mut self, c: ClassId, recv: Value, attr: &str) -> Value {
        match self.class_member(c, attr) {
            Some(Member::Method(f)) => {
                if self.reg.funcs[f].is_property {
                    let t = self.execute(f, Some(recv), Vec::new(), Vec::new(), false);
                    return Value::Type(t);
                }
                self.bind_method(f, recv, c)
            }
            Some(Member::Attr(s)) => Value::Type(self.slot_type(s)),
            None => Value::any(),
        }
    }

    fn class_attribute(&mut self, c: ClassId, attr: &str) -> Value {
        match self.class_member(c, attr) {
            Some(Member::Method(f)) => {
                if self.reg.funcs[f].is_classmethod {
                    Value::Bound(f, Box::new(Value::Class(c)))
                } else {
                    Value::Function(f)
                }
            }
            Some(Member::Attr(s)) => Value::Type(self.slot_type(s)),
            None => Value::any(),
        }
    }

    fn bind_method(&self, f: usize, recv: Value, c: ClassId) -> Value {
        let info = &self.reg.funcs[f];
        if info.is_static {
            Value::Function(f)
        } else if info.is_classmethod {
            let cls = match &recv {
                Value::Type(t) => self.class_of_type(t).unwrap_or(c),
                Value::Class(k) => *k,
                _ => c,
            };
            Value::Bound(f, Box::new(Value::Class(cls)))
        } else {
            Value::Bound(f, Box::new(recv))
        }
    }

    /// Attribute slot receiving `obj.attr = ...`.
    pub(crate) fn attr_slot_of(&self, obj: &Value, attr: &str) -> Option<usize> {
        let c = match obj {
            Value::Type(t) => t.members().iter().find_map(|m| self.class_of_type(m))?,
            Value::Class(c) => *c,
            _ => return None,
        };
        for k in self.mro(c) {
            if let Some(&s) = self.reg.classes[k].attr_slots.get(attr) {
                return Some(s);
            }
        }
        None
    }

    // ---- subscripts ----------------------------------------------------

    pub(crate) fn subscript(&mut self, container: &Value, key: &Value, key_expr: &Expr) -> Value {
        let t = match container {
            Value::Class(_) | Value::Builtin(_) | Value::External(_) => return Value::any(),
            other => self.ty(other),
        };
        let kt = self.ty(key);
        if let Some(c) = self.class_of_type(&t) {
            if let Some(Member::Method(f)) = self.class_member(c, "__getitem__") {
                let r = self.execute(f, Some(container.clone()), vec![key.clone()], Vec::new(), false);
                return Value::Type(r);
            }
            return Value::any();
        }
        Value::Type(subscript_type(&t, &kt, key_expr))
    }

    // ---- places --------------------------------------------------------

    pub(crate) fn place_of(&mut self, e: &'a Expr) -> Option<Place> {
        match e {
            Expr::Name(n) => Some(Place::Name(n.id.to_string())),
            Expr::Attribute(a) => {
                let obj = self.eval(&a.value);
                let c = match &obj {
                    Value::Type(t) => t.members().iter().find_map(|m| self.class_of_type(m))?,
                    Value::Class(c) => *c,
                    _ => return None,
                };
                let owner = self
                    .mro(c)
                    .into_iter()
                    .find(|&k| self.reg.classes[k].attr_slots.contains_key(a.attr.as_str()))?;
                Some(Place::Attr(owner, a.attr.to_string()))
            }
            Expr::Subscript(s) => {
                let inner = self.place_of(&s.value)?;
                let k = self.eval(&s.slice);
                let kt = self.ty(&k);
                Some(Place::Index(Box::new(inner), kt))
            }
            // `d.setdefault(k, v)` returns the stored value `d[k]`
            Expr::Call(c) if c.args.len() == 2 => match &*c.func {
                Expr::Attribute(a) if a.attr.as_str() == "setdefault" => {
                    let inner = self.place_of(&a.value)?;
                    if !matches!(self.place_type(&inner).base(), base::DICT | base::ANY) {
                        return None;
                    }
                    let k = self.eval(&c.args[0]);
                    let kt = self.ty(&k);
                    Some(Place::Index(Box::new(inner), kt))
                }
                _ => None,
            },
            _ => None,
        }
    }

    pub(crate) fn place_type(&self, p: &Place) -> TypeExpr {
        match p {
            Place::Name(n) => self.ty(&self.lookup(n)),
            Place::Attr(c, a) => self.reg.classes[*c]
                .attr_slots
                .get(a)
                .map(|&s| self.slot_type(s))
                .unwrap_or_else(TypeExpr::any),
            Place::Index(inner, k) => {
                let t = self.place_type(inner);
                subscript_type(&t, k, &Expr::Constant(ast::ExprConstant {
                    range: Default::default(),
                    value: Constant::None,
                    kind: None,
                }))
            }
        }
    }

    /// Merges container evidence into a place and refines the binding.
    pub(crate) fn update_place(&mut self, p: &Place, evidence: &TypeExpr) {
        match p {
            Place::Name(n) => {
                let cur = self.ty(&self.lookup(n));
                let (slot, home) = self.name_slot(n);
                if let Some(s) = slot {
                    self.observe(s, evidence);
                }
                if matches!(self.lookup(n), Value::Type(_)) {
                    let refined = self.widen(&merge(&cur, evidence));
                    let refined = if cur.is_any() { evidence.clone() } else { refined };
                    self.rebind(n, home, Value::Type(refined));
                }
            }
            Place::Attr(c, a) => {
                if let Some(&s) = self.reg.classes[*c].attr_slots.get(a) {
                    self.observe(s, evidence);
                }
            }
            Place::Index(inner, k) => {
                let outer = self.place_type(inner);
                let wrapped = if outer.is(base::LIST) {
                    TypeExpr::list(evidence.clone())
                } else if outer.is_any() || outer.is(base::DICT) || outer.is("defaultdict") {
                    TypeExpr::dict(k.clone(), evidence.clone())
                } else {
                    return;
                };
                self.update_place(inner, &wrapped.normalize());
            }
        }
    }
}

fn join_opt(acc: Option<TypeExpr>, t: TypeExpr) -> TypeExpr {
    match acc {
        Some(a) => merge(&a, &t),
        None => t,
    }
}

fn drop_none(t: &TypeExpr) -> TypeExpr {
    if t.is_union() {
        TypeExpr::union(t.members().iter().filter(|m| !m.is_none()).cloned())
    } else {
        t.clone()
    }
}

/// Class named by a `type[X]` value.
fn type_arg_class(t: &TypeExpr, e: &Engine<'_>) -> Option<ClassId> {
    if t.is(base::TYPE) {
        return t.arg(0).and_then(|a| e.class_of_type(a));
    }
    None
}

/// Methods handled in the call rules instead of the signature table.
fn is_special_method(t: &TypeExpr, name: &str) -> bool {
    matches!(
        (t.base(), name),
        (base::DICT, "get" | "setdefault" | "items" | "keys" | "values")
            | (base::SET, "add" | "update")
            | (base::LIST, "append" | "extend" | "insert")
    )
}

pub(crate) fn constant_type(c: &Constant) -> TypeExpr {
    match c {
        Constant::None => TypeExpr::none(),
        Constant::Bool(_) => TypeExpr::bool(),
        Constant::Str(_) => TypeExpr::str(),
        Constant::Bytes(_) => TypeExpr::bytes(),
        Constant::Int(_) => TypeExpr::int(),
        Constant::Float(_) => TypeExpr::float(),
        Constant::Complex { .. } => TypeExpr::simple("complex"),
        Constant::Ellipsis => TypeExpr::any(),
        Constant::Tuple(items) => TypeExpr::tuple(items.iter().map(constant_type).collect()).normalize(),
    }
}

/// `t[k]` for builtin container types.
pub(crate) fn subscript_type(t: &TypeExpr, k: &TypeExpr, key_expr: &Expr) -> TypeExpr {
    if t.is_union() {
        return t
            .members()
            .iter()
            .filter(|m| !m.is_none())
            .map(|m| subscript_type(m, k, key_expr))
            .reduce(|a, b| merge(&a, &b))
            .unwrap_or_else(TypeExpr::any);
    }
    let is_slice = matches!(key_expr, Expr::Slice(_)) || k.is("slice");
    let arg = |i: usize| t.arg(i).cloned().unwrap_or_else(TypeExpr::any);
    match t.base() {
        base::DICT | "defaultdict" | "OrderedDict" | "Mapping" => arg(1),
        "Counter" => TypeExpr::int(),
        base::LIST | "Sequence" | "deque" => {
            if is_slice {
                t.clone()
            } else {
                arg(0)
            }
        }
        base::STR => TypeExpr::str(),
        base::BYTES => {
            if is_slice {
                TypeExpr::bytes()
            } else {
                TypeExpr::int()
            }
        }
        base::TUPLE => {
            let args = t.args();
            let variadic = args.last().is_some_and(|a| a.is(base::ELLIPSIS));
            if is_slice {
                return if variadic {
                    t.clone()
                } else {
                    TypeExpr::tuple_of(elem_type(t)).normalize()
                };
            }
            if !variadic {
                if let Expr::Constant(c) = key_expr {
                    if let Constant::Int(i) = &c.value {
                        if let Ok(i) = usize::try_from(i.clone()) {
                            if let Some(a) = args.get(i) {
                                return a.clone();
                            }
                        }
                    }
                }
                if let Expr::UnaryOp(u) = key_expr {
                    if let (UnaryOp::USub, Expr::Constant(c)) = (u.op, &*u.operand) {
                        if let Constant::Int(i) = &c.value {
                            if let Ok(i) = usize::try_from(i.clone()) {
                                if i >= 1 && i <= args.len() {
                                    return args[args.len() - i].clone();
                                }
                            }
                        }
                    }
                }
            }
            elem_type(t)
        }
        _ => TypeExpr::any(),
    }
}
