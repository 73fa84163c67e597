//! Abstract values and flow-sensitive frames.

use std::collections::BTreeMap;

use crate::types::{merge, TypeExpr};

pub type FuncId = usize;
pub type ClassId = usize;

/// What a name or expression evaluates to. Anything that is not a
/// first-class function, class or module is described by its type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Type(TypeExpr),
    Function(FuncId),
    Class(ClassId),
    /// A project module, or a package prefix with no module of its own.
    Module(String),
    /// Dotted path into something outside the project.
    External(String),
    /// A builtin function from the signature table, e.g. `len`.
    Builtin(String),
    /// A method on a builtin-typed receiver, e.g. `"a".lower`.
    Method(TypeExpr, String),
    /// A project method bound to its receiver.
    Bound(FuncId, Box<Value>),
    /// `super()` inside a method of the given class.
    Super(ClassId, Box<Value>),
}

impl Value {
    pub fn any() -> Value {
        Value::Type(TypeExpr::any())
    }

    pub fn as_type(&self) -> Option<&TypeExpr> {
        match self {
            Value::Type(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_any(&self) -> bool {
        matches!(self, Value::Type(t) if t.is_any())
    }

    /// Stable text used in memo keys.
    pub fn key(&self) -> String {
        match self {
            Value::Type(t) => t.render(),
            Value::Function(f) => format!("<fn {f}>"),
            Value::Class(c) => format!("<class {c}>"),
            Value::Module(m) => format!("<module {m}>"),
            Value::External(p) => format!("<ext {p}>"),
            Value::Builtin(b) => format!("<builtin {b}>"),
            Value::Method(t, m) => format!("<method {t}.{m}>"),
            Value::Bound(f, r) => format!("<bound {f} {}>", r.key()),
            Value::Super(c, r) => format!("<super {c} {}>", r.key()),
        }
    }
}

/// Per-scope flow state: bindings valid at the current program point.
#[derive(Clone, Debug, Default)]
pub struct Frame {
    pub unit: usize,
    pub func: Option<FuncId>,
    /// Set while executing a class body.
    pub class: Option<ClassId>,
    pub vars: BTreeMap<String, Value>,
    /// False once every path through the code so far has returned or raised.
    pub alive: bool,
    pub returns: Option<TypeExpr>,
    pub yields: Option<TypeExpr>,
}

impl Frame {
    pub fn module(unit: usize) -> Frame {
        Frame {
            unit,
            alive: true,
            ..Frame::default()
        }
    }

    pub fn is_module(&self) -> bool {
        self.func.is_none() && self.class.is_none()
    }

    pub fn add_return(&mut self, t: TypeExpr) {
        self.returns = Some(match self.returns.take() {
            Some(old) => merge(&old, &t),
            None => t,
        });
    }

    pub fn add_yield(&mut self, t: TypeExpr) {
        self.yields = Some(match self.yields.take() {
            Some(old) => merge(&old, &t),
            None => t,
        });
    }
}

pub fn merge_values(a: &Value, b: &Value, ty: &dyn Fn(&Value) -> TypeExpr) -> Value {
    if a == b {
        return a.clone();
    }
    Value::Type(merge(&ty(a), &ty(b)))
}

/// Joins the flow state of two paths. A name bound on only one path keeps
/// that binding.
pub fn join_vars(
    a: &BTreeMap<String, Value>,
    b: &BTreeMap<String, Value>,
    ty: &dyn Fn(&Value) -> TypeExpr,
) -> BTreeMap<String, Value> {
    let mut out = a.clone();
    for (k, vb) in b {
        let v = match a.get(k) {
            Some(va) => merge_values(va, vb, ty),
            None => vb.clone(),
        };
        out.insert(k.clone(), v);
    }
    out
}

/// Joins two frames that forked from the same state. Paths that ended in a
/// return or raise contribute nothing to the continuing bindings.
pub fn join_frames(a: Frame, b: Frame, ty: &dyn Fn(&Value) -> TypeExpr) -> Frame {
    let returns = match (a.returns.clone(), b.returns.clone()) {
        (Some(x), Some(y)) => Some(merge(&x, &y)),
        (x, y) => x.or(y),
    };
    let yields = match (a.yields.clone(), b.yields.clone()) {
        (Some(x), Some(y)) => Some(merge(&x, &y)),
        (x, y) => x.or(y),
    };
    let (vars, alive) = match (a.alive, b.alive) {
        (true, false) => (a.vars, true),
        (false, true) => (b.vars, true),
        (true, true) => (join_vars(&a.vars, &b.vars, ty), true),
        (false, false) => (join_vars(&a.vars, &b.vars, ty), false),
    };
    Frame {
        unit: a.unit,
        func: a.func,
        class: a.class,
        vars,
        alive,
        returns,
        yields,
    }
}
