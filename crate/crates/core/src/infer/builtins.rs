//! The builtins signature table and fixed operator rules.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use rustpython_parser::ast::Operator;
use serde::Deserialize;

use crate::types::{base, merge, parse_type, TypeExpr};

const TABLE_JSON: &str = include_str!("builtins.json");

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTemplate {
    One(String),
    ByArity(Vec<String>),
}

#[derive(Deserialize)]
struct RawTable {
    functions: HashMap<String, RawTemplate>,
    classes: Vec<String>,
    methods: HashMap<String, HashMap<String, RawTemplate>>,
    externals: HashMap<String, RawTemplate>,
}

/// A result type with `$` placeholders, optionally one per argument count
/// (the last form covers all larger counts).
#[derive(Clone, Debug)]
pub struct Template {
    forms: Vec<TypeExpr>,
}

impl Template {
    fn parse(raw: &RawTemplate) -> Template {
        let strs: Vec<&String> = match raw {
            RawTemplate::One(s) => vec![s],
            RawTemplate::ByArity(v) => v.iter().collect(),
        };
        Template {
            forms: strs
                .into_iter()
                .map(|s| parse_type(s).unwrap_or_else(|e| panic!("bad builtin template: {e}")))
                .collect(),
        }
    }

    /// Fills placeholders: `$aN` is argument N, `$eN` its element type,
    /// `$self` the receiver, `$T` its element type and `$K`/`$V` its key and
    /// value types.
    pub fn instantiate(&self, args: &[TypeExpr], recv: Option<&TypeExpr>) -> TypeExpr {
        let form = &self.forms[args.len().min(self.forms.len() - 1)];
        form.substitute(&|b: &str| {
            let rest = b.strip_prefix('$')?;
            let arg = |i: &str| -> TypeExpr {
                i.parse::<usize>()
                    .ok()
                    .and_then(|i| args.get(i).cloned())
                    .unwrap_or_else(TypeExpr::any)
            };
            let r = || recv.cloned().unwrap_or_else(TypeExpr::any);
            Some(match rest {
                "self" => r(),
                "T" => elem_type(&r()),
                "K" => r().arg(0).cloned().unwrap_or_else(TypeExpr::any),
                "V" => r().arg(1).cloned().unwrap_or_else(TypeExpr::any),
                s if s.starts_with('a') => arg(&s[1..]),
                s if s.starts_with('e') => elem_type(&arg(&s[1..])),
                _ => TypeExpr::any(),
            })
        })
    }
}

pub enum ExternalEntry {
    Constant(TypeExpr),
    Callable(Template),
}

pub struct Builtins {
    pub functions: HashMap<String, Template>,
    pub classes: HashSet<String>,
    pub methods: HashMap<String, HashMap<String, Template>>,
    pub externals: HashMap<String, ExternalEntry>,
}

impl Builtins {
    pub fn method(&self, recv: &TypeExpr, name: &str) -> Option<&Template> {
        self.methods.get(recv.base())?.get(name)
    }
}

pub fn table() -> &'static Builtins {
    static TABLE: OnceLock<Builtins> = OnceLock::new();
    TABLE.get_or_init(|| {
        let raw: RawTable = serde_json::from_str(TABLE_JSON).expect("builtins table is valid json");
        Builtins {
            functions: raw.functions.iter().map(|(k, v)| (k.clone(), Template::parse(v))).collect(),
            classes: raw.classes.into_iter().collect(),
            methods: raw
                .methods
                .iter()
                .map(|(k, m)| (k.clone(), m.iter().map(|(n, v)| (n.clone(), Template::parse(v))).collect()))
                .collect(),
            externals: raw
                .externals
                .iter()
                .map(|(k, v)| {
                    let entry = match v {
                        RawTemplate::One(s) if s.starts_with('=') => ExternalEntry::Constant(
                            parse_type(&s[1..]).unwrap_or_else(|e| panic!("bad builtin constant: {e}")),
                        ),
                        other => ExternalEntry::Callable(Template::parse(other)),
                    };
                    (k.clone(), entry)
                })
                .collect(),
        }
    })
}

/// The type produced by iterating over a value of type `t`.
pub fn elem_type(t: &TypeExpr) -> TypeExpr {
    if t.is_union() {
        return t
            .members()
            .iter()
            .map(elem_type)
            .reduce(|a, b| merge(&a, &b))
            .unwrap_or_else(TypeExpr::any);
    }
    let first = || t.arg(0).cloned().unwrap_or_else(TypeExpr::any);
    match t.base() {
        base::LIST | base::SET | base::FROZENSET | base::GENERATOR | base::DICT => first(),
        "Iterator" | "Iterable" | "Sequence" | "deque" | "Counter" | "Collection" | "AsyncIterator" => first(),
        base::TUPLE => {
            let args = t.args();
            match args.last() {
                None => TypeExpr::any(),
                Some(l) if l.is(base::ELLIPSIS) => first(),
                _ => TypeExpr::union(args.iter().cloned()),
            }
        }
        base::STR | "TextIO" => TypeExpr::str(),
        base::BYTES | "range" | "bytearray" => TypeExpr::int(),
        _ => TypeExpr::any(),
    }
}

fn numeric_rank(t: &TypeExpr) -> Option<u8> {
    match t.base() {
        base::BOOL => Some(0),
        base::INT => Some(1),
        base::FLOAT => Some(2),
        "complex" => Some(3),
        _ => None,
    }
}

fn from_rank(r: u8) -> TypeExpr {
    match r {
        0 | 1 => TypeExpr::int(),
        2 => TypeExpr::float(),
        _ => TypeExpr::simple("complex"),
    }
}

/// Result of `l <op> r` for builtin operand types; `None` when the table
/// has no rule.
pub fn binop(op: Operator, l: &TypeExpr, r: &TypeExpr) -> Option<TypeExpr> {
    if l.is_any() || r.is_any() {
        return None;
    }
    if l.is_union() || r.is_union() {
        let mut out: Option<TypeExpr> = None;
        for a in l.members() {
            for b in r.members() {
                let t = binop(op, a, b)?;
                out = Some(match out {
                    Some(o) => merge(&o, &t),
                    None => t,
                });
            }
        }
        return out;
    }
    let (nl, nr) = (numeric_rank(l), numeric_rank(r));
    if let (Some(a), Some(b)) = (nl, nr) {
        let hi = a.max(b);
        return Some(match op {
            Operator::Div => from_rank(hi.max(2)),
            Operator::BitOr | Operator::BitAnd | Operator::BitXor if hi == 0 => TypeExpr::bool(),
            Operator::BitOr | Operator::BitAnd | Operator::BitXor | Operator::LShift | Operator::RShift => {
                if hi <= 1 {
                    TypeExpr::int()
                } else {
                    return None;
                }
            }
            Operator::MatMult => return None,
            _ => from_rank(hi),
        });
    }
    let same = l.base() == r.base();
    match op {
        Operator::Add if same && matches!(l.base(), base::STR | base::BYTES | base::LIST) => Some(merge(l, r)),
        Operator::Add if same && l.is(base::TUPLE) => Some(concat_tuples(l, r)),
        Operator::Mult | Operator::Mod if l.is(base::STR) => Some(TypeExpr::str()),
        Operator::Mult if r.is(base::STR) && nl.is_some() => Some(TypeExpr::str()),
        Operator::Mult if matches!(l.base(), base::LIST | base::BYTES) && nr.is_some() => Some(l.clone()),
        Operator::Mult if matches!(r.base(), base::LIST | base::BYTES) && nl.is_some() => Some(r.clone()),
        Operator::Mult if l.is(base::TUPLE) && nr.is_some() => Some(TypeExpr::tuple_of(elem_type(l)).normalize()),
        Operator::Sub | Operator::BitOr | Operator::BitAnd | Operator::BitXor
            if same && matches!(l.base(), base::SET | base::FROZENSET) =>
        {
            Some(merge(l, r))
        }
        Operator::BitOr if same && l.is(base::DICT) => Some(merge(l, r)),
        _ => None,
    }
}

fn concat_tuples(l: &TypeExpr, r: &TypeExpr) -> TypeExpr {
    let variadic = |t: &TypeExpr| t.args().last().is_some_and(|a| a.is(base::ELLIPSIS));
    if variadic(l) || variadic(r) {
        return TypeExpr::tuple_of(merge(&elem_type(l), &elem_type(r))).normalize();
    }
    TypeExpr::tuple(l.args().iter().chain(r.args()).cloned().collect()).normalize()
}

/// Dunder method implementing a binary operator on user classes.
pub fn dunder(op: Operator) -> &'static str {
    match op {
        Operator::Add => "__add__",
        Operator::Sub => "__sub__",
        Operator::Mult => "__mul__",
        Operator::MatMult => "__matmul__",
        Operator::Div => "__truediv__",
        Operator::Mod => "__mod__",
        Operator::Pow => "__pow__",
        Operator::LShift => "__lshift__",
        Operator::RShift => "__rshift__",
        Operator::BitOr => "__or__",
        Operator::BitXor => "__xor__",
        Operator::BitAnd => "__and__",
        Operator::FloorDiv => "__floordiv__",
    }
}
