use super::{base, Caps, TypeExpr};

/// Canonical spelling of a (possibly typing-module) base name.
fn lower_alias(name: &str) -> String {
    let mut name = name;
    for prefix in ["typing.", "typing_extensions.", "collections.abc.", "builtins."] {
        if let Some(rest) = name.strip_prefix(prefix) {
            name = rest;
        }
    }
    let known = |n: &str| -> Option<&'static str> {
        Some(match n {
            "List" | "list" => base::LIST,
            "Dict" | "dict" | "DefaultDict" | "defaultdict" => base::DICT,
            "Set" | "set" => base::SET,
            "FrozenSet" | "frozenset" => base::FROZENSET,
            "Tuple" | "tuple" => base::TUPLE,
            "Type" | "type" => base::TYPE,
            "Text" | "str" => base::STR,
            "Callable" | "callable" => base::CALLABLE,
            "Generator" | "generator" => base::GENERATOR,
            "Union" | "union" => base::UNION,
            "Optional" => "optional",
            "Literal" => "literal",
            "Any" | "any" => base::ANY,
            "None" | "NoneType" | "none" => base::NONE,
            "int" => base::INT,
            "float" => base::FLOAT,
            "bool" => base::BOOL,
            "bytes" => base::BYTES,
            _ => return None,
        })
    };
    if let Some(k) = known(name) {
        return k.to_string();
    }
    for prefix in ["t.", "tp.", "collections."] {
        if let Some(k) = name.strip_prefix(prefix).and_then(known) {
            return k.to_string();
        }
    }
    name.to_string()
}

pub(crate) fn normalize(t: &TypeExpr) -> TypeExpr {
    let name = lower_alias(&t.base);
    let args = || t.args.iter().map(normalize).collect::<Vec<_>>();
    match name.as_str() {
        "optional" => {
            let mut members = args();
            members.push(TypeExpr::none());
            join_all(members)
        }
        "literal" => {
            if t.args.is_empty() {
                TypeExpr::any()
            } else {
                join_all(args())
            }
        }
        base::UNION => {
            if t.args.is_empty() {
                TypeExpr::any()
            } else {
                join_all(args())
            }
        }
        base::ANY | base::NONE | base::ELLIPSIS | base::INT | base::FLOAT | base::STR
        | base::BOOL | base::BYTES => TypeExpr::simple(name),
        base::LIST | base::SET | base::FROZENSET => {
            if t.args.is_empty() {
                TypeExpr::raw(name, vec![TypeExpr::any()])
            } else {
                TypeExpr::raw(name, args())
            }
        }
        base::DICT => {
            if t.args.is_empty() {
                TypeExpr::raw(name, vec![TypeExpr::any(), TypeExpr::any()])
            } else {
                TypeExpr::raw(name, args())
            }
        }
        base::GENERATOR => {
            let yielded = t.args.first().map(normalize).unwrap_or_else(TypeExpr::any);
            TypeExpr::raw(name, vec![yielded])
        }
        base::CALLABLE => {
            if t.args.len() != 2 {
                return TypeExpr::raw(name, vec![TypeExpr::ellipsis(), TypeExpr::any()]);
            }
            let params = normalize(&t.args[0]);
            let params = if params.is(base::TUPLE) || params.is(base::ELLIPSIS) {
                params
            } else {
                TypeExpr::ellipsis()
            };
            TypeExpr::raw(name, vec![params, normalize(&t.args[1])])
        }
        _ => TypeExpr::raw(name, args()),
    }
}

fn last_is_ellipsis(t: &TypeExpr) -> bool {
    t.args.last().is_some_and(|a| a.is(base::ELLIPSIS))
}

/// Two union members with the same key are merged argwise rather than kept
/// side by side.
fn same_key(x: &TypeExpr, y: &TypeExpr) -> bool {
    x.base == y.base
        && (x.is(base::CALLABLE)
            || (x.args.len() == y.args.len() && last_is_ellipsis(x) == last_is_ellipsis(y)))
}

/// Argument positions treat `any` as a placeholder for "not yet observed".
fn merge_arg(x: &TypeExpr, y: &TypeExpr) -> TypeExpr {
    if x.is_any() {
        y.clone()
    } else if y.is_any() {
        x.clone()
    } else {
        merge(x, y)
    }
}

fn merge_params(x: &TypeExpr, y: &TypeExpr) -> TypeExpr {
    if x == y {
        return x.clone();
    }
    if x.is(base::TUPLE) && y.is(base::TUPLE) && x.args.len() == y.args.len() {
        return TypeExpr::raw(
            base::TUPLE,
            x.args.iter().zip(&y.args).map(|(a, b)| merge_arg(a, b)).collect(),
        );
    }
    TypeExpr::ellipsis()
}

fn merge_same_key(x: &TypeExpr, y: &TypeExpr) -> TypeExpr {
    if x == y {
        return x.clone();
    }
    if x.is(base::CALLABLE) {
        return TypeExpr::raw(
            base::CALLABLE,
            vec![merge_params(&x.args[0], &y.args[0]), merge_arg(&x.args[1], &y.args[1])],
        );
    }
    TypeExpr::raw(
        x.base.clone(),
        x.args.iter().zip(&y.args).map(|(a, b)| merge_arg(a, b)).collect(),
    )
}

/// Joins already-normalized members into one normalized value.
pub(crate) fn join_all(members: impl IntoIterator<Item = TypeExpr>) -> TypeExpr {
    let mut acc: Vec<TypeExpr> = Vec::new();
    for m in members {
        let flat: Vec<TypeExpr> = if m.is_union() { m.args } else { vec![m] };
        for f in flat {
            if f.is_any() {
                return TypeExpr::any();
            }
            match acc.iter_mut().find(|x| same_key(x, &f)) {
                Some(slot) => *slot = merge_same_key(slot, &f),
                None => acc.push(f),
            }
        }
    }
    match acc.len() {
        0 => TypeExpr::any(),
        1 => acc.pop().unwrap(),
        _ => {
            let mut keyed: Vec<(String, TypeExpr)> =
                acc.into_iter().map(|m| (m.render(), m)).collect();
            keyed.sort_by(|a, b| a.0.cmp(&b.0));
            keyed.dedup_by(|a, b| a.0 == b.0);
            TypeExpr::raw(base::UNION, keyed.into_iter().map(|(_, m)| m).collect())
        }
    }
}

/// Least upper bound of two normalized values.
///
/// `any` absorbs at the top level but acts as a placeholder inside the
/// arguments of same-shaped generics, so `merge(list[Any], list[int])` is
/// `list[int]`.
pub fn merge(a: &TypeExpr, b: &TypeExpr) -> TypeExpr {
    if a == b {
        return a.clone();
    }
    if a.is_any() || b.is_any() {
        return TypeExpr::any();
    }
    join_all([a.clone(), b.clone()])
}

/// Collapses a value that exceeds either cap to `any`.
///
/// Collapsing the whole value (rather than only the offending subtree) keeps
/// the lattice finite: an argument-level `any` is a placeholder that later
/// evidence would overwrite, which could otherwise cycle forever.
pub fn widen(t: &TypeExpr, caps: Caps) -> TypeExpr {
    if t.max_union_width() > caps.union_cap || t.depth() > caps.depth_cap {
        TypeExpr::any()
    } else {
        t.clone()
    }
}

fn arg_subsumes(x: &TypeExpr, y: &TypeExpr) -> bool {
    y.is_any() || subsumes(x, y)
}

fn params_subsume(x: &TypeExpr, y: &TypeExpr) -> bool {
    if x == y || x.is(base::ELLIPSIS) {
        return true;
    }
    x.is(base::TUPLE)
        && y.is(base::TUPLE)
        && x.args.len() == y.args.len()
        && x.args.iter().zip(&y.args).all(|(a, b)| arg_subsumes(a, b))
}

/// Structural subsumption: every value-type admitted by `y` is admitted by `x`.
pub fn subsumes(x: &TypeExpr, y: &TypeExpr) -> bool {
    if x == y || x.is_any() {
        return true;
    }
    if y.is_union() {
        return y.args.iter().all(|m| subsumes(x, m));
    }
    if x.is_union() {
        return x.args.iter().any(|m| subsumes(m, y));
    }
    if !same_key(x, y) {
        return false;
    }
    if x.is(base::CALLABLE) {
        return params_subsume(&x.args[0], &y.args[0]) && arg_subsumes(&x.args[1], &y.args[1]);
    }
    x.args.iter().zip(&y.args).all(|(a, b)| arg_subsumes(a, b))
}
