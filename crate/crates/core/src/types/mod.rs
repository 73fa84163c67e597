//! Canonical type values and the lattice operations over them.
//!
//! A [`TypeExpr`] is a base name plus an ordered list of argument types.
//! Every value handed out by this module is normalized: typing aliases are
//! lowered, unions are flat, deduplicated and sorted by rendered form, and a
//! union never holds two members with the same shape key (same base and
//! arity), since such members are merged argwise instead.

mod lattice;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use lattice::{merge, subsumes, widen};
pub use parse::{parse_type, TypeParseError};

/// Well-known base names.
pub mod base {
    pub const INT: &str = "int";
    pub const FLOAT: &str = "float";
    pub const STR: &str = "str";
    pub const BOOL: &str = "bool";
    pub const BYTES: &str = "bytes";
    pub const LIST: &str = "list";
    pub const TUPLE: &str = "tuple";
    pub const DICT: &str = "dict";
    pub const SET: &str = "set";
    pub const FROZENSET: &str = "frozenset";
    pub const CALLABLE: &str = "callable";
    pub const GENERATOR: &str = "generator";
    pub const UNION: &str = "union";
    pub const NONE: &str = "none";
    pub const ANY: &str = "any";
    pub const TYPE: &str = "type";
    /// Variadic marker: last argument of a homogeneous tuple, or the
    /// parameter list of a callable with unknown signature.
    pub const ELLIPSIS: &str = "...";

    pub const ELEMENTARY: [&str; 5] = [INT, FLOAT, STR, BOOL, BYTES];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub union_cap: usize,
    pub depth_cap: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            union_cap: 8,
            depth_cap: 6,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeExpr {
    base: String,
    args: Vec<TypeExpr>,
}

impl TypeExpr {
    /// Builds a raw, possibly unnormalized value. Call [`TypeExpr::normalize`]
    /// before handing it to lattice operations.
    pub fn raw(base: impl Into<String>, args: Vec<TypeExpr>) -> Self {
        TypeExpr {
            base: base.into(),
            args,
        }
    }

    pub fn simple(base: impl Into<String>) -> Self {
        TypeExpr::raw(base, Vec::new())
    }

    pub fn any() -> Self {
        TypeExpr::simple(base::ANY)
    }

    pub fn none() -> Self {
        TypeExpr::simple(base::NONE)
    }

    pub fn int() -> Self {
        TypeExpr::simple(base::INT)
    }

    pub fn float() -> Self {
        TypeExpr::simple(base::FLOAT)
    }

    pub fn str() -> Self {
        TypeExpr::simple(base::STR)
    }

    pub fn bool() -> Self {
        TypeExpr::simple(base::BOOL)
    }

    pub fn bytes() -> Self {
        TypeExpr::simple(base::BYTES)
    }

    pub fn ellipsis() -> Self {
        TypeExpr::simple(base::ELLIPSIS)
    }

    pub fn list(elem: TypeExpr) -> Self {
        TypeExpr::raw(base::LIST, vec![elem])
    }

    pub fn set(elem: TypeExpr) -> Self {
        TypeExpr::raw(base::SET, vec![elem])
    }

    pub fn dict(key: TypeExpr, value: TypeExpr) -> Self {
        TypeExpr::raw(base::DICT, vec![key, value])
    }

    pub fn tuple(items: Vec<TypeExpr>) -> Self {
        TypeExpr::raw(base::TUPLE, items)
    }

    /// `tuple[elem, ...]`
    pub fn tuple_of(elem: TypeExpr) -> Self {
        TypeExpr::raw(base::TUPLE, vec![elem, TypeExpr::ellipsis()])
    }

    pub fn generator(elem: TypeExpr) -> Self {
        TypeExpr::raw(base::GENERATOR, vec![elem])
    }

    pub fn callable(params: Option<Vec<TypeExpr>>, ret: TypeExpr) -> Self {
        let params = match params {
            Some(p) => TypeExpr::tuple(p),
            None => TypeExpr::ellipsis(),
        };
        TypeExpr::raw(base::CALLABLE, vec![params, ret])
    }

    /// Normalized union of the given members.
    pub fn union(members: impl IntoIterator<Item = TypeExpr>) -> Self {
        lattice::join_all(members.into_iter().map(|m| m.normalize()))
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn args(&self) -> &[TypeExpr] {
        &self.args
    }

    pub fn arg(&self, i: usize) -> Option<&TypeExpr> {
        self.args.get(i)
    }

    pub fn is(&self, name: &str) -> bool {
        self.base == name
    }

    pub fn is_any(&self) -> bool {
        self.base == base::ANY
    }

    pub fn is_none(&self) -> bool {
        self.base == base::NONE
    }

    pub fn is_union(&self) -> bool {
        self.base == base::UNION
    }

    pub fn is_elementary(&self) -> bool {
        base::ELEMENTARY.contains(&self.base.as_str())
    }

    /// Members of a union, or the value itself.
    pub fn members(&self) -> &[TypeExpr] {
        if self.is_union() {
            &self.args
        } else {
            std::slice::from_ref(self)
        }
    }

    /// True for bases that name a class defined outside the builtin grammar.
    pub fn is_user_defined(&self) -> bool {
        !matches!(
            self.base.as_str(),
            base::INT
                | base::FLOAT
                | base::STR
                | base::BOOL
                | base::BYTES
                | base::LIST
                | base::TUPLE
                | base::DICT
                | base::SET
                | base::FROZENSET
                | base::CALLABLE
                | base::GENERATOR
                | base::UNION
                | base::NONE
                | base::ANY
                | base::TYPE
                | base::ELLIPSIS
        )
    }

    pub fn contains_any(&self) -> bool {
        self.is_any() || self.args.iter().any(TypeExpr::contains_any)
    }

    /// Nesting depth; a value without arguments has depth 1.
    pub fn depth(&self) -> usize {
        1 + self.args.iter().map(TypeExpr::depth).max().unwrap_or(0)
    }

    /// Size of the largest union anywhere inside this value.
    pub fn max_union_width(&self) -> usize {
        let own = if self.is_union() { self.args.len() } else { 0 };
        self.args
            .iter()
            .map(TypeExpr::max_union_width)
            .max()
            .unwrap_or(0)
            .max(own)
    }

    pub fn normalize(&self) -> TypeExpr {
        lattice::normalize(self)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match self.base.as_str() {
            base::ANY => out.push_str("Any"),
            base::NONE => out.push_str("None"),
            base::UNION => {
                out.push_str("Union[");
                self.render_args(&self.args, out);
                out.push(']');
            }
            base::CALLABLE if self.args.len() == 2 => {
                out.push_str("Callable[");
                let params = &self.args[0];
                if params.is(base::TUPLE) {
                    out.push('[');
                    self.render_args(&params.args, out);
                    out.push(']');
                } else {
                    params.render_into(out);
                }
                out.push_str(", ");
                self.args[1].render_into(out);
                out.push(']');
            }
            base::GENERATOR if self.args.len() == 1 => {
                out.push_str("Generator[");
                self.args[0].render_into(out);
                out.push_str(", None, None]");
            }
            base::TUPLE if self.args.is_empty() => out.push_str("tuple[()]"),
            _ => {
                out.push_str(&self.base);
                if !self.args.is_empty() {
                    out.push('[');
                    self.render_args(&self.args, out);
                    out.push(']');
                }
            }
        }
    }

    fn render_args(&self, args: &[TypeExpr], out: &mut String) {
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            a.render_into(out);
        }
    }

    /// Replaces every base accepted by `f` with the returned value.
    /// The result is normalized.
    pub fn substitute(&self, f: &dyn Fn(&str) -> Option<TypeExpr>) -> TypeExpr {
        fn go(t: &TypeExpr, f: &dyn Fn(&str) -> Option<TypeExpr>) -> TypeExpr {
            if t.args.is_empty() {
                if let Some(r) = f(&t.base) {
                    return r;
                }
            }
            TypeExpr::raw(t.base.clone(), t.args.iter().map(|a| go(a, f)).collect())
        }
        go(self, f).normalize()
    }
}

/// `base_of`: the outermost constructor name.
pub fn base_of(t: &TypeExpr) -> &str {
    t.base()
}

/// Last dotted component of a (possibly qualified) base name.
pub fn short_name(base: &str) -> &str {
    base.rsplit('.').next().unwrap_or(base)
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl fmt::Debug for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TypeExpr({})", self.render())
    }
}

impl Serialize for TypeExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for TypeExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_type(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfidenceTier {
    Low,
    Mid,
    High,
}

impl ConfidenceTier {
    pub fn as_str(self) -> &'static str {
        match self {
            ConfidenceTier::Low => "low",
            ConfidenceTier::Mid => "mid",
            ConfidenceTier::High => "high",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> TypeExpr {
        parse_type(s).unwrap()
    }

    #[test]
    fn renders_nested_generics() {
        let d = TypeExpr::dict(TypeExpr::str(), TypeExpr::list(TypeExpr::str())).normalize();
        assert_eq!(d.render(), "dict[str, list[str]]");
        assert_eq!(TypeExpr::none().render(), "None");
        assert_eq!(TypeExpr::any().render(), "Any");
    }

    #[test]
    fn union_renders_sorted() {
        let u = TypeExpr::union([TypeExpr::str(), TypeExpr::int()]);
        assert_eq!(u.render(), "Union[int, str]");
    }

    #[test]
    fn base_of_examples() {
        assert_eq!(base_of(&t("list[str]")), "list");
        assert_eq!(base_of(&t("int")), "int");
        assert_eq!(base_of(&t("dict[str, list[int]]")), "dict");
    }

    #[test]
    fn special_renderings() {
        assert_eq!(t("Callable[[int, str], bool]").render(), "Callable[[int, str], bool]");
        assert_eq!(t("Callable[..., int]").render(), "Callable[..., int]");
        assert_eq!(t("Generator[int, None, None]").render(), "Generator[int, None, None]");
        assert_eq!(t("Tuple[()]").render(), "tuple[()]");
        assert_eq!(t("Tuple").render(), "tuple[Any, ...]");
    }

    #[test]
    fn depth_and_width() {
        assert_eq!(t("int").depth(), 1);
        assert_eq!(t("dict[str, list[int]]").depth(), 3);
        assert_eq!(t("list[Union[int, str, bytes]]").max_union_width(), 3);
    }

    #[test]
    fn confidence_order() {
        assert!(ConfidenceTier::High > ConfidenceTier::Mid);
        assert!(ConfidenceTier::Mid > ConfidenceTier::Low);
    }
}
