//! Naming-convention fallback for slots nothing else could type.

use crate::types::{short_name, TypeExpr};

/// Proposes a type from a slot name: first a class in scope whose name the
/// slot name matches, then a fixed table of common conventions.
pub fn name_heuristic(name: &str, in_scope: &[String]) -> Option<TypeExpr> {
    let name = name.trim_start_matches('_');
    if name.is_empty() {
        return None;
    }
    class_match(name, in_scope).or_else(|| convention(name))
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| *c != '_').flat_map(char::to_lowercase).collect()
}

fn class_match(name: &str, in_scope: &[String]) -> Option<TypeExpr> {
    let n = squash(name);
    let mut classes: Vec<&String> = in_scope.iter().collect();
    classes.sort();
    classes.dedup();
    if let Some(c) = classes.iter().find(|c| squash(short_name(c)) == n) {
        return Some(TypeExpr::simple(c.as_str()));
    }
    let subs: Vec<&&String> = classes
        .iter()
        .filter(|c| {
            let s = squash(short_name(c));
            s.len() >= 3 && n.contains(&s)
        })
        .collect();
    match subs.as_slice() {
        [only] => Some(TypeExpr::simple(only.as_str())),
        _ => None,
    }
}

fn convention(name: &str) -> Option<TypeExpr> {
    let n = name.to_lowercase();
    let pre = |p: &[&str]| p.iter().any(|p| n.starts_with(p));
    let suf = |s: &[&str]| s.iter().any(|s| n.ends_with(s));
    if pre(&["is_", "has_", "should_"]) {
        return Some(TypeExpr::bool());
    }
    if suf(&["_count", "_len", "_size", "_idx", "_index"]) || pre(&["num_", "n_"]) {
        return Some(TypeExpr::int());
    }
    if suf(&["_name", "_path", "_str", "_text", "_msg"]) {
        return Some(TypeExpr::str());
    }
    if suf(&["_list", "_items"]) {
        return Some(TypeExpr::list(TypeExpr::any()).normalize());
    }
    if suf(&["_map", "_dict"]) {
        return Some(TypeExpr::dict(TypeExpr::any(), TypeExpr::any()).normalize());
    }
    if suf(&["_set"]) {
        return Some(TypeExpr::set(TypeExpr::any()).normalize());
    }
    None
}
