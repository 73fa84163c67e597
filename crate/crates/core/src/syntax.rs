//! Shared views over the Python syntax tree: statement walking, qualified
//! names, and annotation sites. Stripping, indexing and inference all name
//! slots through these helpers so their coordinates agree.

use std::ops::Range;

use rustpython_parser::ast::{self, Expr, Ranged, Stmt};

use crate::slot::{SlotKind, MODULE_SCOPE, RETURN_NAME};
use crate::source::SourceFile;
use crate::types::{parse_type, TypeExpr, TypeParseError};

/// A function definition, sync or async.
#[derive(Clone, Copy)]
pub struct FnDef<'a> {
    pub name: &'a str,
    pub args: &'a ast::Arguments,
    pub body: &'a [Stmt],
    pub decorators: &'a [Expr],
    pub returns: Option<&'a Expr>,
    pub start: usize,
}

impl<'a> FnDef<'a> {
    pub fn of(stmt: &'a Stmt) -> Option<FnDef<'a>> {
        match stmt {
            Stmt::FunctionDef(f) => Some(FnDef {
                name: f.name.as_str(),
                args: &f.args,
                body: &f.body,
                decorators: &f.decorator_list,
                returns: f.returns.as_deref(),
                start: f.range.start().into(),
            }),
            Stmt::AsyncFunctionDef(f) => Some(FnDef {
                name: f.name.as_str(),
                args: &f.args,
                body: &f.body,
                decorators: &f.decorator_list,
                returns: f.returns.as_deref(),
                start: f.range.start().into(),
            }),
            _ => None,
        }
    }

    pub fn has_decorator(&self, name: &str) -> bool {
        self.decorators.iter().any(|d| decorator_name(d) == Some(name))
    }

    /// Positional parameters in order, including the receiver.
    pub fn positional(&self) -> impl Iterator<Item = &'a ast::ArgWithDefault> {
        self.args.posonlyargs.iter().chain(self.args.args.iter())
    }

    /// The name bound to the instance or class, for methods.
    pub fn receiver(&self, in_class: bool) -> Option<&'a str> {
        if !in_class || self.has_decorator("staticmethod") {
            return None;
        }
        self.positional().next().map(|a| a.def.arg.as_str())
    }
}

/// Last dotted component of a decorator expression, ignoring call arguments.
pub fn decorator_name(d: &Expr) -> Option<&str> {
    match d {
        Expr::Name(n) => Some(n.id.as_str()),
        Expr::Attribute(a) => Some(a.attr.as_str()),
        Expr::Call(c) => decorator_name(&c.func),
        _ => None,
    }
}

/// Dotted text of a `Name` / `Attribute` chain.
pub fn dotted_name(e: &Expr) -> Option<String> {
    match e {
        Expr::Name(n) => Some(n.id.to_string()),
        Expr::Attribute(a) => dotted_name(&a.value).map(|p| format!("{p}.{}", a.attr)),
        _ => None,
    }
}

pub fn join_qual(parent: &str, name: &str) -> String {
    if parent == MODULE_SCOPE {
        name.to_string()
    } else {
        format!("{parent}.{name}")
    }
}

/// Nested statement lists directly owned by `stmt`.
pub fn child_bodies(stmt: &Stmt) -> Vec<&[Stmt]> {
    match stmt {
        Stmt::FunctionDef(f) => vec![&f.body],
        Stmt::AsyncFunctionDef(f) => vec![&f.body],
        Stmt::ClassDef(c) => vec![&c.body],
        Stmt::For(s) => vec![&s.body, &s.orelse],
        Stmt::AsyncFor(s) => vec![&s.body, &s.orelse],
        Stmt::While(s) => vec![&s.body, &s.orelse],
        Stmt::If(s) => vec![&s.body, &s.orelse],
        Stmt::With(s) => vec![&s.body],
        Stmt::AsyncWith(s) => vec![&s.body],
        Stmt::Match(s) => s.cases.iter().map(|c| c.body.as_slice()).collect(),
        Stmt::Try(s) => try_bodies(&s.body, &s.handlers, &s.orelse, &s.finalbody),
        Stmt::TryStar(s) => try_bodies(&s.body, &s.handlers, &s.orelse, &s.finalbody),
        _ => Vec::new(),
    }
}

fn try_bodies<'a>(
    body: &'a [Stmt],
    handlers: &'a [ast::ExceptHandler],
    orelse: &'a [Stmt],
    finalbody: &'a [Stmt],
) -> Vec<&'a [Stmt]> {
    let mut out = vec![body];
    for h in handlers {
        let ast::ExceptHandler::ExceptHandler(h) = h;
        out.push(&h.body);
    }
    out.push(orelse);
    out.push(finalbody);
    out
}

/// Visits every statement in source order, descending into all nested
/// bodies including function and class definitions.
pub fn walk_stmts<'a>(body: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in body {
        f(s);
        for child in child_bodies(s) {
            walk_stmts(child, f);
        }
    }
}

/// Sub-expressions of `e`, excluding lambda bodies.
pub fn expr_children(e: &Expr) -> Vec<&Expr> {
    match e {
        Expr::BoolOp(x) => x.values.iter().collect(),
        Expr::NamedExpr(x) => vec![&x.target, &x.value],
        Expr::BinOp(x) => vec![&x.left, &x.right],
        Expr::UnaryOp(x) => vec![&x.operand],
        Expr::Lambda(_) => Vec::new(),
        Expr::IfExp(x) => vec![&x.test, &x.body, &x.orelse],
        Expr::Dict(x) => x.keys.iter().flatten().chain(&x.values).collect(),
        Expr::Set(x) => x.elts.iter().collect(),
        Expr::ListComp(x) => comp_children(&x.elt, None, &x.generators),
        Expr::SetComp(x) => comp_children(&x.elt, None, &x.generators),
        Expr::GeneratorExp(x) => comp_children(&x.elt, None, &x.generators),
        Expr::DictComp(x) => comp_children(&x.key, Some(&x.value), &x.generators),
        Expr::Await(x) => vec![&x.value],
        Expr::Yield(x) => x.value.iter().map(|v| &**v).collect(),
        Expr::YieldFrom(x) => vec![&x.value],
        Expr::Compare(x) => std::iter::once(&*x.left).chain(&x.comparators).collect(),
        Expr::Call(x) => std::iter::once(&*x.func)
            .chain(&x.args)
            .chain(x.keywords.iter().map(|k| &k.value))
            .collect(),
        Expr::FormattedValue(x) => std::iter::once(&*x.value).chain(x.format_spec.as_deref()).collect(),
        Expr::JoinedStr(x) => x.values.iter().collect(),
        Expr::Attribute(x) => vec![&x.value],
        Expr::Subscript(x) => vec![&x.value, &x.slice],
        Expr::Starred(x) => vec![&x.value],
        Expr::List(x) => x.elts.iter().collect(),
        Expr::Tuple(x) => x.elts.iter().collect(),
        Expr::Slice(x) => [&x.lower, &x.upper, &x.step].into_iter().flatten().map(|b| &**b).collect(),
        Expr::Constant(_) | Expr::Name(_) => Vec::new(),
    }
}

fn comp_children<'a>(elt: &'a Expr, value: Option<&'a Expr>, gens: &'a [ast::Comprehension]) -> Vec<&'a Expr> {
    let mut out = vec![elt];
    out.extend(value);
    for g in gens {
        out.push(&g.target);
        out.push(&g.iter);
        out.extend(&g.ifs);
    }
    out
}

/// Expressions held directly by a statement (not by nested bodies).
pub fn stmt_exprs(s: &Stmt) -> Vec<&Expr> {
    match s {
        Stmt::FunctionDef(_) | Stmt::AsyncFunctionDef(_) | Stmt::ClassDef(_) => Vec::new(),
        Stmt::Return(x) => x.value.iter().map(|v| &**v).collect(),
        Stmt::Delete(x) => x.targets.iter().collect(),
        Stmt::Assign(x) => x.targets.iter().chain(std::iter::once(&*x.value)).collect(),
        Stmt::AugAssign(x) => vec![&x.target, &x.value],
        Stmt::AnnAssign(x) => std::iter::once(&*x.target).chain(x.value.as_deref()).collect(),
        Stmt::For(x) => vec![&x.target, &x.iter],
        Stmt::AsyncFor(x) => vec![&x.target, &x.iter],
        Stmt::While(x) => vec![&x.test],
        Stmt::If(x) => vec![&x.test],
        Stmt::With(x) => x.items.iter().flat_map(|i| std::iter::once(&i.context_expr).chain(i.optional_vars.as_deref())).collect(),
        Stmt::AsyncWith(x) => x.items.iter().flat_map(|i| std::iter::once(&i.context_expr).chain(i.optional_vars.as_deref())).collect(),
        Stmt::Match(x) => vec![&x.subject],
        Stmt::Raise(x) => x.exc.iter().chain(x.cause.iter()).map(|v| &**v).collect(),
        Stmt::Assert(x) => std::iter::once(&*x.test).chain(x.msg.as_deref()).collect(),
        Stmt::Expr(x) => vec![&x.value],
        _ => Vec::new(),
    }
}

fn expr_has_yield(e: &Expr) -> bool {
    matches!(e, Expr::Yield(_) | Expr::YieldFrom(_)) || expr_children(e).into_iter().any(expr_has_yield)
}

/// Whether a function body is a generator: a `yield` outside nested
/// function and class definitions.
pub fn contains_yield(body: &[Stmt]) -> bool {
    body.iter().any(|s| {
        if matches!(s, Stmt::FunctionDef(_) | Stmt::AsyncFunctionDef(_) | Stmt::ClassDef(_)) {
            return false;
        }
        stmt_exprs(s).into_iter().any(expr_has_yield) || child_bodies(s).into_iter().any(contains_yield)
    })
}

/// True for bodies that only hold a docstring, `pass` or `...`.
pub fn is_stub_body(body: &[Stmt]) -> bool {
    body.iter().all(|s| match s {
        Stmt::Pass(_) => true,
        Stmt::Expr(e) => matches!(&*e.value, Expr::Constant(_)),
        _ => false,
    })
}

/// Parses an annotation expression into a type. String annotations are
/// parsed from their contents.
pub fn annotation_type(src: &SourceFile, ann: &Expr) -> Result<TypeExpr, TypeParseError> {
    parse_type(&annotation_text(src, ann))
}

pub fn annotation_text(src: &SourceFile, ann: &Expr) -> String {
    if let Expr::Constant(c) = ann {
        if let ast::Constant::Str(s) = &c.value {
            return s.clone();
        }
    }
    let r = ann.range();
    src.text[usize::from(r.start())..usize::from(r.end())].to_string()
}

/// One annotation in the source and the slot it describes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotationSite {
    pub qualname: String,
    pub kind: SlotKind,
    pub name: String,
    pub line: usize,
    pub col: usize,
    pub annotation: String,
    /// Byte range to delete so the code reads as if never annotated.
    pub remove: Range<usize>,
    /// Class-body annotation whose presence changes runtime behavior
    /// (dataclass, NamedTuple and friends).
    pub runtime: bool,
}

const RUNTIME_BASES: [&str; 5] = ["NamedTuple", "TypedDict", "BaseModel", "Protocol", "Enum"];
const RUNTIME_DECORATORS: [&str; 3] = ["dataclass", "attrs", "define"];

struct SiteWalker<'a> {
    src: &'a SourceFile,
    out: Vec<AnnotationSite>,
}

#[derive(Clone)]
struct Ctx<'a> {
    qual: String,
    /// Qualname of the class whose methods we are in, if any.
    class: Option<String>,
    receiver: Option<&'a str>,
    /// Directly inside a class body.
    class_body: Option<(String, bool)>,
}

impl<'a> SiteWalker<'a> {
    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, qualname: String, kind: SlotKind, name: &str, at: usize, ann: &Expr, remove: Range<usize>, runtime: bool) {
        let (line, col) = self.src.position(at);
        self.out.push(AnnotationSite {
            qualname,
            kind,
            name: name.to_string(),
            line,
            col,
            annotation: annotation_text(self.src, ann),
            remove,
            runtime,
        });
    }

    /// Extends `[start, end)` so parentheses opened between `start` and the
    /// annotation are closed inside the removed span.
    fn removal(&self, start: usize, ann: &Expr) -> Range<usize> {
        let text = self.src.text.as_bytes();
        let ann_start = usize::from(ann.range().start());
        let mut end = usize::from(ann.range().end());
        let mut open = text[start..ann_start].iter().filter(|&&b| b == b'(').count();
        while open > 0 {
            let mut j = end;
            while j < text.len() && (text[j] as char).is_whitespace() {
                j += 1;
            }
            if j < text.len() && text[j] == b')' {
                end = j + 1;
                open -= 1;
            } else {
                break;
            }
        }
        start..end
    }

    fn body(&mut self, body: &'a [Stmt], ctx: &Ctx<'a>) {
        for s in body {
            self.stmt(s, ctx);
        }
    }

    fn stmt(&mut self, s: &'a Stmt, ctx: &Ctx<'a>) {
        if let Some(f) = FnDef::of(s) {
            self.function(f, ctx);
            return;
        }
        match s {
            Stmt::ClassDef(c) => {
                let qual = join_qual(&ctx.qual, c.name.as_str());
                let runtime = c.bases.iter().any(|b| {
                    decorator_name(b).is_some_and(|n| RUNTIME_BASES.contains(&n))
                }) || c
                    .decorator_list
                    .iter()
                    .any(|d| decorator_name(d).is_some_and(|n| RUNTIME_DECORATORS.contains(&n)));
                let inner = Ctx {
                    qual: qual.clone(),
                    class: Some(qual.clone()),
                    receiver: None,
                    class_body: Some((qual, runtime)),
                };
                self.body(&c.body, &inner);
            }
            Stmt::AnnAssign(a) => {
                let target_end = usize::from(a.target.range().end());
                let remove = self.removal(target_end, &a.annotation);
                let at = usize::from(a.target.range().start());
                match &*a.target {
                    Expr::Name(n) => match &ctx.class_body {
                        Some((cls, runtime)) => self.push(
                            cls.clone(),
                            SlotKind::Attribute,
                            n.id.as_str(),
                            at,
                            &a.annotation,
                            remove,
                            *runtime,
                        ),
                        None => self.push(
                            ctx.qual.clone(),
                            SlotKind::Variable,
                            n.id.as_str(),
                            at,
                            &a.annotation,
                            remove,
                            false,
                        ),
                    },
                    Expr::Attribute(attr) => {
                        let on_receiver = matches!(&*attr.value, Expr::Name(n)
                            if Some(n.id.as_str()) == ctx.receiver);
                        match (&ctx.class, on_receiver) {
                            (Some(cls), true) => self.push(
                                cls.clone(),
                                SlotKind::Attribute,
                                attr.attr.as_str(),
                                at,
                                &a.annotation,
                                remove,
                                false,
                            ),
                            // annotation on an arbitrary object: stripped, no slot
                            _ => self.push(
                                String::new(),
                                SlotKind::Variable,
                                "",
                                at,
                                &a.annotation,
                                remove,
                                false,
                            ),
                        }
                    }
                    _ => self.push(String::new(), SlotKind::Variable, "", at, &a.annotation, remove, false),
                }
            }
            _ => {
                let inner = Ctx {
                    class_body: None,
                    ..ctx.clone()
                };
                for child in child_bodies(s) {
                    self.body(child, if ctx.class_body.is_some() { &inner } else { ctx });
                }
            }
        }
    }

    fn function(&mut self, f: FnDef<'a>, ctx: &Ctx<'a>) {
        let qual = join_qual(&ctx.qual, f.name);
        let in_class = ctx.class_body.is_some();
        let receiver = f.receiver(in_class);
        let a = f.args;
        let params = a
            .posonlyargs
            .iter()
            .chain(&a.args)
            .chain(&a.kwonlyargs)
            .map(|p| &p.def)
            .chain(a.vararg.as_deref())
            .chain(a.kwarg.as_deref());
        for p in params {
            if let Some(ann) = &p.annotation {
                let start = usize::from(p.range.start());
                let name_end = start + p.arg.as_str().len();
                let remove = self.removal(name_end, ann);
                if Some(p.arg.as_str()) == receiver {
                    self.push(String::new(), SlotKind::Argument, "", start, ann, remove, false);
                } else {
                    self.push(qual.clone(), SlotKind::Argument, p.arg.as_str(), start, ann, remove, false);
                }
            }
        }
        if let Some(ret) = f.returns {
            let ann_start = usize::from(ret.range().start());
            let head = &self.src.text[f.start..ann_start];
            if let Some(arrow) = head.rfind("->") {
                let mut start = f.start + arrow;
                while start > f.start && self.src.text.as_bytes()[start - 1] == b' ' {
                    start -= 1;
                }
                let remove = self.removal(start, ret);
                self.push(qual.clone(), SlotKind::Return, RETURN_NAME, f.start, ret, remove, false);
            }
        }
        let inner = Ctx {
            qual,
            class: if in_class { ctx.class.clone() } else { None },
            receiver,
            class_body: None,
        };
        self.body(f.body, &inner);
    }
}

/// Every annotation in the file, in source order. Sites with an empty
/// `name` are annotations that do not describe a slot (for example on the
/// receiver or on a foreign attribute); they are still removed when
/// stripping.
pub fn annotation_sites(suite: &[Stmt], src: &SourceFile) -> Vec<AnnotationSite> {
    let mut w = SiteWalker { src, out: Vec::new() };
    let ctx = Ctx {
        qual: MODULE_SCOPE.to_string(),
        class: None,
        receiver: None,
        class_body: None,
    };
    w.body(suite, &ctx);
    w.out
}

/// Deletes every site's annotation. Line breaks inside a removed span are
/// kept as explicit continuations so all later lines keep their numbers.
pub fn strip_sites(text: &str, sites: &[AnnotationSite]) -> String {
    let mut spans: Vec<&Range<usize>> = sites.iter().map(|s| &s.remove).collect();
    spans.sort_by_key(|r| std::cmp::Reverse(r.start));
    let mut out = text.to_string();
    let mut floor = usize::MAX;
    for r in spans {
        if r.end > floor {
            continue;
        }
        let breaks = text[r.clone()].matches('\n').count();
        out.replace_range(r.clone(), &" \\\n".repeat(breaks));
        floor = r.start;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::parse_suite;

    fn sites(code: &str) -> Vec<AnnotationSite> {
        let src = SourceFile::new("t.py", code);
        let suite = parse_suite(&src).unwrap();
        annotation_sites(&suite, &src)
    }

    #[test]
    fn finds_param_and_return() {
        let s = sites("def f(n: int) -> str:\n    return str(n)\n");
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].kind, s[0].name.as_str(), s[0].annotation.as_str()), (SlotKind::Argument, "n", "int"));
        assert_eq!((s[1].kind, s[1].name.as_str(), s[1].annotation.as_str()), (SlotKind::Return, RETURN_NAME, "str"));
        assert_eq!(s[1].qualname, "f");
    }

    #[test]
    fn methods_and_attributes() {
        let code = "class C:\n    size: int = 0\n    def m(self, x: 'User') -> None:\n        self.y: str = ''\n        z: float = 1.0\n";
        let s = sites(code);
        let got: Vec<(String, SlotKind, String)> =
            s.iter().map(|s| (s.qualname.clone(), s.kind, s.name.clone())).collect();
        assert_eq!(
            got,
            vec![
                ("C".into(), SlotKind::Attribute, "size".into()),
                ("C.m".into(), SlotKind::Argument, "x".into()),
                ("C.m".into(), SlotKind::Return, RETURN_NAME.into()),
                ("C".into(), SlotKind::Attribute, "y".into()),
                ("C.m".into(), SlotKind::Variable, "z".into()),
            ]
        );
        assert_eq!(s[1].annotation, "User");
    }

    #[test]
    fn removal_spans() {
        let code = "def f(a: (int), b: str = 'x') -> (bool):\n    pass\n";
        let src = SourceFile::new("t.py", code);
        let suite = parse_suite(&src).unwrap();
        let mut text = code.to_string();
        let mut s = annotation_sites(&suite, &src);
        s.sort_by_key(|s| std::cmp::Reverse(s.remove.start));
        for site in s {
            text.replace_range(site.remove, "");
        }
        assert_eq!(text, "def f(a, b = 'x'):\n    pass\n");
    }

    #[test]
    fn stripping_keeps_line_numbers() {
        let code = "x: Dict[\n    str, int\n] = {}\ny: int = 2\n";
        let src = SourceFile::new("t.py", code);
        let suite = parse_suite(&src).unwrap();
        let out = strip_sites(code, &annotation_sites(&suite, &src));
        assert_eq!(out.lines().count(), code.lines().count());
        assert!(out.ends_with("y = 2\n"), "{out}");
        assert!(parse_suite(&SourceFile::new("t.py", out.as_str())).is_ok());
    }

    #[test]
    fn yield_detection_skips_nested_defs() {
        let src = SourceFile::new("t.py", "def f():\n    def g():\n        yield 1\n    return g\ndef h():\n    if x:\n        y = (yield)\n");
        let suite = parse_suite(&src).unwrap();
        assert!(!contains_yield(FnDef::of(&suite[0]).unwrap().body));
        assert!(contains_yield(FnDef::of(&suite[1]).unwrap().body));
    }

    #[test]
    fn stub_bodies() {
        let src = SourceFile::new("t.py", "def f():\n    '''doc'''\n    ...\n");
        let suite = parse_suite(&src).unwrap();
        let f = FnDef::of(&suite[0]).unwrap();
        assert!(is_stub_body(f.body));
    }
}
