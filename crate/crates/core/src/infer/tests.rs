use std::collections::BTreeMap;

use crate::exec::Exec;
use crate::project::Project;

use super::{InferConfig, InferenceOutcome};

fn run(files: &[(&str, &str)]) -> InferenceOutcome {
    let p = Project::from_sources(None, files, Exec::Sequential);
    assert!(p.diagnostics.is_empty(), "{:?}", p.diagnostics);
    p.infer(&InferConfig::default())
}

/// Rendered type per slot id, for slots with a value.
fn types(out: &InferenceOutcome) -> BTreeMap<String, String> {
    out.slots
        .iter()
        .filter_map(|s| s.current.as_ref().map(|t| (s.slot_id.clone(), t.render())))
        .collect()
}

fn ty(out: &InferenceOutcome, id: &str) -> Option<String> {
    types(out).get(id).cloned()
}

const TRIGGER_DICT_SRC: &str = r#"from collections import defaultdict


def get_trigger_dict(seqs, maps):
    merged_map = defaultdict(list)
    for seq in seqs:
        for trigger in seq:
            merged_map[
                trigger.lower()
            ].append(trigger)

    for m in maps:
        for key, values in m.items():
            merged_map[
                key.lower()
            ].extend(values)

    return merged_map


TRIGGER_LISTS = [["ARRIVE", "DEPART"]]
TRIGGER_DICTS = [{"depart": ["leave", "fly"]}]

get_trigger_dict(TRIGGER_LISTS, TRIGGER_DICTS)
"#;

#[test]
fn trigger_dict() {
    let out = run(&[("atis_tables.py", TRIGGER_DICT_SRC)]);
    let f = "atis_tables::get_trigger_dict";
    assert_eq!(ty(&out, &format!("{f}::argument::seqs")).as_deref(), Some("list[list[str]]"));
    assert_eq!(
        ty(&out, &format!("{f}::argument::maps")).as_deref(),
        Some("list[dict[str, list[str]]]")
    );
    assert_eq!(
        ty(&out, &format!("{f}::return::<return>")).as_deref(),
        Some("dict[str, list[str]]")
    );
    assert_eq!(
        ty(&out, &format!("{f}::variable::merged_map")).as_deref(),
        Some("dict[str, list[str]]")
    );
    assert_eq!(ty(&out, &format!("{f}::variable::trigger")).as_deref(), Some("str"));
}

#[test]
fn branch_union() {
    let src = "def collect_items(flag):\n    items = []\n    if flag:\n        items.append(1)\n    else:\n        items.append(\"x\")\n    return items\n";
    let out = run(&[("m.py", src)]);
    assert_eq!(
        ty(&out, "m::collect_items::variable::items").as_deref(),
        Some("list[Union[int, str]]")
    );
    assert_eq!(
        ty(&out, "m::collect_items::return::<return>").as_deref(),
        Some("list[Union[int, str]]")
    );
    assert_eq!(ty(&out, "m::collect_items::argument::flag"), None);
    assert!(out.monotonicity_violations.is_empty(), "{:?}", out.monotonicity_violations);
}

#[test]
fn acyclic_chain_runs_each_module_once_in_dependency_order() {
    let out = run(&[
        ("a.py", "import b\nx = b.g()\n"),
        ("b.py", "import c\ndef g():\n    return c.h()\n"),
        ("c.py", "def h():\n    return 1\n"),
    ]);
    assert_eq!(out.invocations, vec!["c", "b", "a"]);
    assert_eq!(ty(&out, "a::<module>::variable::x").as_deref(), Some("int"));
}

#[test]
fn import_cycle_converges() {
    let out = run(&[
        ("a.py", "import b\nx = b.helper_from_b()\n"),
        ("b.py", "import a\ndef helper_from_b():\n    return 1\n"),
    ]);
    assert_eq!(ty(&out, "a::<module>::variable::x").as_deref(), Some("int"));
    let scc = out.sccs.iter().find(|s| s.cyclic).expect("cyclic scc");
    assert!(scc.converged);
    assert!(scc.passes <= 3, "{} passes", scc.passes);
}

#[test]
fn empty_project_has_no_slots() {
    let out = run(&[]);
    assert!(out.slots.is_empty());
    let out = run(&[("m.py", "pass\n")]);
    assert!(types(&out).is_empty());
}

#[test]
fn literal_rules() {
    let out = run(&[(
        "m.py",
        "x = []\nopts = {\"timeout\": 10, \"verbose\": False}\nmixed = [1, \"x\"]\nt = (1, \"a\")\nmsg = f\"{x}\"\nok = 1 < 2\n",
    )]);
    let t = types(&out);
    assert_eq!(t["m::<module>::variable::x"], "list[Any]");
    assert_eq!(t["m::<module>::variable::opts"], "dict[str, Union[bool, int]]");
    assert_eq!(t["m::<module>::variable::mixed"], "list[Union[int, str]]");
    assert_eq!(t["m::<module>::variable::t"], "tuple[int, str]");
    assert_eq!(t["m::<module>::variable::msg"], "str");
    assert_eq!(t["m::<module>::variable::ok"], "bool");
}

#[test]
fn identity_and_recursion() {
    let out = run(&[(
        "m.py",
        "def f(x):\n    return x\n\ndef r(n):\n    return r(n)\n\na = f(1)\nb = r(2)\n",
    )]);
    let t = types(&out);
    assert_eq!(t["m::f::argument::x"], "int");
    assert_eq!(t["m::f::return::<return>"], "int");
    assert_eq!(t["m::r::argument::n"], "int");
    assert!(!t.contains_key("m::r::return::<return>"));
    assert!(!t.contains_key("m::<module>::variable::b"));
}

#[test]
fn branches_merge() {
    let out = run(&[("m.py", "def f(c):\n    if c:\n        x = 1\n    else:\n        x = \"a\"\n    return x\n")]);
    assert_eq!(ty(&out, "m::f::variable::x").as_deref(), Some("Union[int, str]"));
    assert_eq!(ty(&out, "m::f::return::<return>").as_deref(), Some("Union[int, str]"));
}

#[test]
fn container_mutations() {
    let out = run(&[(
        "m.py",
        "s = set()\ns.add(3.0)\nxs = [1]\nxs.append(\"a\")\nd = {}\nd[\"k\"] = 1\ne = {}\ne.setdefault(\"k\", [])\nys = []\nys.extend(\"ab\")\n",
    )]);
    let t = types(&out);
    assert_eq!(t["m::<module>::variable::s"], "set[float]");
    assert_eq!(t["m::<module>::variable::xs"], "list[Union[int, str]]");
    assert_eq!(t["m::<module>::variable::d"], "dict[str, int]");
    assert_eq!(t["m::<module>::variable::e"], "dict[str, list[Any]]");
    assert_eq!(t["m::<module>::variable::ys"], "list[str]");
}

#[test]
fn use_before_assignment_is_any() {
    let out = run(&[("m.py", "def f():\n    y = x\n    x = 1\n    return y\n\nf()\n")]);
    let t = types(&out);
    assert_eq!(t["m::f::variable::x"], "int");
    assert!(!t.contains_key("m::f::variable::y"));
}

#[test]
fn call_sites_union_into_parameters() {
    let out = run(&[("m.py", "def f(a):\n    return [a]\n\nf(1)\nf(\"s\")\nf(None)\n")]);
    let t = types(&out);
    assert_eq!(t["m::f::argument::a"], "Union[None, int, str]");
    assert_eq!(t["m::f::return::<return>"], "list[Union[None, int, str]]");
}

#[test]
fn classes_attributes_and_methods() {
    let src = r#"class Stack:
    def __init__(self, name):
        self.name = name
        self.items = []

    def push(self, x):
        self.items.append(x)
        return self

    def size(self):
        return len(self.items)

    @property
    def top(self):
        return self.items[-1]


s = Stack("main")
s.push(3).push(4)
n = s.size()
t = s.top
"#;
    let out = run(&[("m.py", src)]);
    let t = types(&out);
    assert_eq!(t["m::Stack::attribute::name"], "str");
    assert_eq!(t["m::Stack::attribute::items"], "list[int]");
    assert_eq!(t["m::Stack.push::argument::x"], "int");
    assert_eq!(t["m::Stack.push::return::<return>"], "m.Stack");
    assert_eq!(t["m::Stack.__init__::return::<return>"], "None");
    assert_eq!(t["m::<module>::variable::s"], "m.Stack");
    assert_eq!(t["m::<module>::variable::n"], "int");
    assert_eq!(t["m::<module>::variable::t"], "int");
}

#[test]
fn inheritance_and_super() {
    let src = r#"class Base:
    def __init__(self, size):
        self.size = size

    def describe(self):
        return "base"


class Child(Base):
    def __init__(self, size, label):
        super().__init__(size)
        self.label = label


c = Child(3, "x")
d = c.describe()
k = c.size
"#;
    let out = run(&[("m.py", src)]);
    let t = types(&out);
    assert_eq!(t["m::Base.__init__::argument::size"], "int");
    assert_eq!(t["m::Child::attribute::label"], "str");
    assert_eq!(t["m::<module>::variable::d"], "str");
    assert_eq!(t["m::<module>::variable::k"], "int");
}

#[test]
fn cross_module_classes_and_from_imports() {
    let out = run(&[
        ("pkg/__init__.py", ""),
        ("pkg/models.py", "class User:\n    def __init__(self, name):\n        self.name = name\n"),
        ("pkg/service.py", "from .models import User\n\ndef make(name):\n    return User(name)\n"),
        ("main.py", "from pkg.service import make\n\nu = make(\"bob\")\nn = u.name\n"),
    ]);
    let t = types(&out);
    assert_eq!(t["pkg.service::make::return::<return>"], "pkg.models.User");
    assert_eq!(t["pkg.models::User.__init__::argument::name"], "str");
    assert_eq!(t["main::<module>::variable::n"], "str");
}

#[test]
fn uncalled_functions_are_swept_without_argument_evidence() {
    let out = run(&[("m.py", "def transform(x):\n    return x.to_dict()\n\ndef g(n=3):\n    return n + 1\n")]);
    let t = types(&out);
    assert!(!t.contains_key("m::transform::argument::x"));
    assert!(!t.contains_key("m::transform::return::<return>"));
    assert_eq!(t["m::g::argument::n"], "int");
    assert_eq!(t["m::g::return::<return>"], "int");
}

#[test]
fn generators_and_loops() {
    let src = "def gen(n):\n    for i in range(n):\n        yield str(i)\n\nfor w in gen(3):\n    pass\npairs = {k: v for k, v in enumerate([\"a\"])}\n";
    let out = run(&[("m.py", src)]);
    let t = types(&out);
    assert_eq!(t["m::gen::return::<return>"], "Generator[str, None, None]");
    assert_eq!(t["m::gen::variable::i"], "int");
    assert_eq!(t["m::<module>::variable::w"], "str");
    assert_eq!(t["m::<module>::variable::pairs"], "dict[int, str]");
}

#[test]
fn varargs_bind_element_types() {
    let out = run(&[("m.py", "def f(*args, **kw):\n    return args\n\nf(1, 2, a=\"x\")\n")]);
    let t = types(&out);
    assert_eq!(t["m::f::argument::args"], "int");
    assert_eq!(t["m::f::argument::kw"], "str");
    assert_eq!(t["m::f::return::<return>"], "tuple[int, ...]");
}

#[test]
fn annotations_seed_slots() {
    let out = run(&[("m.py", "from typing import List\n\ndef f(xs: List[int]) -> int:\n    total: int = 0\n    return total\n")]);
    let t = types(&out);
    assert_eq!(t["m::f::argument::xs"], "list[int]");
    assert_eq!(t["m::f::return::<return>"], "int");
    assert_eq!(t["m::f::variable::total"], "int");
}

#[test]
fn dataclass_fields_bind_constructor_arguments() {
    let src = "from dataclasses import dataclass\n\n@dataclass\nclass P:\n    x\n    y = 0\n\np = P(1.5, y=2)\n";
    let out = run(&[("m.py", src)]);
    let t = types(&out);
    assert_eq!(t["m::P::attribute::x"], "float");
    assert_eq!(t["m::P::attribute::y"], "int");
}

#[test]
fn extra_pass_after_convergence_changes_nothing() {
    let p = Project::from_sources(
        None,
        &[
            ("a.py", "import b\ndef fa(v):\n    return b.fb(v)\nx = fa(1)\n"),
            ("b.py", "import a\ndef fb(v):\n    return [v]\ny = a.x\n"),
        ],
        Exec::Sequential,
    );
    let mut e = super::Engine::new(&p.units, &p.index, InferConfig::default());
    let reports = e.run(&p.graph);
    assert!(reports.iter().all(|r| r.converged));
    assert!(!e.extra_pass(&p.graph));
}

#[test]
fn class_bodies_are_registered_once() {
    let src = "class A:\n    def __init__(self, rate=0.5):\n        self.rate = rate\n\n    def get(self):\n        return self.rate\n";
    let out = run(&[("m.py", src)]);
    let quals: Vec<&str> = out.slots.iter().map(|s| s.qualname.as_str()).collect();
    assert!(quals.iter().all(|q| q.starts_with('A')), "{quals:?}");
    assert_eq!(ty(&out, "m::A.__init__::argument::rate").as_deref(), Some("float"));
    assert_eq!(ty(&out, "m::A::attribute::rate").as_deref(), Some("float"));
}

#[test]
fn setdefault_result_aliases_the_entry() {
    let src = "def group(pairs):\n    out = {}\n    for k, v in pairs:\n        out.setdefault(k, []).append(v)\n    return out\n\ngroup([(\"a\", 1)])\n";
    let out = run(&[("m.py", src)]);
    assert_eq!(ty(&out, "m::group::return::<return>").as_deref(), Some("dict[str, list[int]]"));
}

#[test]
fn uncalled_methods_see_attributes_filled_later() {
    let lib = "class Bank:\n    def __init__(self):\n        self.accounts = {}\n\n    def open(self, owner):\n        self.accounts[owner] = 1.0\n\n    def owners(self):\n        return sorted(self.accounts)\n";
    let main = "from lib import Bank\nb = Bank()\nb.open(\"x\")\n";
    let out = run(&[("lib.py", lib), ("main.py", main)]);
    assert_eq!(ty(&out, "lib::Bank.owners::return::<return>").as_deref(), Some("list[str]"));
}
