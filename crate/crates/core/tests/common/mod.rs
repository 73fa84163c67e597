//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub mod criteria;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use typify_core::diag::Diagnostics;
use typify_core::eval::{score, strip_project, GroundTruthEntry, PredictionEntry, ScoreReport, DEFAULT_KS};
use typify_core::exec::Exec;
use typify_core::graph::{schedule, tarjan_scc};
use typify_core::pipeline::{run_pipeline, RunConfig, RunOutput};
use typify_core::retrieval::{build_index, DEFAULT_WINDOW};
use typify_core::types::{merge, parse_type, subsumes, widen, Caps, TypeExpr};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

/// Runs the pipeline without retrieval.
pub fn infer_usage_only(root: &Path) -> RunOutput {
    let mut cfg = RunConfig::new(root);
    cfg.retrieval_enabled = false;
    run_pipeline(&cfg, Exec::Sequential).expect("pipeline runs")
}

/// Rank-1 type and confidence for a slot, if predicted.
pub fn top(out: &RunOutput, qualname: &str, name: &str) -> Option<(String, String)> {
    out.predictions
        .iter()
        .find(|p| p.qualname == qualname && p.name == name)
        .and_then(|p| p.predictions.first())
        .map(|p| (p.ty.clone(), p.confidence.clone()))
}

// ---- lattice -------------------------------------------------------------

fn leaf() -> impl Strategy<Value = TypeExpr> {
    prop_oneof![
        Just(TypeExpr::int()),
        Just(TypeExpr::float()),
        Just(TypeExpr::str()),
        Just(TypeExpr::bool()),
        Just(TypeExpr::bytes()),
        Just(TypeExpr::none()),
        Just(TypeExpr::any()),
        Just(TypeExpr::simple("pkg.models.User")),
        Just(TypeExpr::simple("Node")),
        Just(TypeExpr::simple("Text")),
    ]
}

/// Raw, possibly non-canonical type values, including typing-module
/// spellings that normalization has to rewrite.
pub fn arb_raw_type() -> impl Strategy<Value = TypeExpr> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (prop::sample::select(vec!["list", "List", "set", "Set", "frozenset"]), inner.clone())
                .prop_map(|(b, t)| TypeExpr::raw(b, vec![t])),
            (prop::sample::select(vec!["dict", "Dict"]), inner.clone(), inner.clone())
                .prop_map(|(b, k, v)| TypeExpr::raw(b, vec![k, v])),
            prop::collection::vec(inner.clone(), 0..3).prop_map(TypeExpr::tuple),
            inner.clone().prop_map(TypeExpr::tuple_of),
            prop::collection::vec(inner.clone(), 2..4).prop_map(|m| TypeExpr::raw("Union", m)),
            inner.clone().prop_map(|t| TypeExpr::raw("Optional", vec![t])),
            inner.clone().prop_map(TypeExpr::generator),
            (prop::option::of(prop::collection::vec(inner.clone(), 0..3)), inner.clone())
                .prop_map(|(p, r)| TypeExpr::callable(p, r)),
        ]
    })
}

pub fn arb_type() -> impl Strategy<Value = TypeExpr> {
    arb_raw_type().prop_map(|t| t.normalize())
}

/// Every lattice law for one triple of raw values.
pub fn lattice_laws(ra: &TypeExpr, b: &TypeExpr, c: &TypeExpr) -> Result<(), String> {
    let caps = Caps::default();
    let a = ra.normalize();
    let (b, c) = (b.normalize(), c.normalize());
    let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(format!("{what}: a={a} b={b} c={c}")) };
    check(a.normalize() == a, "normalize idempotent")?;
    let w = widen(&a, caps);
    check(widen(&w, caps) == w, "widen idempotent")?;
    check(subsumes(&w, &a), "widen subsumes")?;
    let ab = merge(&a, &b);
    check(ab == merge(&b, &a), "merge commutative")?;
    check(merge(&ab, &c) == merge(&a, &merge(&b, &c)), "merge associative")?;
    check(merge(&a, &a) == a, "merge idempotent")?;
    check(subsumes(&ab, &a) && subsumes(&ab, &b), "merge is an upper bound")?;
    check(subsumes(&a, &a), "subsumption reflexive")?;
    let round = parse_type(&a.render()).map_err(|e| e.to_string())?;
    check(round == a, "render/parse round trip")?;
    Ok(())
}

// ---- graphs --------------------------------------------------------------

pub fn arb_digraph() -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
    (1usize..=12).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(0..n, 0..4), n).prop_map(move |mut adj| {
            for targets in &mut adj {
                targets.sort_unstable();
                targets.dedup();
            }
            (n, adj)
        })
    })
}

/// SCCs from the transitive closure: two nodes share a component iff each
/// reaches the other.
pub fn closure_components(n: usize, adj: &[Vec<usize>]) -> BTreeSet<Vec<usize>> {
    let mut reach = vec![vec![false; n]; n];
    for (u, targets) in adj.iter().enumerate() {
        reach[u][u] = true;
        for &v in targets {
            reach[u][v] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    (0..n)
        .map(|u| (0..n).filter(|&v| reach[u][v] && reach[v][u]).collect())
        .collect()
}

/// Tarjan agrees with the closure oracle and the schedule puts every
/// imported component before its importer.
pub fn scc_laws(n: usize, adj: &[Vec<usize>]) -> Result<(), String> {
    let comps = tarjan_scc(n, adj);
    let got: BTreeSet<Vec<usize>> = comps.iter().cloned().collect();
    if got.len() != comps.len() || got != closure_components(n, adj) {
        return Err(format!("partition mismatch on {adj:?}: {comps:?}"));
    }
    let mut comp_of = vec![0; n];
    for (i, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of[v] = i;
        }
    }
    let order = schedule(&comps, &comp_of, adj);
    let mut pos = vec![usize::MAX; comps.len()];
    for (i, &c) in order.iter().enumerate() {
        pos[c] = i;
    }
    if pos.contains(&usize::MAX) {
        return Err(format!("schedule misses a component on {adj:?}"));
    }
    for (u, targets) in adj.iter().enumerate() {
        for &v in targets {
            let (cu, cv) = (comp_of[u], comp_of[v]);
            if cu != cv && pos[cv] >= pos[cu] {
                return Err(format!("edge {u}->{v} scheduled backwards on {adj:?}"));
            }
        }
    }
    Ok(())
}

// ---- files ---------------------------------------------------------------

/// Relative paths of every file under `root`, sorted.
pub fn list_files(root: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.path().strip_prefix(root).unwrap().to_path_buf())
        .collect();
    out.sort();
    out
}

/// Copies `src` into `dst`, creating files in the given order.
pub fn copy_tree_in_order(src: &Path, dst: &Path, files: &[PathBuf]) {
    for rel in files {
        let to = dst.join(rel);
        std::fs::create_dir_all(to.parent().unwrap()).unwrap();
        std::fs::copy(src.join(rel), to).unwrap();
    }
}

pub fn copy_tree(src: &Path, dst: &Path) {
    copy_tree_in_order(src, dst, &list_files(src));
}

/// Writes a generated project with at least `min_slots` type slots: layers
/// of modules whose functions call into earlier modules. Returns the
/// number of files written.
pub fn synthetic_project(dir: &Path, min_slots: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let literals = ["1", "2.5", "\"s\"", "True", "[1, 2]", "{\"k\": 3}", "(1, \"a\")", "None"];
    // each function contributes 3 params, 3 locals and a return
    let per_module = 12 * 7 + 2;
    let modules = min_slots.div_ceil(per_module) + 1;
    for m in 0..modules {
        let mut src = String::new();
        let dep = (m > 0).then(|| rng.gen_range(0..m));
        if let Some(d) = dep {
            let _ = writeln!(src, "from mod{d:03} import f{d:03}_0, f{d:03}_1\n");
        }
        for f in 0..12 {
            let _ = writeln!(src, "def f{m:03}_{f}(a, b, c=0):");
            let _ = writeln!(src, "    total = a + c");
            let _ = writeln!(src, "    items = [b]");
            let _ = writeln!(src, "    items.append({})", literals[rng.gen_range(0..literals.len())]);
            let _ = writeln!(src, "    label = str(total) + \"-\" + str(len(items))");
            if f > 0 && rng.gen_bool(0.5) {
                let _ = writeln!(src, "    f{m:03}_{}(total, label)", f - 1);
            }
            let _ = writeln!(src, "    return items\n\n");
        }
        for f in 0..12 {
            let lit = literals[rng.gen_range(0..literals.len())];
            let _ = writeln!(src, "r{f} = f{m:03}_{f}({}, {lit})", rng.gen_range(0..100));
        }
        if let Some(d) = dep {
            let _ = writeln!(src, "x = f{d:03}_0(1, \"a\")\ny = f{d:03}_1(2.0, [1])");
        }
        std::fs::write(dir.join(format!("mod{m:03}.py")), src).unwrap();
    }
    modules
}

// ---- mini corpus ---------------------------------------------------------

pub fn corpus_projects() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixture("corpus"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

/// Strips every corpus project, infers it with an index built from the
/// other projects, and scores the pooled predictions.
pub fn corpus_report(lenient: bool) -> ScoreReport {
    let projects = corpus_projects();
    let mut preds: Vec<PredictionEntry> = Vec::new();
    let mut truth: Vec<GroundTruthEntry> = Vec::new();
    for p in &projects {
        let work = tempfile::tempdir().unwrap();
        let stripped = work.path().join("stripped");
        let mut diags = Diagnostics::new();
        let (t, _) = strip_project(&fixture(&format!("corpus/{p}")), &stripped, &mut diags).unwrap();
        let others = work.path().join("others");
        for q in projects.iter().filter(|q| *q != p) {
            copy_tree(&fixture(&format!("corpus/{q}")), &others.join(q));
        }
        let (index, _) = build_index(&others, DEFAULT_WINDOW, Exec::Sequential).unwrap();
        let idx_dir = work.path().join("index");
        index.save(&idx_dir).unwrap();
        let mut cfg = RunConfig::new(&stripped);
        cfg.index_dir = Some(idx_dir);
        let out = run_pipeline(&cfg, Exec::Parallel).unwrap();
        preds.extend(out.predictions.into_iter().map(|mut e| {
            e.file = format!("{p}/{}", e.file);
            e
        }));
        truth.extend(t.into_iter().map(|mut e| {
            e.file = format!("{p}/{}", e.file);
            e
        }));
    }
    score(&preds, &truth, &DEFAULT_KS, lenient)
}
