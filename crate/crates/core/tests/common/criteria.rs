//! One check per acceptance criterion. `Ok` carries a short detail line.

use std::time::Instant;

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, TestRunner};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use typify_core::eval::{load_predictions, load_truth, score, DEFAULT_KS};
use typify_core::exec::Exec;
use typify_core::pipeline::{run_pipeline, RunConfig};
use typify_core::project::Project;
use typify_core::retrieval::{build_index, DEFAULT_WINDOW};

use super::*;

pub type Outcome = Result<String, String>;
pub type Check = fn() -> Outcome;

fn expect_top(out: &RunOutput, qualname: &str, name: &str, ty: &str) -> Result<(), String> {
    match top(out, qualname, name) {
        Some((t, c)) if t == ty && c == "high" => Ok(()),
        other => Err(format!("{qualname}.{name}: want {ty} (high), got {other:?}")),
    }
}

pub fn trigger_dict() -> Outcome {
    let start = Instant::now();
    let out = infer_usage_only(&fixture("trigger_dict"));
    let secs = start.elapsed().as_secs_f64();
    expect_top(&out, "get_trigger_dict", "seqs", "list[list[str]]")?;
    expect_top(&out, "get_trigger_dict", "maps", "list[dict[str, list[str]]]")?;
    expect_top(&out, "get_trigger_dict", "<return>", "dict[str, list[str]]")?;
    if secs >= 1.0 {
        return Err(format!("took {secs:.3} s"));
    }
    Ok(format!("3/3 slots exact, {:.1} ms", secs * 1000.0))
}

pub fn branch_union() -> Outcome {
    let out = infer_usage_only(&fixture("branch_union"));
    expect_top(&out, "collect_items", "items", "list[Union[int, str]]")?;
    expect_top(&out, "collect_items", "<return>", "list[Union[int, str]]")?;
    Ok("items and return are list[Union[int, str]]".into())
}

pub fn scheduling() -> Outcome {
    let project = Project::load(&fixture("scheduling"), Exec::Sequential).map_err(|e| e.to_string())?;
    let g = &project.graph;
    let order: Vec<Vec<&str>> = (0..g.sccs.len())
        .map(|c| g.member_names(c))
        .filter(|names| names.iter().any(|n| ["math", "utils.mathops", "main"].contains(n)))
        .collect();
    if order != vec![vec!["math"], vec!["utils.mathops"], vec!["main"]] {
        return Err(format!("schedule {order:?}"));
    }
    let math = g.index_of("math").ok_or("math missing")?;
    if !g.nodes[math].is_external() {
        return Err("math is not external".into());
    }
    let out = infer_usage_only(&fixture("cycle"));
    let report = out
        .metadata
        .sccs
        .iter()
        .find(|s| s.modules.len() > 1)
        .ok_or("no multi-module component")?;
    if report.modules != ["A", "B"] || !report.cyclic || !report.converged || report.passes > 3 {
        return Err(format!("cycle report {report:?}"));
    }
    Ok(format!("[math] [utils.mathops] [main]; A<->B fixpoint in {} passes", report.passes))
}

fn run_cases<S: Strategy>(cases: u32, strategy: S, law: impl Fn(&S::Value) -> Result<(), String>) -> Outcome {
    let mut runner = TestRunner::new(Config { cases, ..Config::default() });
    let mut passed = 0;
    for _ in 0..cases {
        let tree = strategy.new_tree(&mut runner).map_err(|e| e.to_string())?;
        law(&tree.current())?;
        passed += 1;
    }
    Ok(format!("{passed}/{cases} cases"))
}

pub fn lattice() -> Outcome {
    let strat = (arb_raw_type(), arb_raw_type(), arb_raw_type());
    run_cases(1000, strat, |(a, b, c)| lattice_laws(a, b, c))
}

pub fn scc_oracle() -> Outcome {
    run_cases(200, arb_digraph(), |(n, adj)| scc_laws(*n, adj))
}

pub fn determinism() -> Outcome {
    let src = fixture("determinism");
    let files = list_files(&src);
    let py = files.iter().filter(|f| f.extension().is_some_and(|e| e == "py")).count();
    let canonical = |root: &Path, exec: Exec| -> Result<String, String> {
        let cfg = RunConfig::new(root);
        run_pipeline(&cfg, exec).map(|o| o.predictions_json()).map_err(|e| e.to_string())
    };
    let first = canonical(&src, Exec::Parallel)?;
    if canonical(&src, Exec::Parallel)? != first {
        return Err("two runs differ".into());
    }
    if canonical(&src, Exec::Sequential)? != first {
        return Err("sequential run differs".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for round in 0..3 {
        let mut order = files.clone();
        order.shuffle(&mut rng);
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        copy_tree_in_order(&src, dir.path(), &order);
        if canonical(dir.path(), Exec::Parallel)? != first {
            return Err(format!("shuffled copy {round} differs"));
        }
    }
    Ok(format!("{py} files, {} bytes identical across 6 runs", first.len()))
}

pub fn retrieval() -> Outcome {
    let (index, _) = build_index(&fixture("index_corpus"), DEFAULT_WINDOW, Exec::Sequential).map_err(|e| e.to_string())?;
    if index.len() < 50 {
        return Err(format!("only {} docs", index.len()));
    }
    for doc in &index.docs {
        let query: Vec<String> = doc.tokens().map(String::from).collect();
        let hits = index.search(&query, doc.kind, 5);
        if !hits.iter().any(|(t, _)| *t == doc.type_string) {
            return Err(format!("{}:{} {} not in top-5 {hits:?}", doc.source, doc.line, doc.type_string));
        }
    }
    non_override()?;
    Ok(format!("{}/{} docs self-retrieved; usage survives conflict", index.len(), index.len()))
}

/// A corpus that annotates `count` as str, and a project whose usage says int.
fn non_override() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = dir.path().join("corpus");
    let project = dir.path().join("project");
    std::fs::create_dir_all(&corpus).unwrap();
    std::fs::create_dir_all(&project).unwrap();
    std::fs::write(
        corpus.join("lib.py"),
        "def tally(words):\n    count: str = \"\"\n    return count\n\n\ndef shout(count: str) -> str:\n    return count\n",
    )
    .unwrap();
    std::fs::write(
        project.join("app.py"),
        "def tally(words):\n    count = 0\n    return count\n\n\ndef shout(count):\n    return count\n",
    )
    .unwrap();
    let (index, _) = build_index(&corpus, DEFAULT_WINDOW, Exec::Sequential).map_err(|e| e.to_string())?;
    let idx_dir = dir.path().join("index");
    index.save(&idx_dir).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new(&project);
    cfg.index_dir = Some(idx_dir);
    let out = run_pipeline(&cfg, Exec::Sequential).map_err(|e| e.to_string())?;
    let entry = out
        .predictions
        .iter()
        .find(|p| p.qualname == "tally" && p.name == "count")
        .ok_or("tally.count missing")?;
    let types: Vec<&str> = entry.predictions.iter().map(|p| p.ty.as_str()).collect();
    if types != ["int"] || entry.predictions[0].confidence != "high" {
        return Err(format!("usage overridden: {types:?}"));
    }
    match top(&out, "shout", "count") {
        Some((t, c)) if t == "str" && c == "mid" => Ok(()),
        other => Err(format!("retrieval did not fill shout.count: {other:?}")),
    }
}

pub fn metrics() -> Outcome {
    let truth = load_truth(&fixture("eval/truth.json")).map_err(|e| e.to_string())?;
    let preds = load_predictions(&fixture("eval/predictions.json")).map_err(|e| e.to_string())?;
    let want = |report: &ScoreReport, task: &str, exact: [usize; 3], base: [usize; 3], total: usize| -> Result<(), String> {
        for (i, k) in [1, 3, 5].into_iter().enumerate() {
            let (e, b) = (report.exact(task, k), report.base(task, k));
            if (e.correct, e.total, b.correct, b.total) != (exact[i], total, base[i], total) {
                return Err(format!("{task}@{k}: exact {e:?} base {b:?}"));
            }
        }
        Ok(())
    };
    let lenient = score(&preds, &truth, &DEFAULT_KS, true);
    want(&lenient, "all", [4, 6, 7], [6, 7, 8], 9)?;
    want(&lenient, "argument", [1, 2, 2], [2, 2, 2], 3)?;
    want(&lenient, "return", [2, 2, 2], [3, 3, 3], 3)?;
    want(&lenient, "variable", [1, 2, 3], [1, 2, 3], 3)?;
    let all = lenient.task("all");
    if (all.skipped, all.excluded, all.lenient_hits) != (1, 2, 1) {
        return Err(format!("skipped/excluded/lenient {} {} {}", all.skipped, all.excluded, all.lenient_hits));
    }
    let strict = score(&preds, &truth, &DEFAULT_KS, false);
    want(&strict, "all", [3, 5, 6], [5, 6, 7], 9)?;
    for report in [&lenient, &strict] {
        for (task, t) in &report.tasks {
            let mut prev = (0, 0);
            for k in &report.ks {
                let (e, b) = (t.exact[k].correct, t.base[k].correct);
                if e > b || e < prev.0 || b < prev.1 {
                    return Err(format!("{task}@{k} breaks exact<=base or monotonicity"));
                }
                prev = (e, b);
            }
        }
    }
    Ok(format!("{} entries; exact@1 4/9, base@1 6/9, 2 excluded", truth.len()))
}

pub fn performance() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    synthetic_project(dir.path(), 5000, 42);
    let start = Instant::now();
    let out = run_pipeline(&RunConfig::new(dir.path()), Exec::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let slots = out.metadata.slot_count;
    let per_slot = secs * 1000.0 / slots as f64;
    let detail = format!("{slots} slots in {secs:.2} s, {per_slot:.3} ms/slot");
    if slots < 5000 {
        return Err(format!("too few slots: {detail}"));
    }
    if per_slot > 50.0 || secs > 250.0 {
        return Err(detail);
    }
    Ok(detail)
}

pub fn corpus_floor() -> Outcome {
    let report = corpus_report(true);
    let (e, b) = (report.exact("all", 1), report.base("all", 1));
    let detail = format!(
        "top-1 exact {}/{} ({:.1}%), base {}/{} ({:.1}%)",
        e.correct,
        e.total,
        e.ratio() * 100.0,
        b.correct,
        b.total,
        b.ratio() * 100.0
    );
    if e.ratio() >= 0.50 && b.ratio() >= 0.60 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("trigger dict golden", trigger_dict),
        ("branch union golden", branch_union),
        ("scheduling and cycle fixpoint", scheduling),
        ("lattice properties", lattice),
        ("scc oracle equivalence", scc_oracle),
        ("determinism", determinism),
        ("retrieval self-consistency", retrieval),
        ("metric correctness", metrics),
        ("performance", performance),
        ("mini-corpus accuracy floor", corpus_floor),
    ]
}
