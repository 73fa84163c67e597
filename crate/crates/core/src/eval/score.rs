//! Exact-match and base-match scoring at top-k.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::strip::{is_excluded_truth, GroundTruthEntry};
use crate::slot::SlotKind;
use crate::types::{parse_type, short_name, TypeExpr};

pub const DEFAULT_KS: [usize; 3] = [1, 3, 5];

/// One ranked prediction as written to `predictions.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedType {
    #[serde(rename = "type")]
    pub ty: String,
    pub confidence: String,
    pub rank: usize,
}

/// One slot's predictions as written to `predictions.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionEntry {
    pub file: String,
    pub qualname: String,
    pub kind: SlotKind,
    pub name: String,
    pub line: usize,
    pub col: usize,
    pub predictions: Vec<PredictedType>,
}

/// The scored task a slot kind belongs to. Attributes are variables.
pub fn task_of(kind: SlotKind) -> &'static str {
    match kind {
        SlotKind::Argument => "argument",
        SlotKind::Return => "return",
        SlotKind::Variable | SlotKind::Attribute => "variable",
    }
}

pub const TASKS: [&str; 4] = ["variable", "argument", "return", "all"];

fn same_name(pred: &str, truth: &str, lenient: bool) -> bool {
    pred == truth || (lenient && !truth.contains('.') && short_name(pred) == truth)
}

fn user_base(t: &TypeExpr) -> bool {
    t.is_user_defined()
}

fn bases_equal(pred: &TypeExpr, truth: &TypeExpr, lenient: bool) -> bool {
    if user_base(pred) && user_base(truth) {
        same_name(pred.base(), truth.base(), lenient)
    } else {
        pred.base() == truth.base()
    }
}

/// Pairs every element of `truth` with a distinct element of `pred`.
fn members_match(pred: &[TypeExpr], truth: &[TypeExpr], eq: &dyn Fn(&TypeExpr, &TypeExpr) -> bool) -> bool {
    if pred.len() != truth.len() {
        return false;
    }
    let mut used = vec![false; pred.len()];
    'outer: for t in truth {
        for (i, p) in pred.iter().enumerate() {
            if !used[i] && eq(p, t) {
                used[i] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Structural equality; union members compare as sets so that a
/// qualified name sorting differently from its short form still matches.
pub fn exact_match(pred: &TypeExpr, truth: &TypeExpr, lenient: bool) -> bool {
    if pred == truth {
        return true;
    }
    if pred.is_union() && truth.is_union() {
        return members_match(pred.args(), truth.args(), &|p, t| exact_match(p, t, lenient));
    }
    if pred.is_union() || truth.is_union() || !bases_equal(pred, truth, lenient) {
        return false;
    }
    pred.args().len() == truth.args().len()
        && pred.args().iter().zip(truth.args()).all(|(p, t)| exact_match(p, t, lenient))
}

/// Outer constructors agree. Union truths: a union prediction needs the
/// same set of member bases; a plain prediction must equal exactly one
/// member base.
pub fn base_match(pred: &TypeExpr, truth: &TypeExpr, lenient: bool) -> bool {
    match (pred.is_union(), truth.is_union()) {
        (true, true) => {
            let covers = |a: &TypeExpr, b: &TypeExpr| {
                a.members().iter().all(|x| b.members().iter().any(|y| bases_equal(x, y, lenient) || bases_equal(y, x, lenient)))
            };
            covers(pred, truth) && covers(truth, pred)
        }
        (false, true) => truth.members().iter().filter(|m| bases_equal(pred, m, lenient)).count() == 1,
        (true, false) => false,
        (false, false) => bases_equal(pred, truth, lenient),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Fraction {
    pub correct: usize,
    pub total: usize,
}

impl Fraction {
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TaskScore {
    /// Entries with a parseable, non-excluded truth.
    pub scored: usize,
    /// Entries whose annotation does not parse.
    pub skipped: usize,
    /// Entries whose truth renders to `Any` or `None`.
    pub excluded: usize,
    /// Keyed by k.
    pub exact: BTreeMap<usize, Fraction>,
    pub base: BTreeMap<usize, Fraction>,
    /// Top-max-k hits that needed the short-name fallback.
    pub lenient_hits: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScoreReport {
    pub ks: Vec<usize>,
    pub lenient_user_types: bool,
    pub tasks: BTreeMap<String, TaskScore>,
}

impl ScoreReport {
    pub fn task(&self, name: &str) -> &TaskScore {
        &self.tasks[name]
    }

    pub fn exact(&self, task: &str, k: usize) -> &Fraction {
        &self.tasks[task].exact[&k]
    }

    pub fn base(&self, task: &str, k: usize) -> &Fraction {
        &self.tasks[task].base[&k]
    }

    pub fn to_json(&self) -> String {
        let mut tasks = serde_json::Map::new();
        for (name, t) in &self.tasks {
            let rows = |m: &BTreeMap<usize, Fraction>| -> serde_json::Value {
                let mut o = serde_json::Map::new();
                for (k, f) in m {
                    o.insert(
                        format!("top{k}"),
                        serde_json::json!({"correct": f.correct, "total": f.total, "ratio": f.ratio()}),
                    );
                }
                o.into()
            };
            tasks.insert(
                name.clone(),
                serde_json::json!({
                    "scored": t.scored,
                    "skipped": t.skipped,
                    "excluded": t.excluded,
                    "lenient_hits": t.lenient_hits,
                    "exact": rows(&t.exact),
                    "base": rows(&t.base),
                }),
            );
        }
        let v = serde_json::json!({
            "ks": self.ks,
            "lenient_user_types": self.lenient_user_types,
            "tasks": tasks,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("report");
        s.push('\n');
        s
    }

    /// Aligned text table, one row per task.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<10}{:>8}{:>8}", "task", "scored", "skipped");
        for metric in ["exact", "base"] {
            for k in &self.ks {
                let _ = write!(out, "{:>10}", format!("{metric}@{k}"));
            }
        }
        out.push('\n');
        for name in TASKS {
            let t = &self.tasks[name];
            let _ = write!(out, "{:<10}{:>8}{:>8}", name, t.scored, t.skipped);
            for m in [&t.exact, &t.base] {
                for k in &self.ks {
                    let _ = write!(out, "{:>10}", format!("{:.1}%", m[k].ratio() * 100.0));
                }
            }
            out.push('\n');
        }
        out
    }
}

type Key<'a> = (&'a str, &'a str, SlotKind, &'a str);

/// Scores predictions against truth. Entries join on
/// (file, qualname, kind, name); when a key repeats, the nearest line wins.
pub fn score(preds: &[PredictionEntry], truth: &[GroundTruthEntry], ks: &[usize], lenient: bool) -> ScoreReport {
    let mut ks: Vec<usize> = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let max_k = ks.last().copied().unwrap_or(0);

    let mut by_key: HashMap<Key, Vec<&PredictionEntry>> = HashMap::new();
    for p in preds {
        by_key.entry((&p.file, &p.qualname, p.kind, &p.name)).or_default().push(p);
    }

    let mut tasks: BTreeMap<String, TaskScore> = TASKS
        .iter()
        .map(|t| {
            let zero = || ks.iter().map(|&k| (k, Fraction::default())).collect();
            (t.to_string(), TaskScore { exact: zero(), base: zero(), ..TaskScore::default() })
        })
        .collect();

    for entry in truth {
        let task = task_of(entry.kind);
        let truth_ty = match parse_type(&entry.truth) {
            Ok(_) if is_excluded_truth(&entry.truth) => {
                for name in [task, "all"] {
                    tasks.get_mut(name).expect("task").excluded += 1;
                }
                continue;
            }
            Ok(t) => t,
            Err(_) => {
                for name in [task, "all"] {
                    tasks.get_mut(name).expect("task").skipped += 1;
                }
                continue;
            }
        };
        let mut ranked: Vec<(usize, Option<TypeExpr>)> = by_key
            .get(&entry.key())
            .and_then(|cands| cands.iter().min_by_key(|p| (p.line.abs_diff(entry.line), p.line)))
            .map(|p| p.predictions.iter().map(|x| (x.rank, parse_type(&x.ty).ok())).collect())
            .unwrap_or_default();
        ranked.sort_by_key(|(r, _)| *r);

        // first 1-based position at which each metric hits
        let first_hit = |m: &dyn Fn(&TypeExpr) -> bool| -> Option<usize> {
            ranked.iter().take(max_k).position(|(_, t)| t.as_ref().is_some_and(m)).map(|i| i + 1)
        };
        let exact = first_hit(&|p| exact_match(p, &truth_ty, lenient));
        let base = first_hit(&|p| base_match(p, &truth_ty, lenient));
        let lenient_only = lenient && exact.is_some() && first_hit(&|p| exact_match(p, &truth_ty, false)).is_none();

        for name in [task, "all"] {
            let t = tasks.get_mut(name).expect("task");
            t.scored += 1;
            if lenient_only {
                t.lenient_hits += 1;
            }
            for &k in &ks {
                let e = t.exact.get_mut(&k).expect("k");
                e.total += 1;
                e.correct += usize::from(exact.is_some_and(|h| h <= k));
                let b = t.base.get_mut(&k).expect("k");
                b.total += 1;
                b.correct += usize::from(base.is_some_and(|h| h <= k));
            }
        }
    }
    ScoreReport { ks, lenient_user_types: lenient, tasks }
}
