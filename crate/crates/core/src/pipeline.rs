//! End-to-end run: graph, schedule and fixpoint, usage-driven inference,
//! retrieval, then the predictions file.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostics;
use crate::error::{io_err, Error, Result};
use crate::eval::{PredictedType, PredictionEntry};
use crate::exec::Exec;
use crate::infer::{InferConfig, SccReport};
use crate::project::Project;
use crate::retrieval::{retrieve_and_fill, RetrievalIndex, DEFAULT_TOP_K, DEFAULT_WINDOW};
use crate::source::absolute;
use crate::types::Caps;

pub const CONFIG_FILE: &str = "typify.toml";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub project_root: PathBuf,
    pub index_dir: Option<PathBuf>,
    pub top_k: usize,
    pub pass_cap: usize,
    pub union_cap: usize,
    pub depth_cap: usize,
    /// Context window for index builds; queries use the window the index
    /// was built with.
    pub window: usize,
    pub retrieval_enabled: bool,
    pub emit_empty: bool,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(project_root: impl Into<PathBuf>) -> Self {
        let caps = Caps::default();
        RunConfig {
            project_root: project_root.into(),
            index_dir: None,
            top_k: DEFAULT_TOP_K,
            pass_cap: InferConfig::default().pass_cap,
            union_cap: caps.union_cap,
            depth_cap: caps.depth_cap,
            window: DEFAULT_WINDOW,
            retrieval_enabled: true,
            emit_empty: false,
            output: None,
        }
    }

    /// Defaults, then `typify.toml` at the project root, then `flags`.
    pub fn resolve(project_root: &Path, flags: &ConfigOverrides) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(project_root);
        let file = project_root.join(CONFIG_FILE);
        if file.is_file() {
            let text = std::fs::read_to_string(&file).map_err(io_err(&file))?;
            let from_file: ConfigOverrides =
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", file.display(), e.message())))?;
            // relative paths in the file are relative to the project root
            let rebase = |p: Option<PathBuf>| p.map(|p| if p.is_relative() { project_root.join(p) } else { p });
            cfg.apply(&ConfigOverrides {
                index_dir: rebase(from_file.index_dir.clone()),
                output: rebase(from_file.output.clone()),
                ..from_file
            });
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, o: &ConfigOverrides) {
        if let Some(v) = &o.index_dir {
            self.index_dir = Some(v.clone());
        }
        if let Some(v) = &o.output {
            self.output = Some(v.clone());
        }
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = o.$f { self.$f = v; })*};
        }
        set!(top_k, pass_cap, union_cap, depth_cap, window, emit_empty);
        if let Some(v) = o.retrieval {
            self.retrieval_enabled = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("top_k", self.top_k),
            ("pass_cap", self.pass_cap),
            ("union_cap", self.union_cap),
            ("depth_cap", self.depth_cap),
            ("window", self.window),
        ] {
            if v < 1 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn infer_config(&self) -> InferConfig {
        InferConfig {
            pass_cap: self.pass_cap,
            caps: Caps {
                union_cap: self.union_cap,
                depth_cap: self.depth_cap,
            },
            ..InferConfig::default()
        }
    }
}

/// Optional settings, as read from `typify.toml` or command-line flags.
#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub index_dir: Option<PathBuf>,
    pub top_k: Option<usize>,
    pub pass_cap: Option<usize>,
    pub union_cap: Option<usize>,
    pub depth_cap: Option<usize>,
    pub window: Option<usize>,
    pub retrieval: Option<bool>,
    pub emit_empty: Option<bool>,
    pub output: Option<PathBuf>,
}

/// Sidecar written next to the predictions file. Kept out of the
/// predictions file so that stays byte-identical across runs.
#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub module_count: usize,
    pub slot_count: usize,
    pub predicted_slots: usize,
    pub sccs: Vec<SccReport>,
    /// Milliseconds per stage, in run order.
    pub stage_ms: Vec<(String, f64)>,
    pub diagnostic_count: usize,
}

pub struct RunOutput {
    pub predictions: Vec<PredictionEntry>,
    pub metadata: RunMetadata,
    pub diagnostics: Diagnostics,
}

impl RunOutput {
    /// Canonical bytes of the predictions file.
    pub fn predictions_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.predictions).expect("predictions serialize");
        s.push('\n');
        s
    }

    pub fn metadata_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.metadata).expect("metadata serializes");
        s.push('\n');
        s
    }

    /// Writes the predictions file and its `.meta.json` sidecar.
    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        std::fs::write(path, self.predictions_json()).map_err(io_err(path))?;
        let meta = sidecar_path(path);
        std::fs::write(&meta, self.metadata_json()).map_err(io_err(&meta))
    }

    pub fn total_ms(&self) -> f64 {
        self.metadata.stage_ms.iter().map(|(_, ms)| ms).sum()
    }
}

/// `out/predictions.json` -> `out/predictions.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

/// Fails when the retrieval corpus and the analyzed project share files,
/// which would leak annotations into the predictions.
pub fn check_overlap(corpus: &Path, project: &Path) -> Result<()> {
    let (c, p) = (absolute(corpus), absolute(project));
    if c.starts_with(&p) || p.starts_with(&c) {
        return Err(Error::Overlap { corpus: c, project: p });
    }
    Ok(())
}

pub fn run_pipeline(cfg: &RunConfig, exec: Exec) -> Result<RunOutput> {
    cfg.validate()?;
    let mut stage_ms = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, stage_ms: &mut Vec<(String, f64)>| {
        stage_ms.push((name.to_string(), clock.elapsed().as_secs_f64() * 1000.0));
        clock = Instant::now();
    };

    let index = match (&cfg.index_dir, cfg.retrieval_enabled) {
        (Some(dir), true) => Some(dir),
        _ => None,
    };
    let mut diagnostics = Diagnostics::new();
    let index = match index {
        Some(dir) => {
            let idx = RetrievalIndex::load(dir, &mut diagnostics)?;
            if let Some(root) = &idx.corpus_root {
                check_overlap(Path::new(root), &cfg.project_root)?;
            }
            Some(idx)
        }
        None => None,
    };

    let project = Project::load(&cfg.project_root, exec)?;
    lap("graph", &mut stage_ms);

    let mut outcome = project.infer(&cfg.infer_config());
    lap("inference", &mut stage_ms);

    if cfg.retrieval_enabled {
        let texts: HashMap<String, String> =
            project.units.iter().map(|u| (u.src.rel_path.clone(), u.src.text.clone())).collect();
        retrieve_and_fill(&mut outcome.slots, &texts, index.as_ref(), &outcome.scope_types, cfg.top_k);
    }
    lap("retrieval", &mut stage_ms);

    let mut predictions = Vec::new();
    for slot in &outcome.slots {
        let ranked = slot.ranked();
        if ranked.is_empty() && !cfg.emit_empty {
            continue;
        }
        predictions.push(PredictionEntry {
            file: slot.file.clone(),
            qualname: slot.qualname.clone(),
            kind: slot.kind,
            name: slot.name.clone(),
            line: slot.line,
            col: slot.col,
            predictions: ranked
                .into_iter()
                .take(cfg.top_k)
                .map(|r| PredictedType {
                    ty: r.ty.render(),
                    confidence: r.confidence.as_str().to_string(),
                    rank: r.rank,
                })
                .collect(),
        });
    }
    lap("emit", &mut stage_ms);

    diagnostics.extend(project.diagnostics);
    diagnostics.extend(outcome.diagnostics);
    let metadata = RunMetadata {
        tool: "typify",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        module_count: project.modules.len(),
        slot_count: outcome.slots.len(),
        predicted_slots: predictions.iter().filter(|p| !p.predictions.is_empty()).count(),
        sccs: outcome.sccs,
        stage_ms,
        diagnostic_count: diagnostics.len(),
    };
    Ok(RunOutput {
        predictions,
        metadata,
        diagnostics,
    })
}

/// Per-kind counts of emitted predictions, for summaries.
pub fn kind_counts(preds: &[PredictionEntry]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for p in preds.iter().filter(|p| !p.predictions.is_empty()) {
        *out.entry(p.kind.to_string()).or_insert(0) += 1;
    }
    out
}
