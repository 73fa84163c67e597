//! The (context, type) document store and its BM25 inverted index.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diag::{Code, Diagnostics};
use crate::error::{io_err, Error, Result};
use crate::types::parse_type;

use super::DocKind;

pub const K1: f64 = 1.2;
pub const B: f64 = 0.75;
const POSTINGS_MAGIC: &[u8; 4] = b"TYPX";
const POSTINGS_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalDoc {
    /// Space-separated tokens.
    pub context: String,
    #[serde(rename = "type")]
    pub type_string: String,
    pub kind: DocKind,
    pub source: String,
    pub line: usize,
}

impl RetrievalDoc {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.context.split(' ').filter(|t| !t.is_empty())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexMeta {
    pub format_version: u32,
    pub window: usize,
    pub doc_count: usize,
    /// Absolute corpus path, used to refuse evaluating on the same code.
    pub corpus_root: Option<String>,
    pub k1: f64,
    pub b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub doc: usize,
    pub score: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RetrievalIndex {
    pub docs: Vec<RetrievalDoc>,
    /// token -> (doc, term frequency), docs ascending.
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    doc_len: Vec<u32>,
    avg_len: f64,
    pub window: usize,
    pub corpus_root: Option<String>,
}

impl RetrievalIndex {
    pub fn new(docs: Vec<RetrievalDoc>, window: usize) -> Self {
        let postings = build_postings(&docs);
        RetrievalIndex::with_postings(docs, postings, window)
    }

    fn with_postings(docs: Vec<RetrievalDoc>, postings: BTreeMap<String, Vec<(u32, u32)>>, window: usize) -> Self {
        let doc_len: Vec<u32> = docs.iter().map(|d| d.tokens().count() as u32).collect();
        let total: u64 = doc_len.iter().map(|&l| u64::from(l)).sum();
        let avg_len = if docs.is_empty() { 0.0 } else { total as f64 / docs.len() as f64 };
        RetrievalIndex {
            docs,
            postings,
            doc_len,
            avg_len,
            window,
            corpus_root: None,
        }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.docs.len() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 scores of every document sharing a token with the query, best
    /// first; ties go to the earlier document.
    pub fn score(&self, query: &[String]) -> Vec<Hit> {
        let mut uniq: Vec<&str> = query.iter().map(String::as_str).collect();
        uniq.sort_unstable();
        uniq.dedup();
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for tok in uniq {
            let Some(list) = self.postings.get(tok) else { continue };
            let idf = self.idf(list.len());
            for &(doc, tf) in list {
                let tf = f64::from(tf);
                let dl = f64::from(self.doc_len[doc as usize]);
                let norm = if self.avg_len > 0.0 { dl / self.avg_len } else { 1.0 };
                let s = idf * tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * norm));
                *acc.entry(doc).or_insert(0.0) += s;
            }
        }
        let mut hits: Vec<Hit> = acc
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(doc, score)| Hit { doc: doc as usize, score })
            .collect();
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc.cmp(&b.doc)));
        hits
    }

    /// Up to `k` distinct types for a query, best first, from documents of
    /// the given kind.
    pub fn search(&self, query: &[String], kind: DocKind, k: usize) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = Vec::new();
        for h in self.score(query) {
            let d = &self.docs[h.doc];
            if d.kind != kind || out.iter().any(|(t, _)| *t == d.type_string) {
                continue;
            }
            out.push((d.type_string.clone(), h.score));
            if out.len() == k {
                break;
            }
        }
        out
    }

    pub fn type_histogram(&self) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        for d in &self.docs {
            *h.entry(d.type_string.clone()).or_insert(0) += 1;
        }
        h
    }

    pub fn meta(&self) -> IndexMeta {
        IndexMeta {
            format_version: POSTINGS_VERSION,
            window: self.window,
            doc_count: self.docs.len(),
            corpus_root: self.corpus_root.clone(),
            k1: K1,
            b: B,
        }
    }

    /// Writes `docs.jsonl`, `postings.bin` and `meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let docs_path = dir.join("docs.jsonl");
        let mut buf = Vec::new();
        for d in &self.docs {
            serde_json::to_writer(&mut buf, d).expect("doc serializes");
            buf.push(b'\n');
        }
        std::fs::write(&docs_path, buf).map_err(io_err(&docs_path))?;
        let post_path = dir.join("postings.bin");
        std::fs::write(&post_path, encode_postings(self.docs.len(), &self.postings)).map_err(io_err(&post_path))?;
        let meta_path = dir.join("meta.json");
        let mut meta = serde_json::to_vec_pretty(&self.meta()).expect("meta serializes");
        meta.push(b'\n');
        let mut f = std::fs::File::create(&meta_path).map_err(io_err(&meta_path))?;
        f.write_all(&meta).map_err(io_err(&meta_path))?;
        Ok(())
    }

    /// Loads an index directory. `docs.jsonl` is authoritative; the postings
    /// file is used only when it matches the documents exactly.
    pub fn load(dir: &Path, diags: &mut Diagnostics) -> Result<RetrievalIndex> {
        let meta_path = dir.join("meta.json");
        let meta: IndexMeta = {
            let text = std::fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
            serde_json::from_str(&text).map_err(|e| Error::Index(dir.to_path_buf(), e.to_string()))?
        };
        let docs_path = dir.join("docs.jsonl");
        let file = std::fs::File::open(&docs_path).map_err(io_err(&docs_path))?;
        let mut docs = Vec::new();
        let mut dropped = false;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(&docs_path))?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: RetrievalDoc = serde_json::from_str(&line)
                .map_err(|e| Error::Index(dir.to_path_buf(), format!("docs.jsonl line {}: {e}", i + 1)))?;
            match parse_type(&doc.type_string) {
                Ok(t) => docs.push(RetrievalDoc {
                    type_string: t.render(),
                    ..doc
                }),
                Err(e) => {
                    diags.push(Code::BadRetrievedType, format!("{}:{}", docs_path.display(), i + 1), e.to_string());
                    dropped = true;
                }
            }
        }
        let postings = std::fs::read(dir.join("postings.bin"))
            .ok()
            .filter(|_| !dropped)
            .and_then(|bytes| decode_postings(&bytes, docs.len()));
        let mut index = match postings {
            Some(p) if p == build_postings(&docs) => RetrievalIndex::with_postings(docs, p, meta.window),
            _ => RetrievalIndex::new(docs, meta.window),
        };
        index.corpus_root = meta.corpus_root;
        if index.is_empty() {
            diags.push(Code::EmptyIndex, dir.display().to_string(), "retrieval index has no documents");
        }
        Ok(index)
    }
}

fn build_postings(docs: &[RetrievalDoc]) -> BTreeMap<String, Vec<(u32, u32)>> {
    let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
    for (i, d) in docs.iter().enumerate() {
        let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
        for t in d.tokens() {
            *tf.entry(t).or_insert(0) += 1;
        }
        for (t, n) in tf {
            postings.entry(t.to_string()).or_default().push((i as u32, n));
        }
    }
    postings
}

/// `TYPX`, version, doc count, term count, then per term its UTF-8 bytes and
/// (doc, tf) pairs. All integers are little-endian u32.
fn encode_postings(docs: usize, postings: &BTreeMap<String, Vec<(u32, u32)>>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(POSTINGS_MAGIC);
    let put = |out: &mut Vec<u8>, v: u32| out.extend_from_slice(&v.to_le_bytes());
    put(&mut out, POSTINGS_VERSION);
    put(&mut out, docs as u32);
    put(&mut out, postings.len() as u32);
    for (term, list) in postings {
        put(&mut out, term.len() as u32);
        out.extend_from_slice(term.as_bytes());
        put(&mut out, list.len() as u32);
        for &(d, tf) in list {
            put(&mut out, d);
            put(&mut out, tf);
        }
    }
    out
}

struct Reader<'b> {
    bytes: &'b [u8],
    pos: usize,
}

impl<'b> Reader<'b> {
    fn take(&mut self, n: usize) -> Option<&'b [u8]> {
        let s = self.bytes.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }
}

fn decode_postings(bytes: &[u8], docs: usize) -> Option<BTreeMap<String, Vec<(u32, u32)>>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != POSTINGS_MAGIC || r.u32()? != POSTINGS_VERSION || r.u32()? as usize != docs {
        return None;
    }
    let terms = r.u32()?;
    let mut out = BTreeMap::new();
    for _ in 0..terms {
        let n = r.u32()? as usize;
        let term = String::from_utf8(r.take(n)?.to_vec()).ok()?;
        let m = r.u32()?;
        let mut list = Vec::new();
        for _ in 0..m {
            let d = r.u32()?;
            let tf = r.u32()?;
            if d as usize >= docs {
                return None;
            }
            list.push((d, tf));
        }
        out.insert(term, list);
    }
    if r.pos != bytes.len() {
        return None;
    }
    Some(out)
}
