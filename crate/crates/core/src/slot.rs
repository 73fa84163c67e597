//! Type slots: the addressable places whose types get inferred.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::types::{ConfidenceTier, TypeExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotKind {
    Variable,
    Argument,
    Return,
    Attribute,
}

impl SlotKind {
    pub const ALL: [SlotKind; 4] = [
        SlotKind::Variable,
        SlotKind::Argument,
        SlotKind::Return,
        SlotKind::Attribute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SlotKind::Variable => "variable",
            SlotKind::Argument => "argument",
            SlotKind::Return => "return",
            SlotKind::Attribute => "attribute",
        }
    }
}

impl fmt::Display for SlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SlotKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown slot kind `{s}`"))
    }
}

pub const MODULE_SCOPE: &str = "<module>";
pub const RETURN_NAME: &str = "<return>";

pub fn slot_id(module: &str, qualname: &str, kind: SlotKind, name: &str) -> String {
    format!("{module}::{qualname}::{kind}::{name}")
}

/// Where a predicted type came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Usage,
    Index,
    Heuristic,
}

impl Provenance {
    pub fn tier(self) -> ConfidenceTier {
        match self {
            Provenance::Usage => ConfidenceTier::High,
            Provenance::Index => ConfidenceTier::Mid,
            Provenance::Heuristic => ConfidenceTier::Low,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankedType {
    #[serde(rename = "type")]
    pub ty: TypeExpr,
    pub confidence: ConfidenceTier,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeSlot {
    pub slot_id: String,
    pub module: String,
    pub file: String,
    pub qualname: String,
    pub kind: SlotKind,
    pub name: String,
    pub line: usize,
    pub col: usize,
    /// Usage-driven value.
    pub current: Option<TypeExpr>,
    /// Ranked candidates from retrieval or naming heuristics, used only
    /// while `current` is absent.
    pub candidates: Vec<TypeExpr>,
    pub provenance: Option<Provenance>,
}

impl TypeSlot {
    pub fn confidence(&self) -> Option<ConfidenceTier> {
        self.provenance.map(Provenance::tier)
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_none() && self.candidates.is_empty()
    }

    /// The ranked prediction list for output.
    pub fn ranked(&self) -> Vec<RankedType> {
        let tier = match self.confidence() {
            Some(t) => t,
            None => return Vec::new(),
        };
        let list: Vec<&TypeExpr> = match &self.current {
            Some(t) => vec![t],
            None => self.candidates.iter().collect(),
        };
        list.into_iter()
            .enumerate()
            .map(|(i, t)| RankedType {
                ty: t.clone(),
                confidence: tier,
                rank: i + 1,
            })
            .collect()
    }
}
