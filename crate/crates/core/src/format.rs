//! Text documents for relations, rankings, blocks, arrays, gadget families
//! and descent traces.
//!
//! Documents are TOML. JSON with the same structure is accepted as well; it is
//! converted to TOML before being read, so positions in diagnostics are only
//! given for TOML sources and for JSON syntax errors.
//!
//! ```toml
//! # relation (a ranking has the same shape; its diagonal is implied)
//! carrier = ["a", "b", "c"]
//! pairs = [["a", "b"], ["b", "c"], ["a", "c"]]
//! reflexive = true
//! ```
//!
//! ```toml
//! # block
//! window = [0, 1, 2]
//! rank = 2
//! elements = [[0, 1], [0, 2], [1, 2], [2]]
//! ```
//!
//! ```toml
//! # array; file references are relative to the document
//! values = [[[0], "a"], [[1], "b"], [[2], "c"]]
//!
//! [block]
//! window = [0, 1, 2]
//! rank = 1
//!
//! [target]
//! relation_file = "relation.toml"
//! ranking_file = "ranking.toml"
//! ```
//!
//! ```toml
//! # gadget family
//! omega_bound = 5
//!
//! [[family]]
//! carrier = ["p"]
//! reflexive = true
//! ```

use std::collections::{HashMap, HashSet};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::arrays::{BlockArray, Target};
use crate::blocks::{FinSeq, Window, WindowedBlock};
use crate::error::{Error, ParseError, Result};
use crate::gadget::{GadgetFamily, GadgetSpace};
use crate::relations::{FiniteRelation, PartialRanking};
use crate::search::{limit_block, step_verdicts, DescentStatus, DescentTrace, StepVerdicts};

/// The source of one document.
#[derive(Debug, Clone)]
pub struct Text {
    name: String,
    body: String,
    positions: bool,
    dir: Option<PathBuf>,
}

impl Text {
    /// Wraps document text. Text whose first non-blank character is `{` is
    /// read as JSON.
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Result<Self> {
        let mut text = Text {
            name: name.into(),
            body: body.into(),
            positions: true,
            dir: None,
        };
        if text.body.trim_start().starts_with('{') {
            let value: serde_json::Value = serde_json::from_str(&text.body).map_err(|e| {
                Error::Parse(ParseError {
                    source: text.name.clone(),
                    location: Some((e.line(), e.column())),
                    message: e.to_string(),
                })
            })?;
            text.body = toml::to_string(&value).map_err(|e| text.error(None, e.to_string()))?;
            text.positions = false;
        }
        Ok(text)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let body = std::fs::read_to_string(path).map_err(|e| {
            Error::Parse(ParseError {
                source: name.clone(),
                location: None,
                message: format!("cannot read: {e}"),
            })
        })?;
        let mut text = Text::new(name, body)?;
        text.dir = path.parent().map(Path::to_path_buf);
        Ok(text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn locate(&self, offset: usize) -> (usize, usize) {
        let before = &self.body[..offset.min(self.body.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }

    fn error(&self, span: Option<Range<usize>>, message: impl Into<String>) -> Error {
        Error::Parse(ParseError {
            source: self.name.clone(),
            location: span.filter(|_| self.positions).map(|s| self.locate(s.start)),
            message: message.into(),
        })
    }

    fn parse<T: DeserializeOwned>(&self) -> Result<T> {
        toml::from_str(&self.body).map_err(|e| self.error(e.span(), e.message().trim_end()))
    }

    /// Resolves a file reference made inside this document.
    fn resolve(&self, reference: &str) -> Result<PathBuf> {
        let path = Path::new(reference);
        let joined = match &self.dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        };
        std::fs::canonicalize(&joined).map_err(|e| self.error(None, format!("cannot open {reference}: {e}")))
    }
}

fn unspanned<T>(value: T) -> Spanned<T> {
    Spanned::new(0..0, value)
}

/// A relation on a labelled carrier.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDoc {
    pub carrier: Spanned<Vec<String>>,
    #[serde(default)]
    pub pairs: Vec<Spanned<(String, String)>>,
    /// Adds the diagonal.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reflexive: bool,
}

impl RelationDoc {
    /// Lists the pairs of `r`, using the `reflexive` shorthand when it applies.
    pub fn from_relation(r: &FiniteRelation) -> Self {
        let reflexive = r.is_reflexive();
        RelationDoc {
            carrier: unspanned(r.labels().to_vec()),
            pairs: r
                .pairs()
                .filter(|&(p, q)| !(reflexive && p == q))
                .map(|(p, q)| unspanned((r.label(p).to_string(), r.label(q).to_string())))
                .collect(),
            reflexive,
        }
    }

    pub fn from_ranking(rk: &PartialRanking) -> Self {
        RelationDoc::from_relation(rk.relation())
    }

    pub fn to_relation(&self, text: &Text) -> Result<FiniteRelation> {
        let labels = self.carrier.get_ref();
        let mut index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.as_str(), i).is_some() {
                return Err(text.error(Some(self.carrier.span()), format!("label `{l}` appears twice")));
            }
        }
        let mut r = FiniteRelation::new(labels.clone());
        for pair in &self.pairs {
            let (a, b) = pair.get_ref();
            let find = |l: &str| {
                index
                    .get(l)
                    .copied()
                    .ok_or_else(|| text.error(Some(pair.span()), format!("unknown label `{l}`")))
            };
            r.insert(find(a)?, find(b)?)?;
        }
        if self.reflexive {
            for p in 0..r.size() {
                r.insert(p, p)?;
            }
        }
        Ok(r)
    }

    /// Reads the document as a ranking of `relation`: its carrier must list
    /// the same labels, in any order, and the diagonal is added.
    pub fn to_ranking(&self, text: &Text, relation: &FiniteRelation) -> Result<PartialRanking> {
        let order = self.to_relation(text)?;
        let mut map = Vec::with_capacity(relation.size());
        for l in relation.labels() {
            map.push(
                order
                    .index_of(l)
                    .ok_or_else(|| text.error(Some(self.carrier.span()), format!("ranking carrier lacks `{l}`")))?,
            );
        }
        if order.size() != relation.size() {
            return Err(text.error(
                Some(self.carrier.span()),
                format!(
                    "ranking carrier has {} labels but the relation has {}",
                    order.size(),
                    relation.size()
                ),
            ));
        }
        Ok(PartialRanking::from_relation(FiniteRelation::from_fn(
            relation.labels().to_vec(),
            |p, q| p == q || order.contains(map[p], map[q]),
        )))
    }
}

/// A windowed block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDoc {
    pub window: Spanned<Vec<u32>>,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elements: Vec<Spanned<Vec<u32>>>,
}

impl BlockDoc {
    pub fn from_block(b: &WindowedBlock) -> Self {
        BlockDoc {
            window: unspanned(b.window().points().to_vec()),
            rank: b.rank(),
            elements: b.elements().iter().map(|s| unspanned(s.as_slice().to_vec())).collect(),
        }
    }

    fn window(&self, text: &Text) -> Result<Window> {
        Window::new(self.window.get_ref().clone())
            .map_err(|_| text.error(Some(self.window.span()), "window must be strictly increasing"))
    }

    /// Builds the block without validating it. Non-increasing elements are
    /// rejected with their position.
    pub fn to_block(&self, text: &Text) -> Result<WindowedBlock> {
        let window = self.window(text)?;
        if self.rank == 0 {
            return Err(text.error(None, "rank must be positive"));
        }
        let elements = self
            .elements
            .iter()
            .map(|e| parse_element(text, e.get_ref(), e.span()))
            .collect::<Result<Vec<_>>>()?;
        Ok(WindowedBlock::new(window, self.rank, elements))
    }
}

fn parse_element(text: &Text, v: &[u32], span: Range<usize>) -> Result<FinSeq> {
    if v.is_empty() {
        return Err(text.error(Some(span), "elements must be nonempty"));
    }
    FinSeq::new(v.to_vec()).map_err(|_| text.error(Some(span), format!("element {v:?} is not strictly increasing")))
}

/// Where the values of an array live. Exactly one of `relation`,
/// `relation_file` and `gadget_file` is given; a ranking is optional and
/// defaults to the identity. A gadget target carries its own ranking.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gadget_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<RelationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<RelationDoc>,
}

impl TargetDoc {
    /// Inlines a target.
    pub fn inline(target: &Target) -> Self {
        TargetDoc {
            relation: Some(RelationDoc::from_relation(target.relation())),
            ranking: (!target.ranking().is_identity()).then(|| RelationDoc::from_ranking(target.ranking())),
            ..TargetDoc::default()
        }
    }

    /// Refers to a gadget family file.
    pub fn gadget(path: &Path) -> Self {
        TargetDoc {
            gadget_file: Some(path.display().to_string()),
            ..TargetDoc::default()
        }
    }
}

/// A target read from a document, with file references made absolute.
#[derive(Debug, Clone)]
pub struct LoadedTarget {
    pub target: Arc<Target>,
    pub doc: TargetDoc,
    pub gadget: Option<Arc<GadgetSpace>>,
}

impl TargetDoc {
    pub fn load(&self, text: &Text, gadget_cap: u64) -> Result<LoadedTarget> {
        let given = [
            self.relation.is_some(),
            self.relation_file.is_some(),
            self.gadget_file.is_some(),
        ];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(text.error(
                None,
                "target needs exactly one of `relation`, `relation_file`, `gadget_file`",
            ));
        }
        let mut doc = self.clone();
        if let Some(reference) = &self.gadget_file {
            if self.ranking.is_some() || self.ranking_file.is_some() {
                return Err(text.error(None, "a gadget target carries its own ranking"));
            }
            let path = text.resolve(reference)?;
            let space = GadgetSpace::build(load_family(&path)?, gadget_cap)?;
            let mut seen = HashSet::new();
            if let Some(l) = space.relation().labels().iter().find(|l| !seen.insert(l.as_str())) {
                return Err(text.error(None, format!("sequence label `{l}` is ambiguous in {reference}")));
            }
            doc.gadget_file = Some(path.display().to_string());
            return Ok(LoadedTarget {
                target: space.target().clone(),
                doc,
                gadget: Some(Arc::new(space)),
            });
        }
        let relation = match (&self.relation, &self.relation_file) {
            (Some(inline), _) => inline.to_relation(text)?,
            (None, Some(reference)) => {
                let path = text.resolve(reference)?;
                doc.relation_file = Some(path.display().to_string());
                load_relation(&path)?
            }
            (None, None) => unreachable!("checked above"),
        };
        let ranking = match (&self.ranking, &self.ranking_file) {
            (Some(_), Some(_)) => return Err(text.error(None, "give either `ranking` or `ranking_file`, not both")),
            (Some(inline), None) => Some(inline.to_ranking(text, &relation)?),
            (None, Some(reference)) => {
                let path = text.resolve(reference)?;
                doc.ranking_file = Some(path.display().to_string());
                Some(load_ranking(&path, &relation)?)
            }
            (None, None) => None,
        };
        let target = match ranking {
            Some(rk) => Target::new(relation, rk)?,
            None => Target::unranked(relation)?,
        };
        Ok(LoadedTarget {
            target: Arc::new(target),
            doc,
            gadget: None,
        })
    }
}

/// An array: a block, a value for each element, and the target.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayDoc {
    pub values: Vec<Spanned<(Vec<u32>, String)>>,
    /// The block; `elements` may be left out, in which case the valued
    /// elements are the block.
    pub block: BlockDoc,
    pub target: TargetDoc,
}

/// An array read from a document.
#[derive(Debug, Clone)]
pub struct LoadedArray {
    pub array: BlockArray,
    pub target: LoadedTarget,
}

impl ArrayDoc {
    pub fn from_array(f: &BlockArray, target: TargetDoc) -> Self {
        ArrayDoc {
            values: value_pairs(f)
                .into_iter()
                .map(|(s, l)| unspanned((s.into_vec(), l)))
                .collect(),
            block: BlockDoc::from_block(f.block()),
            target,
        }
    }

    pub fn load(&self, text: &Text, gadget_cap: u64) -> Result<LoadedArray> {
        let target = self.target.load(text, gadget_cap)?;
        let mut pairs = Vec::with_capacity(self.values.len());
        for entry in &self.values {
            let (element, label) = entry.get_ref();
            let s = parse_element(text, element, entry.span())?;
            let v = target
                .target
                .index_of(label)
                .ok_or_else(|| text.error(Some(entry.span()), format!("`{label}` is not in the target carrier")))?;
            pairs.push((s, v));
        }
        let mut block = self.block.to_block(text)?;
        if self.block.elements.is_empty() {
            block = WindowedBlock::new(
                block.window().clone(),
                block.rank(),
                pairs.iter().map(|(s, _)| s.clone()),
            );
        }
        let array =
            BlockArray::from_pairs(block, pairs, target.target.clone()).map_err(|e| text.error(None, e.to_string()))?;
        Ok(LoadedArray { array, target })
    }
}

/// `(element, label)` for every element, in block order.
pub fn value_pairs(f: &BlockArray) -> Vec<(FinSeq, String)> {
    f.iter()
        .map(|(s, v)| (s.clone(), f.target().label(v).to_string()))
        .collect()
}

/// A family of relations for the gadget construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    pub omega_bound: u32,
    pub family: Vec<RelationDoc>,
}

impl FamilyDoc {
    pub fn from_family(family: &GadgetFamily) -> Self {
        FamilyDoc {
            omega_bound: family.omega_bound(),
            family: family.members().iter().map(RelationDoc::from_relation).collect(),
        }
    }

    /// Member labels may not start with `*` or contain `<` or `>`, which
    /// are reserved for the labels of the gadget space.
    pub fn to_family(&self, text: &Text) -> Result<GadgetFamily> {
        let mut members = Vec::with_capacity(self.family.len());
        for doc in &self.family {
            if let Some(l) = doc
                .carrier
                .get_ref()
                .iter()
                .find(|l| l.starts_with('*') || l.contains(['<', '>']))
            {
                return Err(text.error(Some(doc.carrier.span()), format!("label `{l}` is reserved")));
            }
            members.push(doc.to_relation(text)?);
        }
        GadgetFamily::new(members, self.omega_bound).map_err(|e| text.error(None, e.to_string()))
    }
}

pub fn load_relation(path: &Path) -> Result<FiniteRelation> {
    let text = Text::read(path)?;
    text.parse::<RelationDoc>()?.to_relation(&text)
}

pub fn load_ranking(path: &Path, relation: &FiniteRelation) -> Result<PartialRanking> {
    let text = Text::read(path)?;
    text.parse::<RelationDoc>()?.to_ranking(&text, relation)
}

pub fn load_block(path: &Path) -> Result<WindowedBlock> {
    let text = Text::read(path)?;
    text.parse::<BlockDoc>()?.to_block(&text)
}

pub fn load_family(path: &Path) -> Result<GadgetFamily> {
    let text = Text::read(path)?;
    text.parse::<FamilyDoc>()?.to_family(&text)
}

/// Loads an array; gadget targets larger than `gadget_cap` are refused.
pub fn load_array(path: &Path, gadget_cap: u64) -> Result<LoadedArray> {
    let text = Text::read(path)?;
    text.parse::<ArrayDoc>()?.load(&text, gadget_cap)
}

/// Parses a document of any of the kinds above from text.
pub fn parse<T: DeserializeOwned>(text: &Text) -> Result<T> {
    text.parse()
}

pub fn to_toml<T: Serialize>(doc: &T) -> Result<String> {
    toml::to_string(doc).map_err(|e| Error::Postcondition(format!("cannot serialize: {e}")))
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    serde_json::to_string_pretty(doc)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Postcondition(format!("cannot serialize: {e}")))
}

/// One array of a descent chain with the checks of the step that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct StepDoc {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<StepVerdicts>,
    pub values: Vec<(FinSeq, String)>,
    pub block: BlockDoc,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClaimsDoc {
    /// `p` never decreases along the chain.
    pub p_non_decreasing: bool,
    /// `|p⁻¹(n)| ≤ 2ⁿ` for every `n`.
    pub fibre_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitDoc {
    pub stable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bad: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub below_chain: Option<bool>,
    pub values: Vec<(FinSeq, String)>,
}

/// A descent run as a document.
#[derive(Debug, Clone, Serialize)]
pub struct TraceDoc {
    pub status: DescentStatus,
    pub p_values: Vec<u32>,
    pub claims: ClaimsDoc,
    pub limit: LimitDoc,
    pub target: TargetDoc,
    pub steps: Vec<StepDoc>,
}

impl TraceDoc {
    /// Rechecks every step of `trace` and reads off its limit.
    pub fn new(trace: &DescentTrace, target: TargetDoc) -> Result<Self> {
        let mut steps = Vec::with_capacity(trace.chain.len());
        for (i, f) in trace.chain.iter().enumerate() {
            let (p, verdicts) = if i == 0 {
                (None, None)
            } else {
                let p = trace.p_values[i - 1];
                (Some(p), Some(step_verdicts(&trace.chain[i - 1], f, p)?))
            };
            steps.push(StepDoc {
                index: i,
                p,
                verdicts,
                values: value_pairs(f),
                block: BlockDoc::from_block(f.block()),
            });
        }
        let limit = limit_block(trace)?;
        let target_of = &trace.chain[0];
        Ok(TraceDoc {
            status: trace.status,
            p_values: trace.p_values.clone(),
            claims: ClaimsDoc {
                p_non_decreasing: trace.p_non_decreasing(),
                fibre_bound: trace.p_fibre_overflow().is_none(),
            },
            limit: LimitDoc {
                stable: limit.stable,
                bad: limit.bad,
                below_chain: limit.below_chain,
                values: limit
                    .elements
                    .iter()
                    .zip(&limit.values)
                    .map(|(s, &v)| (s.clone(), target_of.target().label(v).to_string()))
                    .collect(),
            },
            target,
            steps,
        })
    }

    /// Whether every recorded check passed.
    pub fn all_pass(&self) -> bool {
        self.claims.p_non_decreasing
            && self.claims.fibre_bound
            && self.steps.iter().all(|s| s.verdicts.is_none_or(|v| v.all()))
            && self.limit.bad != Some(false)
            && self.limit.below_chain != Some(false)
    }
}
