use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bqo_core::arrays::{is_bad, lt_prime, triangle_pairs};
use bqo_core::format::{
    load_array, load_block, load_family, load_relation, to_json, to_toml, ArrayDoc, FamilyDoc, LoadedArray,
    LoadedTarget, RelationDoc, TargetDoc, Text, TraceDoc,
};
use bqo_core::gadget::{carrier_size, GadgetFamily, GadgetSpace};
use bqo_core::relations::{
    check_relation as relation_report, powerset_lift, rado_index, rado_order, rado_rows, ranking_violation,
    FiniteRelation, RankingViolation,
};
use bqo_core::search::{find_bad_array, find_bad_sequence, is_laver_minimal, is_simpson_minimal, run_descent};
use bqo_core::{BlockArray, Error, Result, Target, Window, WindowedBlock};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{RunConfig, WindowSpec};
use crate::Mode;

/// What a command printed and whether the property it checks holds.
pub struct Outcome {
    pub pass: bool,
    pub output: String,
}

fn emit<T: Serialize>(
    config: &RunConfig,
    pass: bool,
    doc: &T,
    human: impl FnOnce() -> Result<String>,
) -> Result<Outcome> {
    let output = if config.json { to_json(doc)? } else { human()? };
    Ok(Outcome { pass, output })
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn commented(header: &[String], body: String) -> String {
    let mut out = String::new();
    for line in header {
        let _ = writeln!(out, "# {line}");
    }
    out + &body
}

#[derive(Serialize)]
struct ErrorDoc {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    explored: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit: Option<u64>,
}

/// The machine-readable form of a failed run.
pub fn error_json(e: &Error) -> String {
    let kind = match e {
        Error::Structural(_) => "structural",
        Error::Precondition(_) => "precondition",
        Error::Domain(_) => "domain",
        Error::Coverage(_) => "coverage",
        Error::Budget(_) => "budget",
        Error::Postcondition(_) => "postcondition",
        Error::Parse(_) => "parse",
    };
    let (explored, limit) = match e {
        Error::Budget(r) => (Some(r.explored), Some(r.limit)),
        _ => (None, None),
    };
    let doc = ErrorDoc {
        error: kind,
        message: e.to_string(),
        explored,
        limit,
    };
    to_json(&doc).unwrap_or_default()
}

#[derive(Serialize)]
struct Checks<T> {
    pass: bool,
    results: Vec<T>,
}

#[derive(Serialize)]
struct RelationCheck {
    file: String,
    size: usize,
    reflexive: bool,
    transitive: bool,
    antisymmetric: bool,
    partial_order: bool,
    well_founded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    missing_reflexive: Option<(String, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intransitive_triple: Option<(String, String, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    symmetric_pair: Option<(String, String)>,
    pass: bool,
}

impl RelationCheck {
    fn new(file: String, r: &FiniteRelation, require_order: bool) -> Self {
        let rep = relation_report(r);
        let l = |p: usize| r.label(p).to_string();
        RelationCheck {
            file,
            size: r.size(),
            reflexive: rep.reflexive,
            transitive: rep.transitive,
            antisymmetric: rep.antisymmetric,
            partial_order: rep.partial_order,
            well_founded: rep.well_founded,
            missing_reflexive: rep.missing_reflexive.map(|p| (l(p), l(p))),
            intransitive_triple: rep.intransitive_triple.map(|(p, q, s)| (l(p), l(q), l(s))),
            symmetric_pair: rep.symmetric_pair.map(|(p, q)| (l(p), l(q))),
            pass: rep.reflexive && (!require_order || (rep.partial_order && rep.well_founded)),
        }
    }

    fn human(&self) -> String {
        let mut out = format!("{}: relation on {} elements\n", self.file, self.size);
        let _ = match &self.missing_reflexive {
            Some((p, q)) => writeln!(out, "  reflexive: no, missing pair ({p}, {q})"),
            None => writeln!(out, "  reflexive: yes"),
        };
        let _ = match &self.intransitive_triple {
            Some((p, q, s)) => writeln!(out, "  transitive: no, {p} R {q} and {q} R {s} but not {p} R {s}"),
            None => writeln!(out, "  transitive: yes"),
        };
        let _ = match &self.symmetric_pair {
            Some((p, q)) => writeln!(out, "  antisymmetric: no, {p} R {q} and {q} R {p}"),
            None => writeln!(out, "  antisymmetric: yes"),
        };
        let _ = writeln!(out, "  partial order: {}", yes(self.partial_order));
        let _ = writeln!(out, "  well-founded: {}", yes(self.well_founded));
        let _ = writeln!(out, "  verdict: {}", if self.pass { "pass" } else { "fail" });
        out
    }
}

pub fn check_relation(config: &RunConfig, files: &[PathBuf], require_order: bool) -> Result<Outcome> {
    let mut results = Vec::new();
    for path in files {
        let r = load_relation(path)?;
        results.push(RelationCheck::new(path.display().to_string(), &r, require_order));
    }
    let pass = results.iter().all(|c| c.pass);
    let doc = Checks { pass, results };
    emit(config, pass, &doc, || {
        Ok(doc.results.iter().map(RelationCheck::human).collect())
    })
}

#[derive(Serialize)]
struct RankingCheck {
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    not_partial_order: Option<bool>,
    /// `(p, q, s)` with `p R q ≤′ s` but not `p R s`.
    #[serde(skip_serializing_if = "Option::is_none")]
    triple: Option<(String, String, String)>,
}

pub fn check_ranking(config: &RunConfig, relation: &Path, ranking: &Path) -> Result<Outcome> {
    let r = load_relation(relation)?;
    let rk = bqo_core::format::load_ranking(ranking, &r)?;
    let l = |p: usize| r.label(p).to_string();
    let doc = match ranking_violation(&r, &rk)? {
        None => RankingCheck {
            valid: true,
            not_partial_order: None,
            triple: None,
        },
        Some(RankingViolation::NotPartialOrder) => RankingCheck {
            valid: false,
            not_partial_order: Some(true),
            triple: None,
        },
        Some(RankingViolation::Triple(p, q, s)) => RankingCheck {
            valid: false,
            not_partial_order: None,
            triple: Some((l(p), l(q), l(s))),
        },
    };
    emit(config, doc.valid, &doc, || {
        Ok(match (&doc.triple, doc.not_partial_order) {
            (Some((p, q, s)), _) => format!("ranking: invalid, ({p}, {q}, {s}): {p} R {q} ≤′ {s} but not {p} R {s}\n"),
            (None, Some(_)) => "ranking: invalid, not a well-founded partial order\n".into(),
            _ => "ranking: valid\n".into(),
        })
    })
}

#[derive(Serialize)]
struct BlockCheck {
    file: String,
    valid: bool,
    report: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    barrier: Option<bool>,
}

pub fn check_block(config: &RunConfig, files: &[PathBuf]) -> Result<Outcome> {
    let mut results = Vec::new();
    for path in files {
        let b = load_block(path)?;
        let report = b.validate();
        let valid = report.is_valid();
        results.push(BlockCheck {
            file: path.display().to_string(),
            valid,
            report: report.summary(),
            barrier: if valid { Some(b.is_barrier()?) } else { None },
        });
    }
    let pass = results.iter().all(|c| c.valid);
    let doc = Checks { pass, results };
    emit(config, pass, &doc, || {
        Ok(doc
            .results
            .iter()
            .map(|c| match c.barrier {
                Some(barrier) => format!("{}: block: valid, barrier: {}\n", c.file, yes(barrier)),
                None => format!("{}: block: invalid, {}\n", c.file, c.report),
            })
            .collect())
    })
}

#[derive(Serialize)]
struct SearchResult<T> {
    found: bool,
    explored: u64,
    limit: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<T>,
}

pub fn bad_seq(config: &RunConfig, relation: &Path, length: usize) -> Result<Outcome> {
    let r = load_relation(relation)?;
    let mut ctx = config.search();
    let found = find_bad_sequence(&r, length, &mut ctx)?;
    let doc = SearchResult {
        found: found.is_some(),
        explored: ctx.budget.used(),
        limit: ctx.budget.limit(),
        result: found.map(|s| s.iter().map(|&p| r.label(p).to_string()).collect::<Vec<_>>()),
    };
    emit(config, true, &doc, || {
        Ok(match &doc.result {
            Some(seq) => format!("bad sequence of length {length}: {}\n", seq.join(", ")),
            None => format!(
                "none: no bad sequence of length {length} (explored {} of at most {})\n",
                doc.explored, doc.limit
            ),
        })
    })
}

/// Where the values of a searched array come from.
pub enum TargetSource {
    Relation {
        relation: PathBuf,
        ranking: Option<PathBuf>,
    },
    Gadget(PathBuf),
}

fn load_target(config: &RunConfig, source: &TargetSource) -> Result<LoadedTarget> {
    let s = |p: &Path| p.display().to_string();
    let doc = match source {
        TargetSource::Relation { relation, ranking } => TargetDoc {
            relation_file: Some(s(relation)),
            ranking_file: ranking.as_deref().map(s),
            ..TargetDoc::default()
        },
        TargetSource::Gadget(family) => TargetDoc::gadget(family),
    };
    doc.load(&Text::new("command line", "")?, config.gadget_cap())
}

fn array_toml(header: &[String], f: &BlockArray, target: &TargetDoc) -> Result<String> {
    Ok(commented(header, to_toml(&ArrayDoc::from_array(f, target.clone()))?))
}

pub fn bad_array(config: &RunConfig, source: &TargetSource, window: &WindowSpec, rank: usize) -> Result<Outcome> {
    let target = load_target(config, source)?;
    let mut ctx = config.search();
    let found = find_bad_array(&target.target, &window.0, rank, &mut ctx)?;
    let (explored, limit) = (ctx.budget.used(), ctx.budget.limit());
    match found {
        Some(f) => {
            let doc = ArrayDoc::from_array(&f, target.doc.clone());
            emit(config, true, &doc, || {
                array_toml(
                    &[
                        format!("bad array over {} at rank {}", window.0, f.block().rank()),
                        format!("{f}"),
                        format!("explored {explored} of at most {limit}"),
                    ],
                    &f,
                    &target.doc,
                )
            })
        }
        None => {
            let doc = SearchResult::<()> {
                found: false,
                explored,
                limit,
                result: None,
            };
            emit(config, true, &doc, || {
                Ok(format!(
                    "none: no bad array over {} at rank at most {rank} (explored {explored} of at most {limit})\n",
                    window.0
                ))
            })
        }
    }
}

fn load(config: &RunConfig, path: &Path) -> Result<LoadedArray> {
    load_array(path, config.gadget_cap())
}

#[derive(Serialize)]
struct MinBadDoc {
    mode: Mode,
    rank: usize,
    minimal: bool,
    explored: u64,
    limit: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    counterexample: Option<ArrayDoc>,
    array: ArrayDoc,
}

pub fn min_bad(config: &RunConfig, path: &Path, mode: Mode, rank: Option<usize>) -> Result<Outcome> {
    let loaded = load(config, path)?;
    let f = &loaded.array;
    let k = f.block().rank();
    let mut ctx = config.search();
    let (rank, m) = match mode {
        Mode::Simpson => {
            let rank = rank.unwrap_or(k);
            (rank, is_simpson_minimal(f, rank, &mut ctx)?)
        }
        Mode::Laver => {
            let rank = rank.unwrap_or(k + 1);
            (rank, is_laver_minimal(f, rank, &mut ctx)?)
        }
    };
    let target = &loaded.target.doc;
    let doc = MinBadDoc {
        mode,
        rank,
        minimal: m.minimal,
        explored: ctx.budget.used(),
        limit: ctx.budget.limit(),
        counterexample: m
            .counterexample
            .as_ref()
            .map(|g| ArrayDoc::from_array(g, target.clone())),
        array: ArrayDoc::from_array(f, target.clone()),
    };
    emit(config, m.minimal, &doc, || {
        let mut header = vec![
            format!("{mode:?} minimal at rank {rank}: {}", yes(m.minimal)).to_lowercase(),
            format!("array: {f}"),
        ];
        if let Some(g) = &m.counterexample {
            header.push(format!("below: {g}"));
        }
        header.push(format!("explored {} of at most {}", doc.explored, doc.limit));
        Ok(commented(&header, to_toml(&doc)?))
    })
}

pub fn descend(config: &RunConfig, path: &Path, rank: Option<usize>, max_steps: usize) -> Result<Outcome> {
    let loaded = load(config, path)?;
    let f0 = &loaded.array;
    let rank = rank.unwrap_or(f0.block().rank() + 1);
    let mut ctx = config.search();
    let trace = run_descent(f0, max_steps, rank, &mut ctx)?;
    let doc = TraceDoc::new(&trace, loaded.target.doc.clone())?;
    let pass = doc.all_pass();
    emit(config, pass, &doc, || {
        let mut header = vec![format!(
            "descent at rank {rank}: {} steps, p = {:?}",
            trace.p_values.len(),
            trace.p_values
        )];
        for (i, f) in trace.chain.iter().enumerate() {
            header.push(format!("f{i} = {f}"));
        }
        header.push(format!("checks: {}", if pass { "pass" } else { "fail" }));
        Ok(commented(&header, to_toml(&doc)?))
    })
}

/// Where `gadget build` gets its family.
pub enum FamilySource {
    File(PathBuf),
    Random {
        size: usize,
        max_points: usize,
        omega_bound: u32,
        write_to: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct GadgetBuildDoc {
    family_size: usize,
    omega_bound: u32,
    carrier_size: usize,
    ranking_valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    non_transitivity_witness: Option<(String, String, String)>,
    canonical_window: Vec<u32>,
    canonical_bad: bool,
    family: FamilyDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    canonical: Option<ArrayDoc>,
}

fn write_family(path: &Path, family: &GadgetFamily) -> Result<PathBuf> {
    let body = to_toml(&FamilyDoc::from_family(family))?;
    std::fs::write(path, body)
        .and_then(|_| std::fs::canonicalize(path))
        .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))
}

pub fn gadget_build(
    config: &RunConfig,
    source: FamilySource,
    window: Option<&WindowSpec>,
    write_canonical: Option<&Path>,
) -> Result<Outcome> {
    let (family, path) = match source {
        FamilySource::File(path) => {
            let family = load_family(&path)?;
            let abs = std::fs::canonicalize(&path).map_err(|e| Error::Domain(e.to_string()))?;
            (family, Some(abs))
        }
        FamilySource::Random {
            size,
            max_points,
            omega_bound,
            write_to,
        } => {
            if size == 0 || max_points == 0 {
                return Err(Error::Domain("--size and --max-points must be positive".into()));
            }
            let family = GadgetFamily::random(
                &mut ChaCha8Rng::seed_from_u64(config.seed),
                size,
                max_points,
                omega_bound,
            );
            let path = write_to.map(|p| write_family(&p, &family)).transpose()?;
            (family, path)
        }
    };
    if carrier_size(&family).is_none_or(|n| n > config.gadget_cap()) {
        return Err(Error::Budget(bqo_core::error::BudgetReport {
            context: "gadget carrier".into(),
            explored: carrier_size(&family).unwrap_or(u64::MAX).min(i64::MAX as u64),
            limit: config.gadget_cap(),
        }));
    }
    let family_doc = FamilyDoc::from_family(&family);
    let len = family.len() as u32;
    let space = GadgetSpace::build(family, config.gadget_cap())?;
    let window = window.map_or_else(|| Window::range(0, len.saturating_sub(1)), |w| w.0.clone());
    let canonical = space.canonical_bad_array(&window)?;
    let canonical_bad = is_bad(&canonical)?.bad_in_window;
    let ranking_valid = space.validate()?;
    let l = |p: usize| space.target().label(p).to_string();
    let doc = GadgetBuildDoc {
        family_size: space.family().len(),
        omega_bound: space.family().omega_bound(),
        carrier_size: space.size(),
        ranking_valid,
        non_transitivity_witness: space.non_transitivity_witness().map(|(p, q, s)| (l(p), l(q), l(s))),
        canonical_window: window.points().to_vec(),
        canonical_bad,
        family: family_doc,
        canonical: path
            .as_ref()
            .map(|p| ArrayDoc::from_array(&canonical, TargetDoc::gadget(p))),
    };
    if let Some(out) = write_canonical {
        let doc = doc
            .canonical
            .as_ref()
            .ok_or_else(|| Error::Domain("a generated family needs --write-family to be referenced".into()))?;
        std::fs::write(out, to_toml(doc)?)
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", out.display())))?;
    }
    emit(config, ranking_valid && canonical_bad, &doc, || {
        let mut out = format!(
            "gadget: {} members, omega bound {}, {} sequences\n",
            doc.family_size, doc.omega_bound, doc.carrier_size
        );
        let _ = writeln!(out, "ranking: {}", if ranking_valid { "valid" } else { "invalid" });
        let _ = match &doc.non_transitivity_witness {
            Some((p, q, s)) => writeln!(
                out,
                "non-transitivity witness: {p} R {q} and {q} R {s} but not {p} R {s}"
            ),
            None => writeln!(out, "non-transitivity witness: none, the relation is transitive"),
        };
        let _ = writeln!(out, "canonical array over {window}: {canonical}");
        let _ = writeln!(out, "canonical array bad: {}", yes(canonical_bad));
        if let Some(p) = &path {
            let _ = writeln!(out, "family file: {}", p.display());
        }
        Ok(out)
    })
}

fn require_gadget(loaded: &LoadedArray) -> Result<&Arc<GadgetSpace>> {
    loaded
        .target
        .gadget
        .as_ref()
        .ok_or_else(|| Error::Precondition("the array does not take values in a gadget space".into()))
}

#[derive(Serialize)]
struct DecodeDoc {
    coord: usize,
    decode: bool,
    decode_constrained: bool,
}

pub fn gadget_decode(config: &RunConfig, path: &Path, coord: usize) -> Result<Outcome> {
    let loaded = load(config, path)?;
    let space = require_gadget(&loaded)?;
    if coord >= space.family().len() {
        return Err(Error::Domain(format!("no family member {coord}")));
    }
    let doc = DecodeDoc {
        coord,
        decode: space.decode(&loaded.array, coord)?,
        decode_constrained: space.decode_constrained(&loaded.array, coord)?,
    };
    emit(config, true, &doc, || {
        Ok(format!(
            "coordinate {coord}: decode {}, on constrained elements {}\n",
            yes(doc.decode),
            yes(doc.decode_constrained)
        ))
    })
}

pub fn gadget_substitute(config: &RunConfig, path: &Path, coord: usize, with: &Path) -> Result<Outcome> {
    let loaded = load(config, path)?;
    let space = require_gadget(&loaded)?;
    let h = load(config, with)?;
    let g = space.substitute(&loaded.array, coord, &h.array)?;
    let bad = is_bad(&g)?.bad_in_window;
    let below = lt_prime(&g, &loaded.array)?;
    let doc = ArrayDoc::from_array(&g, loaded.target.doc.clone());
    emit(config, bad && below, &doc, || {
        array_toml(
            &[
                format!("coordinate {coord} replaced: {g}"),
                format!("bad: {}, strictly below the input: {}", yes(bad), yes(below)),
            ],
            &g,
            &loaded.target.doc,
        )
    })
}

#[derive(Serialize)]
struct RadoDemo {
    n: usize,
    too_small: bool,
    order_check: RelationCheck,
    rows: Vec<String>,
    bad_sequence: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    array_bad: Option<bool>,
    /// Pairs `s ◁ t` inside the block, none of which has `f(s) ≤ f(t)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pairs_checked: Option<usize>,
    order: RelationDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    array: Option<ArrayDoc>,
}

/// The array `{i, j} ↦ (i, j)` on `[{0, …, n−1}]²`.
fn rado_array(n: usize, target: Arc<Target>) -> Result<BlockArray> {
    let block = WindowedBlock::uniform(Window::range(0, n as u32 - 1), 2);
    BlockArray::from_fn(block, target, |s| {
        rado_index(n, s.as_slice()[0] as usize, s.as_slice()[1] as usize)
    })
}

pub fn demo_rado(config: &RunConfig, n: usize) -> Result<Outcome> {
    if !(2..=10).contains(&n) {
        return Err(Error::Domain(format!("the demonstration takes 2 <= n <= 10, got {n}")));
    }
    let order = rado_order(n)?;
    let check = RelationCheck::new(format!("rado({n})"), &order, true);
    let rows = rado_rows(n);
    let lifted = powerset_lift(&order, &rows)?;
    let too_small = rows.len() < 2;
    let mut ctx = config.search();
    let sequence = find_bad_sequence(&lifted, rows.len(), &mut ctx)?.unwrap_or_default();
    let (array, verdict) = if too_small {
        (None, None)
    } else {
        let target = Arc::new(Target::unranked(order.clone())?);
        let f = rado_array(n, target)?;
        let bad = is_bad(&f)?;
        let pairs = triangle_pairs(f.block()).len();
        (Some(f), Some((bad.bad_in_window, pairs)))
    };
    let doc = RadoDemo {
        n,
        too_small,
        rows: (0..lifted.size()).map(|i| lifted.label(i).to_string()).collect(),
        bad_sequence: sequence.iter().map(|&i| lifted.label(i).to_string()).collect(),
        array_bad: verdict.map(|v| v.0),
        pairs_checked: verdict.map(|v| v.1),
        order: RelationDoc::from_relation(&order),
        array: array
            .as_ref()
            .map(|f| ArrayDoc::from_array(f, TargetDoc::inline(f.target()))),
        order_check: check,
    };
    let pass =
        doc.order_check.pass && (too_small || (doc.bad_sequence.len() == rows.len() && doc.array_bad == Some(true)));
    emit(config, pass, &doc, || {
        let mut out = format!("Rado order on n = {n}: {} elements\n", order.size());
        let _ = writeln!(
            out,
            "  partial order: {}, well-founded: {}",
            yes(doc.order_check.partial_order),
            yes(doc.order_check.well_founded)
        );
        if too_small {
            let _ = writeln!(out, "powerset rows: too small, a single row gives no bad sequence");
            return Ok(out);
        }
        let _ = writeln!(
            out,
            "powerset rows: bad sequence of length {}: {}",
            doc.bad_sequence.len(),
            doc.bad_sequence.join(" ")
        );
        if let (Some(f), Some((bad, pairs))) = (&array, verdict) {
            let _ = writeln!(out, "rank-2 array over {}: {f}", f.block().window());
            let _ = writeln!(
                out,
                "  bad in window: {}, no s ◁ t with f(s) R f(t) among {pairs} pairs",
                yes(bad)
            );
        }
        Ok(out)
    })
}
