//! JSON views of the core results and the per-structure CSV export.

use std::io::Write;

use num_traits::ToPrimitive;
use serde::Serialize;
use tamealt_core::census::{
    BoundKind, CensusKind, CensusReport, HallCount, IsoClassReport, Mode, StructureRecord, Z_99,
};

use crate::formats::{rational_string, signature_spec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountsJson {
    pub total: u64,
    pub minimal: u64,
    pub minimal_nontrivial_aut: u64,
    pub one_dim: u64,
    pub oracle_disagreements: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusJson {
    pub census: &'static str,
    pub signature: String,
    pub k: usize,
    pub p: u32,
    pub mode: &'static str,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub counts: CountsJson,
    pub successes: u64,
    pub fraction: String,
    pub fraction_f64: f64,
    pub confidence: f64,
    pub interval: [f64; 2],
    pub bound: String,
    pub bound_f64: f64,
    pub bound_kind: &'static str,
    pub verdict: &'static str,
    pub pass: bool,
    pub notes: Vec<[String; 2]>,
}

pub fn census_kind_name(kind: CensusKind) -> &'static str {
    match kind {
        CensusKind::Minimality => "minimality",
        CensusKind::Automorphisms => "autos",
        CensusKind::OneDim => "onedim",
    }
}

impl From<&CensusReport> for CensusJson {
    fn from(r: &CensusReport) -> Self {
        let (mode, samples, seed) = match r.mode {
            Mode::Exhaustive => ("exhaustive", None, None),
            Mode::Sampled { samples, seed } => ("sampled", Some(samples), Some(seed)),
        };
        let t = &r.tally;
        Self {
            census: census_kind_name(r.kind),
            signature: signature_spec(&r.signature),
            k: r.k,
            p: r.p,
            mode,
            samples,
            seed,
            counts: CountsJson {
                total: t.total,
                minimal: t.minimal,
                minimal_nontrivial_aut: t.minimal_nontrivial_aut,
                one_dim: t.one_dim,
                oracle_disagreements: t.oracle_disagreements,
            },
            successes: r.successes,
            fraction: rational_string(&r.fraction),
            fraction_f64: r.fraction_f64(),
            confidence: 0.99,
            interval: [r.interval.0, r.interval.1],
            bound: rational_string(&r.bound),
            bound_f64: r.bound.to_f64().unwrap_or(f64::NAN),
            bound_kind: match r.bound_kind {
                BoundKind::Lower => "lower",
                BoundKind::Upper => "upper",
                BoundKind::Approximate => "approximate",
            },
            verdict: r.verdict.as_str(),
            pass: !matches!(r.verdict, tamealt_core::census::Verdict::Fail),
            notes: r
                .notes
                .iter()
                .cloned()
                .map(|(a, b)| [a, b])
                .chain([["z".to_owned(), Z_99.to_string()]])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsoJson {
    pub signature: String,
    pub k: usize,
    pub p: u32,
    pub d: usize,
    pub structures: u64,
    pub minimal_trivial_aut: u64,
    pub classes: u64,
    pub bound: String,
    pub within_hypotheses: bool,
    pub verdict: &'static str,
    pub pass: bool,
}

impl From<&IsoClassReport> for IsoJson {
    fn from(r: &IsoClassReport) -> Self {
        Self {
            signature: signature_spec(&r.signature),
            k: r.k,
            p: r.p,
            d: r.d,
            structures: r.structures,
            minimal_trivial_aut: r.minimal_trivial_aut,
            classes: r.classes,
            bound: r.bound.to_string(),
            within_hypotheses: r.within_hypotheses,
            verdict: match (r.pass, r.within_hypotheses) {
                (true, true) => "pass",
                (true, false) => "pass, outside hypothesis p > 3 + d + 4√(d-1)",
                (false, true) => "fail",
                (false, false) => "below bound, outside hypothesis p > 3 + d + 4√(d-1)",
            },
            pass: r.pass || !r.within_hypotheses,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HallJson {
    pub group: &'static str,
    pub order: usize,
    pub generating_pairs: usize,
    pub aut_order: usize,
    pub classes: usize,
}

impl From<&HallCount> for HallJson {
    fn from(h: &HallCount) -> Self {
        Self {
            group: h.group.name(),
            order: h.order,
            generating_pairs: h.generating_pairs,
            aut_order: h.aut_order,
            classes: h.classes,
        }
    }
}

fn flag(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

/// CSV writer for per-structure verdicts.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(w: W) -> csv::Result<Self> {
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record([
            "index",
            "encoding",
            "minimal",
            "minimal_oracle",
            "nontrivial_aut",
            "one_dim",
        ])?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, r: &StructureRecord) -> csv::Result<()> {
        let enc: String = r.encoding.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ");
        self.inner.write_record([
            r.index.to_string().as_str(),
            &enc,
            flag(r.minimal),
            flag(r.minimal_oracle),
            flag(r.nontrivial_aut),
            flag(r.one_dim),
        ])
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}
