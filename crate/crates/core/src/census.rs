//! Exhaustive and sampled censuses of algebra structures, the count of
//! isomorphism classes of minimal structures with trivial automorphisms,
//! and Hall's count of generating pairs up to automorphism.
//!
//! Work is indexed: exhaustive item `i` is the structure with base-`p`
//! digit encoding `i`, sampled item `i` is drawn from stream `i` of the run
//! seed. A [`Tally`] over any split of `0..len` merges to the same counts.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::action::{group_elements, ActionError, Perm};
use crate::algebra::{
    automorphisms, canonical_form, general_linear_group, has_one_dim_subalgebra, is_minimal,
    is_minimal_oracle, AlgebraError, AlgebraStructure,
};
use crate::ffield::{FieldError, PrimeField};
use crate::operad::Signature;
use crate::rng;

/// Largest structure space enumerated exhaustively.
pub const EXHAUSTIVE_BUDGET: u64 = 1 << 24;

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CensusError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error("structure space has {total} elements, exhaustive budget is {budget}")]
    Budget { total: String, budget: u64 },
    #[error("sample count must be positive")]
    NoSamples,
    #[error("index {0} is outside the census")]
    IndexOutOfRange(u64),
    #[error("isomorphism class count needs a signature with a binary operation and one more")]
    IsoSignature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CensusKind {
    Minimality,
    Automorphisms,
    OneDim,
}

/// What one structure turned out to be. Fields a census kind does not need
/// stay `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureRecord {
    pub index: u64,
    pub encoding: Vec<u32>,
    pub minimal: Option<bool>,
    pub minimal_oracle: Option<bool>,
    pub nontrivial_aut: Option<bool>,
    pub one_dim: Option<bool>,
}

/// Mergeable counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Tally {
    pub total: u64,
    pub minimal: u64,
    pub minimal_nontrivial_aut: u64,
    pub one_dim: u64,
    pub oracle_disagreements: u64,
}

impl Tally {
    pub fn record(&mut self, r: &StructureRecord) {
        self.total += 1;
        self.minimal += u64::from(r.minimal == Some(true));
        self.minimal_nontrivial_aut +=
            u64::from(r.minimal == Some(true) && r.nontrivial_aut == Some(true));
        self.one_dim += u64::from(r.one_dim == Some(true));
        self.oracle_disagreements +=
            u64::from(r.minimal_oracle.is_some() && r.minimal_oracle != r.minimal);
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.total += other.total;
        self.minimal += other.minimal;
        self.minimal_nontrivial_aut += other.minimal_nontrivial_aut;
        self.one_dim += other.one_dim;
        self.oracle_disagreements += other.oracle_disagreements;
        self
    }
}

/// A validated census request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusParams {
    kind: CensusKind,
    sig: Signature,
    k: usize,
    field: PrimeField,
    mode: Mode,
}

/// `p^{Σ_s k^{ar(s)+1}}`.
pub fn structure_count(sig: &Signature, k: usize, p: u32) -> BigUint {
    BigUint::from(p).pow(AlgebraStructure::parameter_count(sig, k) as u32)
}

impl CensusParams {
    pub fn new(
        kind: CensusKind,
        sig: Signature,
        k: usize,
        p: u32,
        mode: Mode,
    ) -> Result<Self, CensusError> {
        let field = PrimeField::new(p)?;
        if k == 0 {
            return Err(AlgebraError::ZeroDimension.into());
        }
        match mode {
            Mode::Exhaustive => {
                let total = structure_count(&sig, k, p);
                if total > BigUint::from(EXHAUSTIVE_BUDGET) {
                    return Err(CensusError::Budget {
                        total: total.to_string(),
                        budget: EXHAUSTIVE_BUDGET,
                    });
                }
            }
            Mode::Sampled { samples: 0, .. } => return Err(CensusError::NoSamples),
            Mode::Sampled { .. } => {}
        }
        Ok(Self {
            kind,
            sig,
            k,
            field,
            mode,
        })
    }

    pub fn kind(&self) -> CensusKind {
        self.kind
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> u32 {
        self.field.p()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Number of work items.
    pub fn len(&self) -> u64 {
        match self.mode {
            Mode::Exhaustive => structure_count(&self.sig, self.k, self.p())
                .to_u64()
                .unwrap_or(u64::MAX),
            Mode::Sampled { samples, .. } => samples,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn structure(&self, index: u64) -> Result<AlgebraStructure, CensusError> {
        if index >= self.len() {
            return Err(CensusError::IndexOutOfRange(index));
        }
        Ok(match self.mode {
            Mode::Exhaustive => AlgebraStructure::from_index(&self.sig, self.k, self.field, index)?,
            Mode::Sampled { seed, .. } => AlgebraStructure::random_with(
                &self.sig,
                self.k,
                self.field,
                &mut rng::stream(seed, index),
            )?,
        })
    }

    pub fn examine(&self, index: u64) -> Result<StructureRecord, CensusError> {
        let alg = self.structure(index)?;
        let mut r = StructureRecord {
            index,
            encoding: alg.encode(),
            minimal: None,
            minimal_oracle: None,
            nontrivial_aut: None,
            one_dim: None,
        };
        match self.kind {
            CensusKind::Minimality => {
                r.minimal = Some(is_minimal(&alg));
                if self.mode == Mode::Exhaustive {
                    r.minimal_oracle = Some(is_minimal_oracle(&alg)?);
                }
            }
            CensusKind::Automorphisms => {
                let minimal = is_minimal(&alg);
                r.minimal = Some(minimal);
                if minimal {
                    r.nontrivial_aut = Some(!automorphisms(&alg)?.is_trivial(&self.sig));
                }
            }
            CensusKind::OneDim => r.one_dim = Some(has_one_dim_subalgebra(&alg)),
        }
        Ok(r)
    }

    pub fn tally_range(&self, range: Range<u64>) -> Result<Tally, CensusError> {
        let mut t = Tally::default();
        for i in range {
            t.record(&self.examine(i)?);
        }
        Ok(t)
    }
}

/// How the observed fraction is compared with the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// fraction at least the bound
    Lower,
    /// fraction below the bound
    Upper,
    /// fraction within a factor 2 of the bound
    Approximate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The bound is not positive and says nothing.
    Vacuous,
    OutOfDomain,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "bound vacuous, recorded",
            Verdict::OutOfDomain => "out of domain",
        }
    }
}

/// Result of a census.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusReport {
    pub kind: CensusKind,
    pub signature: Signature,
    pub k: usize,
    pub p: u32,
    pub mode: Mode,
    pub tally: Tally,
    pub successes: u64,
    pub fraction: BigRational,
    /// 99% Wilson interval; degenerate in exhaustive mode.
    pub interval: (f64, f64),
    pub bound: BigRational,
    pub bound_kind: BoundKind,
    pub verdict: Verdict,
    /// Reference values reported but not tested.
    pub notes: Vec<(String, String)>,
}

impl CensusReport {
    pub fn fraction_f64(&self) -> f64 {
        self.fraction.to_f64().unwrap_or(f64::NAN)
    }
}

fn rational(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `p^e` for a possibly negative exponent.
pub fn rational_pow(p: u32, e: i64) -> BigRational {
    let base = BigInt::from(p).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(BigInt::one(), base)
    }
}

/// `(1 - |S|)(k - 1)`.
fn density_exponent(sig: &Signature, k: usize) -> i64 {
    (1 - sig.len() as i64) * (k as i64 - 1)
}

/// `1 - 6 p^{(1-|S|)(k-1)}`.
pub fn minimality_bound(sig: &Signature, k: usize, p: u32) -> BigRational {
    BigRational::one() - rational_pow(p, density_exponent(sig, k)) * rational(6, 1)
}

/// `1 - 2 p^{(1-|S|)(k-1)} / (1 - p^{1-|S|})`, the small-ε limit of the
/// sharper estimate.
pub fn sharper_minimality_estimate(sig: &Signature, k: usize, p: u32) -> Option<BigRational> {
    let den = BigRational::one() - rational_pow(p, 1 - sig.len() as i64);
    (!den.is_zero()).then(|| {
        BigRational::one() - rational_pow(p, density_exponent(sig, k)) * rational(2, 1) / den
    })
}

/// `p^{-k}`.
pub fn automorphism_bound(k: usize, p: u32) -> BigRational {
    rational_pow(p, -(k as i64))
}

/// `p^{(1-|S|)(k-1)}`.
pub fn one_dim_estimate(sig: &Signature, k: usize, p: u32) -> BigRational {
    rational_pow(p, density_exponent(sig, k))
}

/// The Wilson interval as floats.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let ph = successes as f64 / nf;
    let z2 = z * z;
    let centre = ph + z2 / (2.0 * nf);
    let half = z * libm::sqrt(ph * (1.0 - ph) / nf + z2 / (4.0 * nf * nf));
    let den = 1.0 + z2 / nf;
    (
        libm::fmax(0.0, (centre - half) / den),
        libm::fmin(1.0, (centre + half) / den),
    )
}

/// The Wilson interval is `{q : (p̂ - q)^2 <= z^2 q(1-q)/n}`; this is the
/// left side minus the right side at `q`, with `z` taken as the exact
/// binary value of the float.
fn wilson_quadratic(successes: u64, n: u64, z: f64, q: &BigRational) -> BigRational {
    let z = BigRational::from_float(z).unwrap_or_else(BigRational::zero);
    let ph = rational(successes, n);
    let d = &ph - q;
    &d * &d - &z * &z * q * (BigRational::one() - q) / rational(n, 1)
}

/// Exact test that the whole Wilson interval lies strictly above `b`.
pub fn wilson_lower_exceeds(successes: u64, n: u64, z: f64, b: &BigRational) -> bool {
    n > 0 && *b < rational(successes, n) && wilson_quadratic(successes, n, z, b).is_positive()
}

/// Exact test that the whole Wilson interval lies strictly below `b`.
pub fn wilson_upper_below(successes: u64, n: u64, z: f64, b: &BigRational) -> bool {
    n > 0 && *b > rational(successes, n) && wilson_quadratic(successes, n, z, b).is_positive()
}

/// Turns merged counts into a report.
pub fn build_report(params: &CensusParams, tally: Tally) -> CensusReport {
    let (sig, k, p) = (&params.sig, params.k, params.p());
    let exhaustive = params.mode == Mode::Exhaustive;
    let n = tally.total;
    let successes = match params.kind {
        CensusKind::Minimality => tally.minimal,
        CensusKind::Automorphisms => tally.minimal_nontrivial_aut,
        CensusKind::OneDim => tally.one_dim,
    };
    let fraction = if n == 0 {
        BigRational::zero()
    } else {
        rational(successes, n)
    };
    let interval = if exhaustive {
        let f = fraction.to_f64().unwrap_or(f64::NAN);
        (f, f)
    } else {
        wilson_interval(successes, n, Z_99)
    };
    let mut notes = Vec::new();
    let (bound, bound_kind, verdict) = match params.kind {
        CensusKind::Minimality => {
            let b = minimality_bound(sig, k, p);
            if let Some(s) = sharper_minimality_estimate(sig, k, p) {
                notes.push(("sharper estimate (informational)".into(), s.to_string()));
            }
            notes.push((
                "constant".into(),
                "tested with 6; a variant of the estimate uses 5".into(),
            ));
            let pass = if b <= BigRational::zero() {
                None
            } else if exhaustive {
                Some(fraction >= b && tally.oracle_disagreements == 0)
            } else {
                Some(wilson_lower_exceeds(successes, n, Z_99, &b))
            };
            let v = match pass {
                None if tally.oracle_disagreements == 0 => Verdict::Vacuous,
                None => Verdict::Fail,
                Some(true) => Verdict::Pass,
                Some(false) => Verdict::Fail,
            };
            (b, BoundKind::Lower, v)
        }
        CensusKind::Automorphisms => {
            let b = automorphism_bound(k, p);
            let pass = if exhaustive {
                fraction < b
            } else {
                wilson_upper_below(successes, n, Z_99, &b)
            };
            let v = if pass { Verdict::Pass } else { Verdict::Fail };
            (b, BoundKind::Upper, v)
        }
        CensusKind::OneDim => {
            let b = one_dim_estimate(sig, k, p);
            let v = if k == 1 {
                Verdict::OutOfDomain
            } else {
                let half = &b / rational(2, 1);
                let double = &b * rational(2, 1);
                if fraction >= half && fraction <= double {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            };
            (b, BoundKind::Approximate, v)
        }
    };
    CensusReport {
        kind: params.kind,
        signature: sig.clone(),
        k,
        p,
        mode: params.mode,
        tally,
        successes,
        fraction,
        interval,
        bound,
        bound_kind,
        verdict,
        notes,
    }
}

/// Serial census.
pub fn run_census(params: &CensusParams) -> Result<CensusReport, CensusError> {
    let tally = params.tally_range(0..params.len())?;
    Ok(build_report(params, tally))
}

pub fn minimality_census(
    sig: &Signature,
    k: usize,
    p: u32,
    mode: Mode,
) -> Result<CensusReport, CensusError> {
    run_census(&CensusParams::new(CensusKind::Minimality, sig.clone(), k, p, mode)?)
}

pub fn automorphism_census(
    sig: &Signature,
    k: usize,
    p: u32,
    mode: Mode,
) -> Result<CensusReport, CensusError> {
    run_census(&CensusParams::new(CensusKind::Automorphisms, sig.clone(), k, p, mode)?)
}

pub fn one_dim_subalgebra_census(
    sig: &Signature,
    k: usize,
    p: u32,
    mode: Mode,
) -> Result<CensusReport, CensusError> {
    run_census(&CensusParams::new(CensusKind::OneDim, sig.clone(), k, p, mode)?)
}

/// Count of isomorphism classes of minimal structures whose automorphism
/// group is the scalar group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsoClassReport {
    pub signature: Signature,
    pub k: usize,
    pub p: u32,
    /// The largest arity.
    pub d: usize,
    pub structures: u64,
    pub minimal_trivial_aut: u64,
    pub classes: u64,
    /// `p^{k^{d+1}}`.
    pub bound: BigUint,
    /// Whether `p > 3 + d + 4√(d-1)`.
    pub within_hypotheses: bool,
    pub pass: bool,
}

/// `p > 3 + d + 4√(d-1)` decided over the integers.
pub fn iso_hypothesis_holds(p: u32, d: usize) -> bool {
    let lhs = i64::from(p) - 3 - d as i64;
    lhs > 0 && lhs * lhs > 16 * (d as i64 - 1)
}

/// Exhaustive count, deduplicated by a canonical form over `GL_k(F_p)`.
pub fn isomorphism_class_count(
    sig: &Signature,
    k: usize,
    p: u32,
) -> Result<IsoClassReport, CensusError> {
    if sig.len() < 2 || sig.arity(0) != 2 {
        return Err(CensusError::IsoSignature);
    }
    let params = CensusParams::new(CensusKind::Automorphisms, sig.clone(), k, p, Mode::Exhaustive)?;
    let gl = general_linear_group(k, params.field)?;
    let mut seen = BTreeSet::new();
    let mut kept = 0;
    for i in 0..params.len() {
        let alg = params.structure(i)?;
        if !is_minimal(&alg) || !automorphisms(&alg)?.is_trivial(sig) {
            continue;
        }
        kept += 1;
        seen.insert(canonical_form(&alg, &gl)?);
    }
    let d = sig.max_arity();
    let bound = BigUint::from(p).pow((k as u32).pow(d as u32 + 1));
    let classes = seen.len() as u64;
    Ok(IsoClassReport {
        signature: sig.clone(),
        k,
        p,
        d,
        structures: params.len(),
        minimal_trivial_aut: kept,
        pass: BigUint::from(classes) >= bound,
        classes,
        bound,
        within_hypotheses: iso_hypothesis_holds(p, d),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HallGroup {
    Alt5,
    Alt4,
    C2,
}

impl HallGroup {
    pub fn name(&self) -> &'static str {
        match self {
            HallGroup::Alt5 => "Alt(5)",
            HallGroup::Alt4 => "Alt(4)",
            HallGroup::C2 => "C2",
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            HallGroup::Alt5 => 5,
            HallGroup::Alt4 => 4,
            HallGroup::C2 => 2,
        }
    }

    /// Permutation generators of the group.
    pub fn generators(&self) -> Vec<Perm> {
        let d = self.degree();
        let cycles: Vec<&[u32]> = match self {
            HallGroup::Alt5 => vec![&[0, 1, 2], &[0, 1, 2, 3, 4]],
            HallGroup::Alt4 => vec![&[0, 1, 2], &[1, 2, 3]],
            HallGroup::C2 => vec![&[0, 1]],
        };
        cycles
            .into_iter()
            .map(|c| Perm::from_cycles(d, &[c]).expect("valid cycle"))
            .collect()
    }
}

/// Generating pairs and their classes under automorphisms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HallCount {
    pub group: HallGroup,
    pub order: usize,
    pub generating_pairs: usize,
    pub aut_order: usize,
    pub classes: usize,
}

/// Brute force over pairs. The automorphisms are conjugations by the
/// symmetric group of the natural action, which normalises each group
/// here and induces its full automorphism group.
pub fn hall_eulerian_check(group: HallGroup) -> Result<HallCount, CensusError> {
    let d = group.degree();
    let elements = group_elements(&group.generators(), d, 1000)
        .ok_or(ActionError::Budget { size: 1001, budget: 1000 })?;
    let order = elements.len();
    let sym = group_elements(
        &[
            Perm::from_cycles(d, &[&[0, 1]])?,
            Perm::from_images((1..d as u32).chain([0]).collect())?,
        ],
        d,
        1000,
    )
    .ok_or(ActionError::Budget { size: 1001, budget: 1000 })?;
    let conj = |s: &Perm, g: &Perm| s.inverse().then(g).then(s);
    // distinct automorphisms, each recorded by its action on the group
    let auts: BTreeSet<Vec<Perm>> = sym
        .iter()
        .map(|s| group.generators().iter().map(|g| conj(s, g)).collect())
        .collect();
    let mut generating = Vec::new();
    for a in &elements {
        for b in &elements {
            let span = group_elements(&[a.clone(), b.clone()], d, order);
            if span.is_some_and(|s| s.len() == order) {
                generating.push((a.clone(), b.clone()));
            }
        }
    }
    let mut classes: BTreeMap<(Perm, Perm), ()> = BTreeMap::new();
    for (a, b) in &generating {
        let rep = sym
            .iter()
            .map(|s| (conj(s, a), conj(s, b)))
            .min()
            .expect("nonempty");
        classes.insert(rep, ());
    }
    Ok(HallCount {
        group,
        order,
        generating_pairs: generating.len(),
        aut_order: auts.len(),
        classes: classes.len(),
    })
}
