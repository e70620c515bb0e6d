//! End-to-end action runs: sample a minimal structure with trivial
//! automorphisms, build Ω, the generator permutations and a BSGS.

use serde::Serialize;
use serde_json::{json, Value};
use tamealt_core::action::{
    factorial, generator_permutations, parity_bound, recognize_alt_sym, schreier_sims, tuple_orbits,
    ActionError, GroupKind, OmegaIndex, Perm,
};
use tamealt_core::algebra::{automorphisms, is_minimal, AlgebraError, AlgebraStructure};
use tamealt_core::ffield::{is_prime, PrimeField};
use tamealt_core::operad::Signature;
use tamealt_core::rng;
use tamealt_core::tame::{GammaGenerators, TameError};

use crate::formats::{signature_spec, structure_to_json, ActionBundle};

/// Structures tried before giving up.
pub const SAMPLE_BUDGET: u64 = 10_000;

/// Largest `p^{nk}`.
pub const TUPLE_BUDGET: u64 = 10_000_000;

/// Machine-readable outcome of a claim check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub claim: String,
    pub parameters: Value,
    pub measured: Value,
    pub bound: Value,
    pub pass: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error(
        "no minimal structure with trivial automorphisms in {tries} tries \
         ({minimal} minimal, none with trivial Aut)"
    )]
    Budget { tries: u64, minimal: u64 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Tame(#[from] TameError),
    #[error(transparent)]
    Action(#[from] ActionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineParams {
    pub p: u32,
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub big_n: u64,
    pub seed: u64,
}

impl PipelineParams {
    pub fn validate(&self) -> Result<Signature, PipelineError> {
        let bad = |m: String| Err(PipelineError::Invalid(m));
        if !is_prime(self.p) {
            return bad(format!("{} is not prime", self.p));
        }
        if self.big_n == 0 || self.big_n.is_multiple_of(u64::from(self.p)) {
            return bad(format!("N = {} must be nonzero and prime to p = {}", self.big_n, self.p));
        }
        if self.k == 0 || self.d == 0 {
            return bad("k and d must be positive".into());
        }
        if self.n <= self.d.max(2) {
            return bad(format!("need n > max(d, 2), got n = {}, d = {}", self.n, self.d));
        }
        let size = u64::from(self.p)
            .checked_pow((self.n * self.k) as u32)
            .filter(|&s| s <= TUPLE_BUDGET);
        if size.is_none() {
            return bad(format!("p^(nk) exceeds {TUPLE_BUDGET}"));
        }
        Signature::with_arities(&[2, self.d]).map_err(|e| PipelineError::Invalid(e.to_string()))
    }

    fn json(&self) -> Value {
        json!({"p": self.p, "k": self.k, "n": self.n, "d": self.d, "N": self.big_n, "seed": self.seed})
    }
}

/// The first sample (stream `i` of the seed) that is minimal with
/// automorphism group equal to the scalar group.
pub fn sample_structure(
    sig: &Signature,
    k: usize,
    p: u32,
    seed: u64,
) -> Result<(u64, AlgebraStructure), PipelineError> {
    let field = PrimeField::new(p).map_err(AlgebraError::from)?;
    let mut minimal = 0;
    for i in 0..SAMPLE_BUDGET {
        let alg = AlgebraStructure::random_with(sig, k, field, &mut rng::stream(seed, i))?;
        if !is_minimal(&alg) {
            continue;
        }
        minimal += 1;
        if automorphisms(&alg)?.is_trivial(sig) {
            return Ok((i, alg));
        }
    }
    Err(PipelineError::Budget {
        tries: SAMPLE_BUDGET,
        minimal,
    })
}

/// Everything an action run produces.
#[derive(Debug, Clone)]
pub struct ActionRun {
    pub params: PipelineParams,
    pub sample_index: u64,
    pub structure: AlgebraStructure,
    pub generators: GammaGenerators,
    pub perms: Vec<Perm>,
    pub tuple_orbit_sizes: Vec<usize>,
    pub order: num_bigint::BigUint,
    pub kind: GroupKind,
}

impl ActionRun {
    pub fn degree(&self) -> usize {
        self.perms.first().map_or(0, Perm::degree)
    }

    pub fn bundle(&self) -> ActionBundle {
        ActionBundle::from_perms(
            self.generators
                .generators()
                .iter()
                .zip(&self.perms)
                .map(|(g, p)| (g.name.clone(), p)),
        )
    }
}

pub fn run_action(params: PipelineParams) -> Result<ActionRun, PipelineError> {
    let sig = params.validate()?;
    let (sample_index, alg) = sample_structure(&sig, params.k, params.p, params.seed)?;
    run_action_on(params, sample_index, alg)
}

/// The pipeline on a given structure, which must be minimal.
pub fn run_action_on(
    params: PipelineParams,
    sample_index: u64,
    alg: AlgebraStructure,
) -> Result<ActionRun, PipelineError> {
    let aut = automorphisms(&alg)?;
    let omega = OmegaIndex::build(&alg, &aut, params.n)?;
    let generators = GammaGenerators::new(params.n, params.big_n, alg.signature().clone())?;
    let compiled = generators.compile(&alg)?;
    let perms = generator_permutations(&omega, &compiled)?;
    let mut tuple_orbit_sizes: Vec<usize> = tuple_orbits(&compiled, alg.field(), alg.k())?
        .iter()
        .map(Vec::len)
        .collect();
    tuple_orbit_sizes.sort_unstable();
    let degree = omega.len();
    let bound = parity_bound(&perms, degree);
    let bsgs = schreier_sims(&perms, degree, Some(&bound), params.seed)?;
    let kind = recognize_alt_sym(&bsgs, perms.iter().all(Perm::is_even));
    Ok(ActionRun {
        params,
        sample_index,
        structure: alg,
        generators,
        perms,
        tuple_orbit_sizes,
        order: bsgs.order(),
        kind,
    })
}

pub fn kind_name(kind: GroupKind) -> &'static str {
    match kind {
        GroupKind::Alternating => "Alt",
        GroupKind::Symmetric => "Sym",
        GroupKind::Other => "other",
    }
}

/// Two orbits on `A^n` (the zero tuple and the rest) and an alternating or
/// symmetric image on Ω.
pub fn verdict_of(run: &ActionRun) -> Verdict {
    let p = &run.params;
    let tuples = u64::from(p.p).pow((p.n * p.k) as u32);
    let two_orbits = run.tuple_orbit_sizes == [1, (tuples - 1) as usize];
    let m = run.degree();
    let orders: serde_json::Map<String, Value> = run
        .generators
        .generators()
        .iter()
        .zip(&run.perms)
        .map(|(g, perm)| (g.name.clone(), Value::String(perm.order().to_string())))
        .collect();
    Verdict {
        claim: "Γ has two orbits on A^n (0 and the rest) and acts on Ω = (A^n ∖ 0)/Aut(A) \
                as the full alternating or symmetric group"
            .into(),
        parameters: p.json(),
        measured: json!({
            "signature": signature_spec(run.structure.signature()),
            "sample_index": run.sample_index,
            "structure": structure_to_json(&run.structure),
            "omega": m,
            "tuple_orbit_sizes": run.tuple_orbit_sizes,
            "two_orbits": two_orbits,
            "order": run.order.to_string(),
            "group": format!("{}({m})", kind_name(run.kind)),
            "generators_even": run.perms.iter().all(Perm::is_even),
            "generator_orders": orders,
        }),
        bound: json!({
            "alternating_order": (factorial(m) / 2u32).to_string(),
            "symmetric_order": factorial(m).to_string(),
        }),
        pass: two_orbits && run.kind != GroupKind::Other,
    }
}

pub fn verify_action_pipeline(params: PipelineParams) -> Result<Verdict, PipelineError> {
    Ok(verdict_of(&run_action(params)?))
}
