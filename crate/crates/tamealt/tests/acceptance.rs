//! Acceptance suite. Prints one line per criterion and exits nonzero if
//! any criterion fails or runs past its time limit.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use tamealt::parallel::{parallel_census, worker_count};
use tamealt::pipeline::{run_action, run_action_on, PipelineParams};
use tamealt_core::action::{
    actions_equivalent, factorial, group_elements, schreier_sims, tuple_orbits, Equivalence,
    GroupKind, Perm,
};
use tamealt_core::algebra::{are_isomorphic, automorphisms, is_minimal, AlgebraStructure};
use tamealt_core::census::{
    hall_eulerian_check, isomorphism_class_count, CensusKind, CensusParams, HallGroup, Mode,
    Verdict,
};
use tamealt_core::ffield::{enumerate_subspaces, gaussian_binomial, sl_order, PrimeField};
use tamealt_core::operad::{evaluate, FreeElement, Signature, Term};
use tamealt_core::rng;
use tamealt_core::spectral::{
    build_delta, check_sl_generation, delta2_spectrum_check, failure_bound, heisenberg_angle,
    sufficient_bound,
};
use tamealt_core::tame::{crt_check, crt_solve, GammaGenerators, GroupWord, Letter, TameError, Transvection};

/// Seeded input generator on the crate's random streams.
struct Rng(rng::Stream);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(rng::stream(seed, 0))
    }

    fn below(&mut self, n: u64) -> u64 {
        rng::below_u64(&mut self.0, n)
    }
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn bb() -> Signature {
    Signature::with_arities(&[2, 2]).unwrap()
}

/// Largest `a/1000` strictly below `x` and smallest strictly above.
fn rational_around(x: f64) -> (BigRational, BigRational) {
    let below = (x * 1000.0).floor() as i64;
    let below = if below as f64 == x * 1000.0 { below - 1 } else { below };
    (q(below, 1000), q(below + 1, 1000))
}

fn c1_delta() -> Check {
    let mut lines = Vec::new();
    for (n, ar) in [(5, 2), (7, 3), (9, 4)] {
        let (lo, _) = rational_around(sufficient_bound(ar));
        let (_, hi) = rational_around(failure_bound(ar));
        ensure(
            build_delta(n, ar, &lo).unwrap().is_positive_definite(),
            format!("({n},{ar}) not PD at {lo}"),
        )?;
        ensure(
            !build_delta(n, ar, &hi).unwrap().is_positive_definite(),
            format!("({n},{ar}) PD at {hi}"),
        )?;
        for eps in [0.1, 0.25, 0.4] {
            ensure(
                delta2_spectrum_check(n, ar, eps).unwrap(),
                format!("Δ2 spectrum ({n},{ar}) at {eps}"),
            )?;
        }
        lines.push(format!("({n},{ar}): PD at {lo}, not at {hi}"));
    }
    Ok(lines.join("; "))
}

fn c2_angle() -> Check {
    let mut worst: f64 = 0.0;
    for p in [2, 3, 5, 7, 11, 13] {
        let h = heisenberg_angle(p).map_err(|e| e.to_string())?;
        let err = (h.cosine - 1.0 / (p as f64).sqrt()).abs();
        ensure(err <= 1e-9, format!("p = {p}: cosine {} off by {err:e}", h.cosine))?;
        worst = worst.max(err);
    }
    Ok(format!("max |cos - p^(-1/2)| = {worst:.2e}"))
}

fn c3_slgen() -> Check {
    let mut out = Vec::new();
    for (n, p, big_n) in [(3, 5, 1), (3, 7, 1), (4, 3, 1)] {
        let r = check_sl_generation(n, p, big_n).map_err(|e| e.to_string())?;
        ensure(r.expected == sl_order(n, p), "closed form order")?;
        ensure(r.generates, format!("SL_{n}(F_{p}): order {} vs {}", r.order, r.expected))?;
        out.push(format!("|SL_{n}(F_{p})| = {}", r.order));
    }
    Ok(out.join(", "))
}

fn random_term(rng: &mut Rng, degree: usize) -> Term {
    if degree == 1 {
        return Term::Var(1 + rng.below(2) as u32);
    }
    let left = 1 + rng.below(degree as u64 - 1) as usize;
    Term::node(0, vec![random_term(rng, left), random_term(rng, degree - left)])
}

fn random_payload(rng: &mut Rng) -> FreeElement {
    loop {
        let mut f = FreeElement::zero();
        for _ in 0..1 + rng.below(4) {
            let degree = 1 + rng.below(3) as usize;
            let t = random_term(rng, degree);
            let c = rng.below(7) as i64 - 3;
            f.add_term(t, q(c, 1));
        }
        if !f.is_zero() {
            return f;
        }
    }
}

fn random_tuple(rng: &mut Rng, n: usize, k: usize, p: u32) -> Vec<Vec<u32>> {
    (0..n)
        .map(|_| (0..k).map(|_| rng.below(u64::from(p)) as u32).collect())
        .collect()
}

fn c4_words() -> Check {
    let sig = Signature::with_arities(&[2]).unwrap();
    let gens = GammaGenerators::new(5, 1, sig.clone()).unwrap();
    let algs: Vec<AlgebraStructure> = (0..3)
        .map(|s| AlgebraStructure::random(&sig, 2, 3, 500 + s).unwrap())
        .collect();
    let compiled: Vec<_> = algs.iter().map(|a| gens.compile(a).unwrap()).collect();
    let mut rng = Rng::new(4);
    let mut longest = 0;
    for i in 0..50 {
        let f = random_payload(&mut rng);
        let w = gens.transvection_word(&f).map_err(|e| e.to_string())?;
        longest = longest.max(w.len());
        let target = Transvection::new(0, f.clone()).unwrap();
        ensure(
            gens.verify_word_symbolic(&w, &target, 4).map_err(|e| e.to_string())?,
            format!("payload #{i} fails symbolically"),
        )?;
        for (alg, c) in algs.iter().zip(&compiled) {
            for _ in 0..1000 {
                let v = random_tuple(&mut rng, 5, 2, 3);
                let mut got = v.clone();
                c.apply_word(&w, &mut got);
                ensure(
                    got == target.apply(&v, alg).unwrap(),
                    format!("payload #{i} disagrees on a tuple"),
                )?;
            }
        }
    }
    Ok(format!("50 payloads, longest word {longest} letters"))
}

fn same_orbit(aut: &tamealt_core::algebra::AutGroup, f: &PrimeField, a: &[u32], b: &[u32]) -> bool {
    aut.elements().iter().any(|m| m.mul_vec(a, f) == b)
}

fn c5_crt() -> Check {
    let sig = bb();
    let field = PrimeField::new(3).unwrap();
    let mut rng = Rng::new(5);
    let mut solved = 0;
    let mut max_degree = 0;
    let mut seed = 0;
    while solved < 20 {
        seed += 1;
        let alg = AlgebraStructure::random(&sig, 2, 3, 1000 + seed).unwrap();
        if !is_minimal(&alg) {
            continue;
        }
        let aut = automorphisms(&alg).unwrap();
        let m = (1 + rng.below(3) as usize).min(aut.orbit_counts().1);
        let mut points: Vec<Vec<u32>> = Vec::new();
        while points.len() < m {
            let a: Vec<u32> = (0..2).map(|_| rng.below(3) as u32).collect();
            if a.iter().all(|&x| x == 0) || points.iter().any(|b| same_orbit(&aut, &field, b, &a)) {
                continue;
            }
            points.push(a);
        }
        let targets: Vec<Vec<u32>> = (0..m)
            .map(|_| (0..2).map(|_| rng.below(3) as u32).collect())
            .collect();
        let s = crt_solve(&alg, &points, &targets, 8).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(crt_check(&alg, &s.element, &points, &targets).unwrap(), "re-evaluation")?;
        max_degree = max_degree.max(s.degree);
        solved += 1;
    }
    // -Id is an automorphism when every arity is odd
    let tern = Signature::with_arities(&[3]).unwrap();
    let mut refuted = 0;
    for seed in 0..60 {
        let alg = AlgebraStructure::random(&tern, 2, 3, seed).unwrap();
        if !is_minimal(&alg) {
            continue;
        }
        let aut = automorphisms(&alg).unwrap();
        let Some(phi) = aut.elements().iter().find(|m| !m.is_identity()) else {
            continue;
        };
        let a1 = vec![0, 1];
        let a2 = phi.mul_vec(&a1, &field);
        let b1 = vec![1, 1];
        let b2 = field.vectors(2).find(|b| *b != phi.mul_vec(&b1, &field)).unwrap();
        ensure(
            crt_solve(&alg, &[a1, a2], &[b1, b2], 8) == Err(TameError::NoSolution { d_max: 8 }),
            format!("same-orbit instance {seed} was solved"),
        )?;
        refuted += 1;
    }
    ensure(refuted > 0, "no same-orbit instance constructed")?;
    Ok(format!(
        "20 solved (max degree {max_degree}), {refuted} same-orbit instances fail at D_max = 8"
    ))
}

fn c6_two_orbits() -> Check {
    let mut out = Vec::new();
    for (k, p) in [(1usize, 3u32), (2, 2)] {
        let sig = bb();
        let gens = GammaGenerators::new(4, 1, sig.clone()).unwrap();
        let mut checked = 0;
        let mut seed = 0;
        while checked < 10 {
            seed += 1;
            let alg = AlgebraStructure::random(&sig, k, p, 2000 + seed).unwrap();
            if !is_minimal(&alg) {
                continue;
            }
            let c = gens.compile(&alg).unwrap();
            let mut sizes: Vec<usize> = tuple_orbits(&c, alg.field(), k)
                .map_err(|e| e.to_string())?
                .iter()
                .map(Vec::len)
                .collect();
            sizes.sort_unstable();
            let total = (p as usize).pow(4 * k as u32);
            ensure(sizes == [1, total - 1], format!("k={k} p={p}: orbit sizes {sizes:?}"))?;
            checked += 1;
        }
        out.push(format!("k={k} p={p}: 10 structures, orbits 1 + {}", (p as usize).pow(4 * k as u32) - 1));
    }
    Ok(out.join("; "))
}

fn c7_alt80() -> Check {
    let run = run_action(PipelineParams { p: 3, k: 1, n: 4, d: 2, big_n: 1, seed: 7 })
        .map_err(|e| e.to_string())?;
    ensure(run.degree() == 80, format!("|Ω| = {}", run.degree()))?;
    ensure(run.order == factorial(80) / 2u32, "order is not 80!/2")?;
    ensure(run.kind == GroupKind::Alternating, "not recognised as Alt(80)")?;
    // a generator whose payload vanishes on A is the identity; the rest must have order 3
    let three = BigUint::from(3u32);
    let one = BigUint::from(1u32);
    let orders: Vec<BigUint> = run.perms.iter().map(Perm::order).collect();
    ensure(
        orders.iter().all(|o| *o == three || *o == one),
        "some generator order is not 3",
    )?;
    let alphas = run.params.n;
    ensure(orders[..alphas].iter().all(|o| *o == three), "some α does not have order 3")?;
    let trivial = orders.iter().filter(|o| **o == one).count();
    Ok(format!(
        "|Ω| = 80, order = 80!/2, {} generators of order 3, {trivial} acting trivially",
        orders.len() - trivial
    ))
}

fn labelled(run: &tamealt::pipeline::ActionRun) -> BTreeMap<String, Perm> {
    run.generators
        .generators()
        .iter()
        .zip(&run.perms)
        .map(|(g, p)| (g.name.clone(), p.clone()))
        .collect()
}

fn c8_inequivalent() -> Check {
    let sig = bb();
    let field = PrimeField::new(3).unwrap();
    let a = AlgebraStructure::from_flat(&sig, 1, field, &[1, 1]).unwrap();
    let b = AlgebraStructure::from_flat(&sig, 1, field, &[1, 2]).unwrap();
    for x in [&a, &b] {
        ensure(is_minimal(x) && automorphisms(x).unwrap().is_trivial(&sig), "not minimal trivial-Aut")?;
    }
    ensure(are_isomorphic(&a, &b).unwrap().is_none(), "structures are isomorphic")?;
    let params = PipelineParams { p: 3, k: 1, n: 4, d: 2, big_n: 1, seed: 0 };
    let ra = run_action_on(params, 0, a).map_err(|e| e.to_string())?;
    let rb = run_action_on(params, 0, b).map_err(|e| e.to_string())?;
    let (la, lb) = (labelled(&ra), labelled(&rb));
    // no short-word refutation, so the exact search decides
    match actions_equivalent(&la, &lb, 0).map_err(|e| e.to_string())? {
        Equivalence::Inequivalent(why) => {
            let same = actions_equivalent(&la, &la, 0).map_err(|e| e.to_string())?;
            ensure(matches!(same, Equivalence::Equivalent(_)), "self-equivalence not found")?;
            Ok(format!("degree 80, inequivalent ({why})"))
        }
        other => Err(format!("expected inequivalent, got {other:?}")),
    }
}

fn census(kind: CensusKind, k: usize, p: u32, mode: Mode) -> tamealt_core::census::CensusReport {
    let params = CensusParams::new(kind, bb(), k, p, mode).unwrap();
    parallel_census(&params, worker_count()).unwrap()
}

fn c9_minimality() -> Check {
    let ex = census(CensusKind::Minimality, 2, 2, Mode::Exhaustive);
    ensure(ex.tally.total == 65536, "exhaustive total")?;
    ensure(ex.tally.oracle_disagreements == 0, format!("{} disagreements", ex.tally.oracle_disagreements))?;
    ensure(ex.verdict == Verdict::Vacuous, "bound should be vacuous at p = 2")?;
    let s = census(CensusKind::Minimality, 2, 7, Mode::Sampled { samples: 10_000, seed: 2024 });
    ensure(s.verdict == Verdict::Pass, format!("CI {:?} vs bound {}", s.interval, s.bound))?;
    Ok(format!(
        "exhaustive {}/65536 minimal, algorithms agree; p=7 sampled {:.4} with CI [{:.4}, {:.4}] > 1/7",
        ex.successes, s.fraction_f64(), s.interval.0, s.interval.1
    ))
}

fn c10_automorphisms() -> Check {
    let ex = census(CensusKind::Automorphisms, 2, 2, Mode::Exhaustive);
    ensure(ex.verdict == Verdict::Pass && ex.fraction < q(1, 4), format!("fraction {}", ex.fraction))?;
    let s = census(CensusKind::Automorphisms, 2, 3, Mode::Sampled { samples: 10_000, seed: 2024 });
    ensure(s.verdict == Verdict::Pass, format!("CI {:?} vs 1/9", s.interval))?;
    Ok(format!(
        "exhaustive {} < 1/4; p=3 sampled CI [{:.4}, {:.4}] < 1/9",
        ex.fraction, s.interval.0, s.interval.1
    ))
}

fn c11_classes() -> Check {
    let mut out = Vec::new();
    for (p, want) in [(5u32, 6u64), (7, 8)] {
        let r = isomorphism_class_count(&bb(), 1, p).map_err(|e| e.to_string())?;
        ensure(r.classes == want, format!("p = {p}: {} classes", r.classes))?;
        ensure(r.pass && r.bound == BigUint::from(p), "bound")?;
        out.push(format!("p={p}: {} >= {}", r.classes, r.bound));
    }
    Ok(out.join(", "))
}

fn c12_hall() -> Check {
    let h = hall_eulerian_check(HallGroup::Alt5).map_err(|e| e.to_string())?;
    ensure(h.classes == 19, format!("{} classes", h.classes))?;
    Ok(format!("{} generating pairs / |Aut| = {} -> {} classes", h.generating_pairs, h.aut_order, h.classes))
}

fn c13_oracles() -> Check {
    let mut subspaces = 0;
    for (k, p) in [(2, 2), (3, 2), (3, 3), (4, 2), (4, 3), (5, 2)] {
        for d in 0..=k {
            let n = enumerate_subspaces(k, d, p).unwrap().count();
            ensure(
                BigUint::from(n) == gaussian_binomial(k, d, p).unwrap(),
                format!("subspaces k={k} d={d} p={p}"),
            )?;
            subspaces += 1;
        }
    }
    let mut rng = Rng::new(13);
    let mut groups = 0;
    let cyc = |d: usize, c: &[u32]| Perm::from_cycles(d, &[c]).unwrap();
    let mut families: Vec<Vec<Perm>> = vec![
        vec![cyc(4, &[0, 1]), cyc(4, &[0, 1, 2, 3])],
        vec![cyc(5, &[0, 1, 2]), cyc(5, &[0, 1, 2, 3, 4])],
        vec![cyc(7, &[0, 1]), cyc(7, &[0, 1, 2, 3, 4, 5, 6])],
        vec![cyc(8, &[0, 1, 2, 3]), cyc(8, &[4, 5, 6, 7])],
    ];
    for _ in 0..30 {
        let d = 4 + rng.below(5) as usize;
        let random_perm = |rng: &mut Rng| {
            let mut img: Vec<u32> = (0..d as u32).collect();
            for i in (1..d).rev() {
                img.swap(i, rng.below(i as u64 + 1) as usize);
            }
            Perm::from_images(img).unwrap()
        };
        families.push(vec![random_perm(&mut rng), random_perm(&mut rng)]);
    }
    for gens in &families {
        let d = gens[0].degree();
        let Some(all) = group_elements(gens, d, 10_000) else {
            continue;
        };
        let b = schreier_sims(gens, d, None, 3).unwrap();
        ensure(b.order() == BigUint::from(all.len()), format!("BSGS order on degree {d}"))?;
        ensure(all.iter().all(|g| b.contains(g)), "membership")?;
        groups += 1;
    }
    // symbolic composition against evaluation in finite algebras
    let sig = Signature::with_arities(&[2]).unwrap();
    let gens = GammaGenerators::new(4, 1, sig.clone()).unwrap();
    let algs: Vec<AlgebraStructure> = (0..3)
        .map(|s| AlgebraStructure::random(&sig, 2, 5, 77 + s).unwrap())
        .collect();
    let mut words = 0;
    for _ in 0..40 {
        let len = 1 + rng.below(6) as usize;
        let mut betas = 0;
        let letters: Vec<Letter> = (0..len)
            .map(|_| {
                let g = rng.below(gens.len() as u64) as usize;
                betas += usize::from(g >= gens.n());
                let l = Letter::new(g);
                if rng.below(2) == 0 {
                    l
                } else {
                    l.inverse()
                }
            })
            .collect();
        let w = GroupWord::from_letters(letters);
        // degrees at most double per β letter, so this cap is exact
        let cap = 1 << betas;
        let phi = gens.compose_symbolic(&w, cap).map_err(|e| e.to_string())?;
        for alg in &algs {
            let c = gens.compile(alg).unwrap();
            for _ in 0..20 {
                let v = random_tuple(&mut rng, 4, 2, 5);
                let mut got = v.clone();
                c.apply_word(&w, &mut got);
                let want: Vec<Vec<u32>> = (0..4)
                    .map(|i| evaluate(phi.image(i), &v, alg).unwrap())
                    .collect();
                ensure(got == want, format!("word {} disagrees", gens.display_word(&w)))?;
            }
        }
        words += 1;
    }
    Ok(format!(
        "{subspaces} subspace counts, {groups} BSGS orders, {words} words agree"
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "Δ certificate", limit: Duration::from_secs(1), run: c1_delta },
        Criterion { id: 2, name: "Heisenberg angle", limit: Duration::from_secs(1), run: c2_angle },
        Criterion { id: 3, name: "SL generation", limit: Duration::from_secs(30), run: c3_slgen },
        Criterion { id: 4, name: "transvection words", limit: Duration::from_secs(60), run: c4_words },
        Criterion { id: 5, name: "CRT solver", limit: Duration::from_secs(30), run: c5_crt },
        Criterion { id: 6, name: "two orbits on A^n", limit: Duration::from_secs(60), run: c6_two_orbits },
        Criterion { id: 7, name: "Alt(80) image", limit: Duration::from_secs(300), run: c7_alt80 },
        Criterion { id: 8, name: "inequivalent actions", limit: Duration::from_secs(300), run: c8_inequivalent },
        Criterion { id: 9, name: "minimality density", limit: Duration::from_secs(600), run: c9_minimality },
        Criterion { id: 10, name: "trivial automorphisms", limit: Duration::from_secs(600), run: c10_automorphisms },
        Criterion { id: 11, name: "isomorphism classes", limit: Duration::from_secs(10), run: c11_classes },
        Criterion { id: 12, name: "Hall count for Alt(5)", limit: Duration::from_secs(60), run: c12_hall },
        Criterion { id: 13, name: "oracle invariants", limit: Duration::from_secs(300), run: c13_oracles },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.id.to_string() == *f) {
            continue;
        }
        let start = Instant::now();
        let result = (c.run)();
        let took = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if took <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} limit", c.limit)),
            Err(e) => (false, e),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {} [{:.2}s] {}: {}",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            c.name,
            detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
