//! Permutation actions of Γ: the quotient `Ω = (A^n ∖ 0)/Aut(A)`, images
//! of words, orbits, Schreier–Sims, transitivity and Alt/Sym recognition,
//! and equivalence of labelled actions.
//!
//! Products of permutations read left to right: `a.then(b)` applies `a`
//! first. Since tuples are acted on from the right, the permutation of a
//! word `w1 w2` is `perm(w1).then(perm(w2))`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use rand_chacha::ChaCha20Rng;

use crate::algebra::{AlgebraError, AlgebraStructure, AutGroup};
use crate::ffield::PrimeField;
use crate::rng;
use crate::tame::{CompiledGenerators, GroupWord, Letter, TameError};

/// Largest `p^{nk}` for which `Ω` is built.
pub const OMEGA_BUDGET: u64 = 10_000_000;
/// Largest degree accepted by Schreier–Sims.
pub const SCHREIER_SIMS_MAX_DEGREE: usize = 5000;
/// Largest degree for the exact equivalence search.
pub const EXACT_EQUIVALENCE_MAX_DEGREE: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActionError {
    #[error(transparent)]
    Tame(#[from] TameError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("domain size {size} exceeds the budget {budget}")]
    Budget { size: u64, budget: u64 },
    #[error("not a permutation of 0..{0}")]
    NotPermutation(usize),
    #[error("generator {generator} is not well defined on Aut(A)-orbits")]
    NotWellDefined { generator: usize },
    #[error("permutations act on {expected} points, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("generator labels differ")]
    LabelMismatch,
    #[error("automorphism group has dimension {found}, algebra has {expected}")]
    AutDimension { expected: usize, found: usize },
}

/// A permutation of `0..degree` as an image array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    img: Vec<u32>,
}

impl Perm {
    pub fn identity(degree: usize) -> Self {
        Self {
            img: (0..degree as u32).collect(),
        }
    }

    pub fn from_images(img: Vec<u32>) -> Result<Self, ActionError> {
        let n = img.len();
        let mut seen = vec![false; n];
        for &i in &img {
            let i = i as usize;
            if i >= n || seen[i] {
                return Err(ActionError::NotPermutation(n));
            }
            seen[i] = true;
        }
        Ok(Self { img })
    }

    /// Builds from disjoint cycles.
    pub fn from_cycles(degree: usize, cycles: &[&[u32]]) -> Result<Self, ActionError> {
        let mut img: Vec<u32> = (0..degree as u32).collect();
        for c in cycles {
            for (j, &x) in c.iter().enumerate() {
                let y = c[(j + 1) % c.len()];
                if x as usize >= degree || y as usize >= degree {
                    return Err(ActionError::NotPermutation(degree));
                }
                img[x as usize] = y;
            }
        }
        Self::from_images(img)
    }

    pub fn degree(&self) -> usize {
        self.img.len()
    }

    pub fn images(&self) -> &[u32] {
        &self.img
    }

    pub fn apply(&self, x: u32) -> u32 {
        self.img[x as usize]
    }

    /// `self` first, then `other`.
    pub fn then(&self, other: &Perm) -> Perm {
        Perm {
            img: self.img.iter().map(|&i| other.img[i as usize]).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut img = vec![0; self.img.len()];
        for (i, &j) in self.img.iter().enumerate() {
            img[j as usize] = i as u32;
        }
        Perm { img }
    }

    pub fn pow(&self, e: i64) -> Perm {
        let base = if e < 0 { self.inverse() } else { self.clone() };
        let mut out = Perm::identity(self.degree());
        let mut sq = base;
        let mut e = e.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                out = out.then(&sq);
            }
            sq = sq.then(&sq);
            e >>= 1;
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.img.iter().enumerate().all(|(i, &j)| i as u32 == j)
    }

    /// Cycle lengths in decreasing order, fixed points included.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut seen = vec![false; self.img.len()];
        let mut out = Vec::new();
        for start in 0..self.img.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut c = start;
            while !seen[c] {
                seen[c] = true;
                c = self.img[c] as usize;
                len += 1;
            }
            out.push(len);
        }
        out.sort_unstable_by(|a, b| b.cmp(a));
        out
    }

    pub fn is_even(&self) -> bool {
        self.cycle_type().iter().map(|l| l - 1).sum::<usize>() % 2 == 0
    }

    pub fn order(&self) -> BigUint {
        self.cycle_type()
            .into_iter()
            .fold(BigUint::one(), |acc, l| acc.lcm(&BigUint::from(l)))
    }
}

/// Aut(A)-orbits of nonzero tuples in `A^n`. Tuples are indexed by their
/// `n·k` base-`p` digits, coordinate 0 most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaIndex {
    field: PrimeField,
    k: usize,
    n: usize,
    orbit_of: Vec<u32>,
    reps: Vec<u64>,
}

impl OmegaIndex {
    pub const ZERO: u32 = u32::MAX;

    /// Representatives are the least tuple index of each orbit and ids
    /// follow representative order.
    pub fn build(alg: &AlgebraStructure, aut: &AutGroup, n: usize) -> Result<Self, ActionError> {
        let field = alg.field();
        let k = alg.k();
        if aut.k() != k {
            return Err(ActionError::AutDimension {
                expected: k,
                found: aut.k(),
            });
        }
        let size = domain_size(field.p(), n * k)?;
        let mut orbit_of = vec![Self::ZERO; size as usize];
        let mut reps = Vec::new();
        for idx in 1..size {
            if orbit_of[idx as usize] != Self::ZERO {
                continue;
            }
            let id = reps.len() as u32;
            reps.push(idx);
            let digits = field.digits(idx, n * k);
            for m in aut.elements() {
                let image: Vec<u32> = digits
                    .chunks(k)
                    .flat_map(|v| m.mul_vec(v, &field))
                    .collect();
                orbit_of[field.undigits(&image) as usize] = id;
            }
        }
        Ok(Self {
            field,
            k,
            n,
            orbit_of,
            reps,
        })
    }

    /// `|Ω|`.
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain_size(&self) -> u64 {
        self.orbit_of.len() as u64
    }

    pub fn encode(&self, tuple: &[Vec<u32>]) -> u64 {
        let digits: Vec<u32> = tuple.concat();
        self.field.undigits(&digits)
    }

    pub fn decode(&self, idx: u64) -> Vec<Vec<u32>> {
        self.field
            .digits(idx, self.n * self.k)
            .chunks(self.k)
            .map(<[u32]>::to_vec)
            .collect()
    }

    pub fn id_of(&self, tuple: &[Vec<u32>]) -> u32 {
        self.orbit_of[self.encode(tuple) as usize]
    }

    pub fn id_of_index(&self, idx: u64) -> u32 {
        self.orbit_of[idx as usize]
    }

    pub fn representative(&self, id: u32) -> Vec<Vec<u32>> {
        self.decode(self.reps[id as usize])
    }

    pub fn orbit_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.reps.len()];
        for &o in &self.orbit_of {
            if o != Self::ZERO {
                sizes[o as usize] += 1;
            }
        }
        sizes
    }
}

fn domain_size(p: u32, digits: usize) -> Result<u64, ActionError> {
    let mut size: u64 = 1;
    for _ in 0..digits {
        size = size.saturating_mul(u64::from(p));
        if size > OMEGA_BUDGET {
            return Err(ActionError::Budget {
                size,
                budget: OMEGA_BUDGET,
            });
        }
    }
    Ok(size)
}

/// The permutation of `Ω` induced by a word. With `check`, every nonzero
/// tuple is pushed through the word and compared with its orbit's image.
pub fn permutation_image(
    w: &GroupWord,
    omega: &OmegaIndex,
    gens: &CompiledGenerators<'_>,
    check: bool,
) -> Result<Perm, ActionError> {
    let mut img = Vec::with_capacity(omega.len());
    for id in 0..omega.len() as u32 {
        let mut t = omega.representative(id);
        gens.apply_word(w, &mut t);
        img.push(omega.id_of(&t));
    }
    if check {
        for idx in 1..omega.domain_size() {
            let mut t = omega.decode(idx);
            gens.apply_word(w, &mut t);
            if omega.id_of(&t) != img[omega.id_of_index(idx) as usize] {
                let generator = w.letters().first().map_or(0, |l| l.gen as usize);
                return Err(ActionError::NotWellDefined { generator });
            }
        }
    }
    Perm::from_images(img)
}

/// Permutations of all generators of Γ on `Ω`, checked for well-definedness.
pub fn generator_permutations(
    omega: &OmegaIndex,
    gens: &CompiledGenerators<'_>,
) -> Result<Vec<Perm>, ActionError> {
    (0..gens.len())
        .map(|g| {
            let w = GroupWord::letter(g);
            permutation_image(&w, omega, gens, true).map_err(|e| match e {
                ActionError::NotWellDefined { .. } => ActionError::NotWellDefined { generator: g },
                e => e,
            })
        })
        .collect()
}

/// The permutation of a word from the permutations of its letters.
pub fn word_permutation(letter_perms: &[Perm], w: &GroupWord) -> Perm {
    let degree = letter_perms.first().map_or(0, Perm::degree);
    let inverses: Vec<Perm> = letter_perms.iter().map(Perm::inverse).collect();
    w.letters()
        .iter()
        .fold(Perm::identity(degree), |acc, l: &Letter| {
            let g = l.gen as usize;
            acc.then(if l.inv { &inverses[g] } else { &letter_perms[g] })
        })
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.parent[hi as usize] = lo;
        }
    }

    fn classes(mut self) -> Vec<Vec<u32>> {
        let n = self.parent.len();
        let mut by_root: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for x in 0..n as u32 {
            let r = self.find(x);
            by_root.entry(r).or_default().push(x);
        }
        by_root.into_values().collect()
    }
}

/// Orbits of the group generated by `perms`, each sorted, ordered by least
/// element.
pub fn orbits(perms: &[Perm], degree: usize) -> Vec<Vec<u32>> {
    let mut uf = UnionFind::new(degree);
    for g in perms {
        for x in 0..degree as u32 {
            uf.union(x, g.apply(x));
        }
    }
    uf.classes()
}

/// Orbits of Γ on all of `A^n`, zero tuple included, as tuple indices.
pub fn tuple_orbits(gens: &CompiledGenerators<'_>, field: PrimeField, k: usize) -> Result<Vec<Vec<u32>>, ActionError> {
    let n = gens.n();
    let size = domain_size(field.p(), n * k)?;
    let mut uf = UnionFind::new(size as usize);
    for idx in 0..size {
        let base: Vec<Vec<u32>> = field
            .digits(idx, n * k)
            .chunks(k)
            .map(<[u32]>::to_vec)
            .collect();
        for g in 0..gens.len() {
            let mut t = base.clone();
            gens.apply_letter(Letter::new(g), &mut t);
            uf.union(idx as u32, field.undigits(&t.concat()) as u32);
        }
    }
    Ok(uf.classes())
}

/// All elements of `⟨perms⟩` by closure, or `None` past `budget`.
pub fn group_elements(perms: &[Perm], degree: usize, budget: usize) -> Option<Vec<Perm>> {
    let mut seen = alloc::collections::BTreeSet::new();
    let id = Perm::identity(degree);
    seen.insert(id.clone());
    let mut frontier = vec![id];
    while let Some(x) = frontier.pop() {
        for g in perms {
            let y = x.then(g);
            if seen.insert(y.clone()) {
                if seen.len() > budget {
                    return None;
                }
                frontier.push(y);
            }
        }
    }
    Some(seen.into_iter().collect())
}

/// One level of a stabiliser chain with a Schreier vector.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Level {
    point: u32,
    /// indices into the strong generators fixing all earlier base points
    gens: Vec<usize>,
    orbit: Vec<u32>,
    /// `-1` outside the orbit, `-2` at the base point, else the position in
    /// `gens` of the generator whose image reached this point
    sv: Vec<i32>,
}

/// A base and strong generating set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bsgs {
    degree: usize,
    strong: Vec<Perm>,
    strong_inv: Vec<Perm>,
    levels: Vec<Level>,
}

impl Bsgs {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn base(&self) -> Vec<u32> {
        self.levels.iter().map(|l| l.point).collect()
    }

    pub fn strong_generators(&self) -> &[Perm] {
        &self.strong
    }

    pub fn basic_orbit_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.orbit.len()).collect()
    }

    /// Product of the basic orbit lengths.
    pub fn order(&self) -> BigUint {
        self.levels
            .iter()
            .fold(BigUint::one(), |acc, l| acc * BigUint::from(l.orbit.len()))
    }

    fn rebuild_orbit(&mut self, i: usize) {
        let level = &mut self.levels[i];
        level.sv = vec![-1; self.degree];
        level.sv[level.point as usize] = -2;
        level.orbit = vec![level.point];
        let mut head = 0;
        while head < level.orbit.len() {
            let x = level.orbit[head];
            head += 1;
            for (pos, &g) in level.gens.iter().enumerate() {
                let y = self.strong[g].apply(x);
                if level.sv[y as usize] == -1 {
                    level.sv[y as usize] = pos as i32;
                    level.orbit.push(y);
                }
            }
        }
    }

    /// Strips `h` through levels `from..`; returns the residue and the level
    /// where it stopped (`levels.len()` when it fixes every base point).
    fn sift(&self, mut h: Perm, from: usize) -> (Perm, usize) {
        for (i, level) in self.levels.iter().enumerate().skip(from) {
            let mut b = h.apply(level.point);
            if level.sv[b as usize] == -1 {
                return (h, i);
            }
            while level.sv[b as usize] >= 0 {
                let g = level.gens[level.sv[b as usize] as usize];
                h = h.then(&self.strong_inv[g]);
                b = self.strong_inv[g].apply(b);
            }
        }
        let depth = self.levels.len();
        (h, depth)
    }

    /// Adds a non-identity residue that fixes the first `depth` base points.
    fn add_generator(&mut self, h: Perm, depth: usize) {
        if depth == self.levels.len() {
            let moved = (0..self.degree as u32)
                .find(|&x| h.apply(x) != x)
                .expect("residue is not the identity");
            self.levels.push(Level {
                point: moved,
                gens: Vec::new(),
                orbit: vec![moved],
                sv: Vec::new(),
            });
        }
        let idx = self.strong.len();
        self.strong_inv.push(h.inverse());
        self.strong.push(h);
        for i in 0..=depth {
            self.levels[i].gens.push(idx);
            self.rebuild_orbit(i);
        }
    }

    pub fn contains(&self, g: &Perm) -> bool {
        let (r, _) = self.sift(g.clone(), 0);
        r.is_identity()
    }

    /// Largest `t ≤ cap` such that the group is `t`-transitive; 0 when
    /// intransitive.
    pub fn transitivity_degree(&self, cap: usize) -> usize {
        let m = self.degree;
        let mut t = 0;
        while t < cap && t < m {
            let size = self.levels.get(t).map_or(1, |l| l.orbit.len());
            if size != m - t {
                break;
            }
            t += 1;
        }
        t
    }
}

/// Stabiliser chain for `⟨perms⟩` from a seeded random phase followed, when
/// needed, by deterministic Schreier-generator verification.
///
/// `upper_bound`, when known, is an order the group cannot exceed (for
/// instance `m!/2` when every generator is even). Reaching it ends the
/// computation since the product of basic orbit lengths never exceeds the
/// group order.
pub fn schreier_sims(
    perms: &[Perm],
    degree: usize,
    upper_bound: Option<&BigUint>,
    seed: u64,
) -> Result<Bsgs, ActionError> {
    if degree > SCHREIER_SIMS_MAX_DEGREE {
        return Err(ActionError::Budget {
            size: degree as u64,
            budget: SCHREIER_SIMS_MAX_DEGREE as u64,
        });
    }
    for g in perms {
        if g.degree() != degree {
            return Err(ActionError::DegreeMismatch {
                expected: degree,
                found: g.degree(),
            });
        }
    }
    let mut b = Bsgs {
        degree,
        strong: Vec::new(),
        strong_inv: Vec::new(),
        levels: Vec::new(),
    };
    let gens: Vec<Perm> = perms.iter().filter(|g| !g.is_identity()).cloned().collect();
    if gens.is_empty() {
        return Ok(b);
    }
    let reached = |b: &Bsgs| upper_bound.is_some_and(|u| b.order() >= *u);
    for g in &gens {
        let (r, depth) = b.sift(g.clone(), 0);
        if !r.is_identity() {
            b.add_generator(r, depth);
        }
    }
    if reached(&b) {
        return Ok(b);
    }

    // random phase: product replacement
    let mut rng = rng::stream(seed, 0);
    let mut pool: Vec<Perm> = gens.iter().cycle().take(gens.len().max(10)).cloned().collect();
    let mut acc = Perm::identity(degree);
    for _ in 0..50 {
        random_step(&mut pool, &mut acc, &mut rng);
    }
    let mut quiet = 0;
    while quiet < 40 {
        let x = random_step(&mut pool, &mut acc, &mut rng);
        let (r, depth) = b.sift(x, 0);
        if r.is_identity() {
            quiet += 1;
        } else {
            quiet = 0;
            b.add_generator(r, depth);
            if reached(&b) {
                return Ok(b);
            }
        }
    }

    // deterministic completion
    let mut i = b.levels.len();
    while i > 0 {
        let lvl = i - 1;
        let mut added = None;
        'scan: for oi in 0..b.levels[lvl].orbit.len() {
            let beta = b.levels[lvl].orbit[oi];
            let u_beta = transversal(&b, lvl, beta);
            for gi in 0..b.levels[lvl].gens.len() {
                let s = &b.strong[b.levels[lvl].gens[gi]];
                let image = s.apply(beta);
                // u_β s u_{β^s}⁻¹ fixes the base point of this level
                let schreier = u_beta.then(s).then(&transversal(&b, lvl, image).inverse());
                let (r, depth) = b.sift(schreier, lvl + 1);
                if !r.is_identity() {
                    added = Some((r, depth));
                    break 'scan;
                }
            }
        }
        match added {
            Some((r, depth)) => {
                b.add_generator(r, depth);
                i = depth + 1;
            }
            None => i -= 1,
        }
    }
    Ok(b)
}

/// The transversal element sending the base point of level `i` to `beta`.
fn transversal(b: &Bsgs, i: usize, beta: u32) -> Perm {
    let level = &b.levels[i];
    let mut word = Vec::new();
    let mut x = beta;
    while level.sv[x as usize] >= 0 {
        let g = level.gens[level.sv[x as usize] as usize];
        word.push(g);
        x = b.strong_inv[g].apply(x);
    }
    word.iter()
        .rev()
        .fold(Perm::identity(b.degree), |acc, &g| acc.then(&b.strong[g]))
}

fn random_step(pool: &mut [Perm], acc: &mut Perm, rng: &mut ChaCha20Rng) -> Perm {
    let len = pool.len() as u32;
    let i = rng::below(rng, len) as usize;
    let mut j = rng::below(rng, len - 1) as usize;
    if j >= i {
        j += 1;
    }
    let rhs = if rng::below(rng, 2) == 0 {
        pool[j].clone()
    } else {
        pool[j].inverse()
    };
    pool[i] = pool[i].then(&rhs);
    *acc = acc.then(&pool[i]);
    acc.clone()
}

/// `m!`.
pub fn factorial(m: usize) -> BigUint {
    (2..=m).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// Order bound from parities: `m!/2` when all generators are even.
pub fn parity_bound(perms: &[Perm], degree: usize) -> BigUint {
    let f = factorial(degree);
    if perms.iter().all(Perm::is_even) && degree >= 2 {
        f / 2u32
    } else {
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    Alternating,
    Symmetric,
    Other,
}

/// Compares the order with `m!` and `m!/2`; `Alternating` also needs every
/// generator even.
pub fn recognize_alt_sym(bsgs: &Bsgs, generators_even: bool) -> GroupKind {
    let m = bsgs.degree();
    let order = bsgs.order();
    let f = factorial(m);
    if order == f {
        GroupKind::Symmetric
    } else if m >= 2 && generators_even && order == f / 2u32 {
        GroupKind::Alternating
    } else {
        GroupKind::Other
    }
}

/// Outcome of comparing two labelled actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    /// `witness` maps points of the first action to the second.
    Equivalent(Perm),
    Inequivalent(String),
    Unknown,
}

/// Cycle types of the permutations of all words of length `≤ max_len` over
/// the generators and their inverses.
fn cycle_type_profile(perms: &[Perm], max_len: usize) -> Vec<Vec<usize>> {
    let mut letters = Vec::new();
    for g in perms {
        letters.push(g.clone());
        letters.push(g.inverse());
    }
    let degree = perms.first().map_or(0, Perm::degree);
    let mut layer = vec![Perm::identity(degree)];
    let mut out = Vec::new();
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * letters.len());
        for w in &layer {
            for l in &letters {
                let x = w.then(l);
                out.push(x.cycle_type());
                next.push(x);
            }
        }
        layer = next;
    }
    out
}

/// Decides whether two labelled actions are isomorphic: a cheap refutation
/// by cycle types of short words, then an exact search for small degrees.
pub fn actions_equivalent(
    a: &BTreeMap<String, Perm>,
    b: &BTreeMap<String, Perm>,
    max_word_len: usize,
) -> Result<Equivalence, ActionError> {
    if !a.keys().eq(b.keys()) {
        return Err(ActionError::LabelMismatch);
    }
    let pa: Vec<Perm> = a.values().cloned().collect();
    let pb: Vec<Perm> = b.values().cloned().collect();
    let da = pa.first().map_or(0, Perm::degree);
    let db = pb.first().map_or(0, Perm::degree);
    for (g, d) in pa.iter().map(|g| (g, da)).chain(pb.iter().map(|g| (g, db))) {
        if g.degree() != d {
            return Err(ActionError::DegreeMismatch {
                expected: d,
                found: g.degree(),
            });
        }
    }
    if da != db {
        return Ok(Equivalence::Inequivalent(String::from("degrees differ")));
    }
    let profile_a = cycle_type_profile(&pa, max_word_len);
    let profile_b = cycle_type_profile(&pb, max_word_len);
    if let Some(pos) = profile_a.iter().zip(&profile_b).position(|(x, y)| x != y) {
        return Ok(Equivalence::Inequivalent(alloc::format!(
            "cycle types differ at short word #{pos}"
        )));
    }
    if da > EXACT_EQUIVALENCE_MAX_DEGREE {
        return Ok(Equivalence::Unknown);
    }
    Ok(match equivariant_bijection(&pa, &pb, da) {
        Some(w) => Equivalence::Equivalent(w),
        None => Equivalence::Inequivalent(String::from("no equivariant bijection")),
    })
}

/// Backtracking over orbit representatives of the first action; each
/// choice is propagated along generator edges in both directions.
fn equivariant_bijection(pa: &[Perm], pb: &[Perm], degree: usize) -> Option<Perm> {
    let inv_a: Vec<Perm> = pa.iter().map(Perm::inverse).collect();
    let inv_b: Vec<Perm> = pb.iter().map(Perm::inverse).collect();
    let reps: Vec<u32> = orbits(pa, degree).iter().map(|o| o[0]).collect();
    let mut map = vec![u32::MAX; degree];
    let mut used = vec![false; degree];
    fn propagate(
        x: u32,
        y: u32,
        map: &mut [u32],
        used: &mut [bool],
        pa: &[Perm],
        pb: &[Perm],
        inv_a: &[Perm],
        inv_b: &[Perm],
        trail: &mut Vec<u32>,
    ) -> bool {
        let mut stack = vec![(x, y)];
        while let Some((x, y)) = stack.pop() {
            let cur = map[x as usize];
            if cur != u32::MAX {
                if cur != y {
                    return false;
                }
                continue;
            }
            if used[y as usize] {
                return false;
            }
            map[x as usize] = y;
            used[y as usize] = true;
            trail.push(x);
            for g in 0..pa.len() {
                stack.push((pa[g].apply(x), pb[g].apply(y)));
                stack.push((inv_a[g].apply(x), inv_b[g].apply(y)));
            }
        }
        true
    }
    #[allow(clippy::too_many_arguments)]
    fn search(
        r: usize,
        reps: &[u32],
        map: &mut Vec<u32>,
        used: &mut Vec<bool>,
        pa: &[Perm],
        pb: &[Perm],
        inv_a: &[Perm],
        inv_b: &[Perm],
    ) -> bool {
        if r == reps.len() {
            return true;
        }
        let x = reps[r];
        for y in 0..map.len() as u32 {
            if used[y as usize] {
                continue;
            }
            let mut trail = Vec::new();
            let ok = propagate(x, y, map, used, pa, pb, inv_a, inv_b, &mut trail)
                && search(r + 1, reps, map, used, pa, pb, inv_a, inv_b);
            if ok {
                return true;
            }
            for t in trail {
                used[map[t as usize] as usize] = false;
                map[t as usize] = u32::MAX;
            }
        }
        false
    }
    if search(0, &reps, &mut map, &mut used, pa, pb, &inv_a, &inv_b) {
        Perm::from_images(map).ok()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{automorphisms, is_minimal};
    use crate::operad::Signature;
    use crate::tame::GammaGenerators;

    fn cyc(degree: usize, cycles: &[&[u32]]) -> Perm {
        Perm::from_cycles(degree, cycles).unwrap()
    }

    fn alt5() -> Vec<Perm> {
        vec![cyc(5, &[&[0, 1, 2]]), cyc(5, &[&[0, 1, 2, 3, 4]])]
    }

    #[test]
    fn perm_basics() {
        let a = cyc(4, &[&[0, 1]]);
        let b = cyc(4, &[&[0, 1, 2, 3]]);
        assert!(!a.is_even());
        assert!(!b.is_even());
        assert_eq!(b.cycle_type(), vec![4]);
        assert_eq!(b.order(), BigUint::from(4u32));
        assert!(b.pow(4).is_identity());
        assert_eq!(b.then(&b.inverse()), Perm::identity(4));
        assert_eq!(a.then(&b).apply(0), 2);
        assert!(Perm::from_images(vec![0, 0]).is_err());
    }

    #[test]
    fn schreier_sims_examples() {
        let s4 = [cyc(4, &[&[0, 1]]), cyc(4, &[&[0, 1, 2, 3]])];
        let b = schreier_sims(&s4, 4, None, 1).unwrap();
        assert_eq!(b.order(), BigUint::from(24u32));
        let brute = group_elements(&s4, 4, 100).unwrap();
        assert_eq!(brute.len(), 24);
        assert_eq!(recognize_alt_sym(&b, false), GroupKind::Symmetric);

        for p in [5u32, 7, 11] {
            let c: Vec<u32> = (0..p).collect();
            let b = schreier_sims(&[cyc(p as usize, &[&c])], p as usize, None, 1).unwrap();
            assert_eq!(b.order(), BigUint::from(p));
        }
        let c: Vec<u32> = (0..30).collect();
        let b = schreier_sims(&[cyc(30, &[&c])], 30, None, 1).unwrap();
        assert_eq!(recognize_alt_sym(&b, false), GroupKind::Other);
        let b = schreier_sims(&[], 6, None, 1).unwrap();
        assert_eq!(b.order(), BigUint::one());
    }

    #[test]
    fn schreier_sims_matches_brute_force() {
        let cases: Vec<(usize, Vec<Perm>)> = vec![
            (5, alt5()),
            (6, vec![cyc(6, &[&[0, 1], &[2, 3]]), cyc(6, &[&[0, 2, 4], &[1, 3, 5]])]),
            (8, vec![cyc(8, &[&[0, 1, 2, 3], &[4, 5, 6, 7]]), cyc(8, &[&[0, 4], &[1, 5]])]),
            (7, vec![cyc(7, &[&[0, 1, 2, 3, 4, 5, 6]]), cyc(7, &[&[1, 2, 4], &[3, 6, 5]])]),
            (6, vec![cyc(6, &[&[0, 1, 2]]), cyc(6, &[&[3, 4]])]),
        ];
        for (seed, (d, gens)) in cases.iter().enumerate() {
            let brute = group_elements(gens, *d, 10_000).unwrap();
            let b = schreier_sims(gens, *d, None, seed as u64).unwrap();
            assert_eq!(b.order(), BigUint::from(brute.len()), "case {seed}");
            assert!(brute.iter().all(|g| b.contains(g)));
            assert!(!b.contains(&cyc(*d, &[&[0, 1]])) || brute.contains(&cyc(*d, &[&[0, 1]])));
        }
    }

    #[test]
    fn transitivity_examples() {
        let b = schreier_sims(&alt5(), 5, None, 3).unwrap();
        assert_eq!(b.order(), BigUint::from(60u32));
        assert_eq!(b.transitivity_degree(8), 3);
        // brute force on ordered triples and quadruples
        let elems = group_elements(&alt5(), 5, 100).unwrap();
        let count = |t: &[u32]| {
            elems
                .iter()
                .map(|g| t.iter().map(|&x| g.apply(x)).collect::<Vec<_>>())
                .collect::<alloc::collections::BTreeSet<_>>()
                .len()
        };
        assert_eq!(count(&[0, 1, 2]), 60);
        assert!(count(&[0, 1, 2, 3]) < 120);
        let trivial = schreier_sims(&[Perm::identity(3)], 3, None, 0).unwrap();
        assert_eq!(trivial.transitivity_degree(8), 0);
    }

    #[test]
    fn orbits_of_permutations() {
        let o = orbits(&[cyc(6, &[&[0, 2]]), cyc(6, &[&[2, 4]])], 6);
        assert_eq!(o, vec![vec![0, 2, 4], vec![1], vec![3], vec![5]]);
    }

    fn minimal_k1(p: u32, seed_start: u64) -> AlgebraStructure {
        let s = Signature::with_arities(&[2]).unwrap();
        (seed_start..)
            .map(|seed| AlgebraStructure::random(&s, 1, p, seed).unwrap())
            .find(|a| a.tensor(0)[0] != 0)
            .unwrap()
    }

    #[test]
    fn omega_examples() {
        let alg = minimal_k1(3, 0);
        let aut = automorphisms(&alg).unwrap();
        assert_eq!(aut.order(), 1);
        let omega = OmegaIndex::build(&alg, &aut, 4).unwrap();
        assert_eq!(omega.len(), 80);
        let z = AlgebraStructure::zero(PrimeField::new(3).unwrap(), 1, alg.signature().clone()).unwrap();
        let zaut = automorphisms(&z).unwrap();
        let omega = OmegaIndex::build(&z, &zaut, 4).unwrap();
        assert_eq!(omega.len(), 40);
        assert!(omega.orbit_sizes().iter().all(|&s| s == 2));
        let s = Signature::with_arities(&[2, 2]).unwrap();
        let alg = (0..)
            .map(|seed| AlgebraStructure::random(&s, 2, 2, seed).unwrap())
            .find(|a| is_minimal(a) && automorphisms(a).unwrap().order() == 1)
            .unwrap();
        let aut = automorphisms(&alg).unwrap();
        let omega = OmegaIndex::build(&alg, &aut, 4).unwrap();
        assert_eq!(omega.len(), 255);
        let big = AlgebraStructure::zero(PrimeField::new(101).unwrap(), 2, s).unwrap();
        assert!(matches!(
            OmegaIndex::build(&big, &aut, 4),
            Err(ActionError::Budget { .. })
        ));
    }

    #[test]
    fn generator_permutations_and_words() {
        let alg = minimal_k1(3, 0);
        let aut = automorphisms(&alg).unwrap();
        let omega = OmegaIndex::build(&alg, &aut, 4).unwrap();
        let g = GammaGenerators::new(4, 1, alg.signature().clone()).unwrap();
        let c = g.compile(&alg).unwrap();
        let perms = generator_permutations(&omega, &c).unwrap();
        assert!(permutation_image(&GroupWord::empty(), &omega, &c, true).unwrap().is_identity());
        for p in &perms {
            assert!(p.pow(3).is_identity());
        }
        let w1 = g.parse_word("a1 b:s0^-1 a3").unwrap();
        let w2 = g.parse_word("a4 a2 a2").unwrap();
        let p1 = permutation_image(&w1, &omega, &c, false).unwrap();
        let p2 = permutation_image(&w2, &omega, &c, false).unwrap();
        let p12 = permutation_image(&w1.concat(&w2), &omega, &c, false).unwrap();
        assert_eq!(p12, p1.then(&p2));
        assert_eq!(word_permutation(&perms, &w1.concat(&w2)), p12);
        assert_eq!(perms[0].cycle_type(), perms[0].clone().cycle_type());
    }

    #[test]
    fn tuple_orbits_minimal_and_not() {
        let alg = minimal_k1(3, 0);
        let g = GammaGenerators::new(4, 1, alg.signature().clone()).unwrap();
        let c = g.compile(&alg).unwrap();
        let o = tuple_orbits(&c, alg.field(), 1).unwrap();
        let mut sizes: Vec<usize> = o.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 80]);
        assert_eq!(o[0], vec![0]);
        let z = AlgebraStructure::zero(PrimeField::new(3).unwrap(), 2, alg.signature().clone()).unwrap();
        let c = g.compile(&z).unwrap();
        assert!(tuple_orbits(&c, z.field(), 2).unwrap().len() > 2);
    }

    #[test]
    fn gamma_image_is_alternating_on_80_points() {
        let alg = minimal_k1(3, 0);
        let aut = automorphisms(&alg).unwrap();
        let omega = OmegaIndex::build(&alg, &aut, 4).unwrap();
        let g = GammaGenerators::new(4, 1, alg.signature().clone()).unwrap();
        let c = g.compile(&alg).unwrap();
        let perms = generator_permutations(&omega, &c).unwrap();
        assert!(perms.iter().all(Perm::is_even));
        let bound = parity_bound(&perms, 80);
        let b = schreier_sims(&perms, 80, Some(&bound), 7).unwrap();
        assert_eq!(b.order(), factorial(80) / 2u32);
        assert_eq!(recognize_alt_sym(&b, true), GroupKind::Alternating);
        assert_eq!(b.transitivity_degree(8), 8);
    }

    #[test]
    fn equivalence_examples() {
        let mut a = BTreeMap::new();
        a.insert(String::from("x"), cyc(6, &[&[0, 1, 2]]));
        a.insert(String::from("y"), cyc(6, &[&[2, 3], &[4, 5]]));
        match actions_equivalent(&a, &a, 2).unwrap() {
            Equivalence::Equivalent(w) => assert!(w.is_identity()),
            e => panic!("{e:?}"),
        }
        let pi = cyc(6, &[&[0, 5, 3], &[1, 4]]);
        let b: BTreeMap<String, Perm> = a
            .iter()
            .map(|(k, g)| (k.clone(), pi.inverse().then(g).then(&pi)))
            .collect();
        match actions_equivalent(&a, &b, 2).unwrap() {
            Equivalence::Equivalent(w) => {
                for (k, g) in &a {
                    assert_eq!(g.then(&w), w.then(&b[k]));
                }
            }
            e => panic!("{e:?}"),
        }
        // same cycle types of generators, different action
        let mut c = BTreeMap::new();
        c.insert(String::from("x"), cyc(4, &[&[0, 1]]));
        c.insert(String::from("y"), cyc(4, &[&[2, 3]]));
        let mut d = BTreeMap::new();
        d.insert(String::from("x"), cyc(4, &[&[0, 1]]));
        d.insert(String::from("y"), cyc(4, &[&[0, 1]]));
        assert!(matches!(actions_equivalent(&c, &d, 0).unwrap(), Equivalence::Inequivalent(_)));
        assert!(matches!(actions_equivalent(&c, &d, 2).unwrap(), Equivalence::Inequivalent(_)));
        let mut e = BTreeMap::new();
        e.insert(String::from("z"), cyc(4, &[&[0, 1]]));
        assert_eq!(actions_equivalent(&c, &e, 1), Err(ActionError::LabelMismatch));
    }
}
