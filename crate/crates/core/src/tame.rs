//! Transvections `t_i(f): x_i ↦ x_i + f`, the generators of Γ, words over
//! them, and two constructions: words realising `t_0(f)` for integer
//! payloads, and one-variable interpolation through the evaluation map.
//!
//! Conventions. A word `g1 g2 … gm` denotes the composite endomorphism
//! `g1 ∘ g2 ∘ … ∘ gm` of the free algebra. A tuple `a ∈ A^n` is the
//! evaluation `x_j ↦ a_j`, and `a · φ` is the tuple `(φ(x_j)(a))_j`; this
//! is a right action, so letters act on tuples from left to right and
//! `t_i(f)` replaces `a_i` by `a_i + f(a)`. The commutator is
//! `[a, b] = a⁻¹ b a b⁻¹`, for which `[t_i(r x_k), t_k(x_j)] = t_i(r x_j)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::algebra::{AlgebraError, AlgebraStructure};
use crate::ffield::{solve_linear, EchelonBasis, FieldError, LinearSolution, Matrix, PrimeField};
use crate::operad::{
    evaluate, rational_residue, Endomorphism, FreeElement, OperadError, Signature, Term,
};

/// Default cap for the interpolation degree schedule.
pub const DEFAULT_D_MAX: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TameError {
    #[error(transparent)]
    Operad(#[from] OperadError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("payload of t_{index} involves x_{index}")]
    PayloadInvolvesIndex { index: usize },
    #[error("index {index} is outside 0..{n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("need n > max(ar S, 2), got n = {n} with ar S = {ar}")]
    TooFewVariables { n: usize, ar: usize },
    #[error("N must be positive")]
    ZeroN,
    #[error("elementary transvection needs distinct indices, got i = j = {0}")]
    SameIndex(usize),
    #[error("not a permutation of 0..{0}")]
    NotPermutation(usize),
    #[error("odd permutation; only even permutations are realised exactly")]
    OddPermutation,
    #[error("variable x{var} is outside the admissible range 1..={max}")]
    VariableOutOfRange { var: u32, max: usize },
    #[error("coefficient {0} is not an integer")]
    NonIntegerCoefficient(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("word parse error: {0}")]
    Parse(String),
    #[error("tuple has {found} coordinates, expected {expected}")]
    TupleLength { expected: usize, found: usize },
    #[error("degree cap {cap} is below the expected payload degree {degree}")]
    DegreeCap { cap: usize, degree: usize },
    #[error("no solution of degree <= {d_max}")]
    NoSolution { d_max: usize },
    #[error("{points} points but {targets} targets")]
    TargetCount { points: usize, targets: usize },
    #[error("word is not linear: letter `{0}` is a nonlinear transvection")]
    NonlinearLetter(String),
}

/// `t_i(f)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transvection {
    index: usize,
    payload: FreeElement,
}

impl Transvection {
    pub fn new(index: usize, payload: FreeElement) -> Result<Self, TameError> {
        if payload.contains_var(index as u32) {
            return Err(TameError::PayloadInvolvesIndex { index });
        }
        Ok(Self { index, payload })
    }

    pub fn identity(index: usize) -> Self {
        Self {
            index,
            payload: FreeElement::zero(),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn payload(&self) -> &FreeElement {
        &self.payload
    }

    /// `t_i(-f)`.
    pub fn inverse(&self) -> Self {
        Self {
            index: self.index,
            payload: self.payload.neg(),
        }
    }

    /// `a ↦ a` with coordinate `i` replaced by `a_i + f(a)`.
    pub fn apply(&self, tuple: &[Vec<u32>], alg: &AlgebraStructure) -> Result<Vec<Vec<u32>>, TameError> {
        if self.index >= tuple.len() {
            return Err(TameError::IndexOutOfRange {
                index: self.index,
                n: tuple.len(),
            });
        }
        let shift = evaluate(&self.payload, tuple, alg)?;
        let mut out = tuple.to_vec();
        let field = alg.field();
        field.axpy(&mut out[self.index], 1, &shift);
        Ok(out)
    }

    /// The endomorphism of the free algebra on `n` variables.
    pub fn endomorphism(&self, n: usize, cap: usize) -> Endomorphism {
        let mut e = Endomorphism::identity(n, cap);
        e.set_image(self.index, FreeElement::var(self.index as u32).add(&self.payload));
        e
    }
}

/// One generator with its name (`a1 … an`, `b:<op>`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub transvection: Transvection,
}

/// `α_1 … α_n` and `β_s` for each operation `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaGenerators {
    n: usize,
    big_n: u64,
    sig: Signature,
    gens: Vec<Generator>,
}

impl GammaGenerators {
    pub fn new(n: usize, big_n: u64, sig: Signature) -> Result<Self, TameError> {
        let ar = sig.max_arity();
        if n <= ar.max(2) {
            return Err(TameError::TooFewVariables { n, ar });
        }
        if big_n == 0 {
            return Err(TameError::ZeroN);
        }
        let mut gens = Vec::with_capacity(n + sig.len());
        for i in 1..n {
            gens.push(Generator {
                name: format!("a{i}"),
                transvection: Transvection::new(i - 1, FreeElement::var(i as u32))?,
            });
        }
        let inv_n = BigRational::new(BigInt::one(), BigInt::from(big_n));
        gens.push(Generator {
            name: format!("a{n}"),
            transvection: Transvection::new(n - 1, FreeElement::var(0).scale(&inv_n))?,
        });
        for s in 0..sig.len() {
            let args = (1..=sig.arity(s) as u32).map(Term::Var).collect();
            gens.push(Generator {
                name: format!("b:{}", sig.name(s)),
                transvection: Transvection::new(0, FreeElement::from_term(Term::node(s, args)))?,
            });
        }
        Ok(Self {
            n,
            big_n,
            sig,
            gens,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn big_n(&self) -> u64 {
        self.big_n
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    /// Generator index of `α_i`, `1 ≤ i ≤ n`.
    pub fn alpha(&self, i: usize) -> usize {
        i - 1
    }

    /// Generator index of `β_s`.
    pub fn beta(&self, s: usize) -> usize {
        self.n + s
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    fn letter_transvection(&self, l: Letter) -> Transvection {
        let t = &self.gens[l.gen as usize].transvection;
        if l.inv {
            t.inverse()
        } else {
            t.clone()
        }
    }

    /// Applies the word to a tuple, letters left to right.
    pub fn apply_word(
        &self,
        w: &GroupWord,
        tuple: &[Vec<u32>],
        alg: &AlgebraStructure,
    ) -> Result<Vec<Vec<u32>>, TameError> {
        if tuple.len() != self.n {
            return Err(TameError::TupleLength {
                expected: self.n,
                found: tuple.len(),
            });
        }
        let mut cur = tuple.to_vec();
        for &l in &w.letters {
            cur = self.letter_transvection(l).apply(&cur, alg)?;
        }
        Ok(cur)
    }

    /// The composite endomorphism of the word, truncated at `cap`.
    pub fn compose_symbolic(&self, w: &GroupWord, cap: usize) -> Result<Endomorphism, TameError> {
        let mut phi = Endomorphism::identity(self.n, cap);
        for &l in &w.letters {
            // φ ∘ t_i(f) sends x_i to φ(x_i) + φ(f)
            let t = self.letter_transvection(l);
            let extra = phi.substitute(&t.payload)?;
            let img = phi.image(t.index).add(&extra);
            phi.set_image(t.index, img);
        }
        Ok(phi)
    }

    /// Whether the word equals `expected` in the free algebra truncated at
    /// degree `cap`.
    pub fn verify_word_symbolic(
        &self,
        w: &GroupWord,
        expected: &Transvection,
        cap: usize,
    ) -> Result<bool, TameError> {
        if expected.index >= self.n {
            return Err(TameError::IndexOutOfRange {
                index: expected.index,
                n: self.n,
            });
        }
        if let Ok(degree) = expected.payload.degree() {
            if degree > cap {
                return Err(TameError::DegreeCap { cap, degree });
            }
        }
        let phi = self.compose_symbolic(w, cap)?;
        let target = expected.endomorphism(self.n, cap);
        Ok((0..self.n).all(|i| phi.image(i) == target.image(i)))
    }

    /// Coefficient matrix of a letter with linear payload: `I + Σ_j c_j E_ij`.
    fn letter_matrix(&self, l: Letter, field: &PrimeField) -> Result<Matrix, TameError> {
        let t = self.letter_transvection(l);
        let mut m = Matrix::identity(self.n);
        for (term, c) in t.payload.iter() {
            let Term::Var(j) = term else {
                return Err(TameError::NonlinearLetter(self.gens[l.gen as usize].name.clone()));
            };
            let c = rational_residue(c, field)?;
            let j = *j as usize;
            m.set(t.index, j, field.add(m.get(t.index, j), c));
        }
        Ok(m)
    }

    /// Matrix `M` with `a · w = M a` for column tuples, so
    /// `M(g1 … gm) = M(gm) ⋯ M(g1)`.
    pub fn word_matrix(&self, w: &GroupWord, field: &PrimeField) -> Result<Matrix, TameError> {
        let mut m = Matrix::identity(self.n);
        for &l in &w.letters {
            m = self.letter_matrix(l, field)?.mul(&m, field)?;
        }
        Ok(m)
    }

    /// Matrices of `α_1 … α_n` reduced mod p.
    pub fn alpha_matrices(&self, field: &PrimeField) -> Result<Vec<Matrix>, TameError> {
        (1..=self.n)
            .map(|i| self.letter_matrix(Letter::new(self.alpha(i)), field))
            .collect()
    }

    fn basic(&self, i: usize) -> GroupWord {
        if i + 1 < self.n {
            GroupWord::letter(self.alpha(i + 1))
        } else {
            GroupWord::letter(self.alpha(self.n)).pow(self.big_n as i64)
        }
    }

    /// A word equal to `t_i(r x_j)`, from the chain `i → i+1 → … → j`
    /// (indices mod n) of commutators.
    pub fn elementary_word(&self, i: usize, j: usize, r: i64) -> Result<GroupWord, TameError> {
        for idx in [i, j] {
            if idx >= self.n {
                return Err(TameError::IndexOutOfRange { index: idx, n: self.n });
            }
        }
        if i == j {
            return Err(TameError::SameIndex(i));
        }
        Ok(self.elementary_rec(i, j, r))
    }

    fn elementary_rec(&self, i: usize, j: usize, r: i64) -> GroupWord {
        if r == 0 {
            return GroupWord::empty();
        }
        let next = (i + 1) % self.n;
        let head = self.basic(i).pow(r);
        if j == next {
            head
        } else {
            GroupWord::commutator(&head, &self.elementary_rec(next, j, 1))
        }
    }

    /// `e_ij(1) e_ji(-1) e_ij(1)`: `x_i ↦ x_j`, `x_j ↦ -x_i`.
    pub fn signed_swap(&self, i: usize, j: usize) -> Result<GroupWord, TameError> {
        let a = self.elementary_word(i, j, 1)?;
        let b = self.elementary_word(j, i, -1)?;
        Ok(a.concat(&b).concat(&a))
    }

    /// A word realising `x_m ↦ x_{σ(m)}` for even `σ` with all signs `+1`.
    pub fn permutation_word(&self, sigma: &[usize]) -> Result<GroupWord, TameError> {
        check_permutation(sigma, self.n)?;
        if !is_even(sigma) {
            return Err(TameError::OddPermutation);
        }
        self.signed_permutation_word(sigma, &vec![1; self.n])
    }

    /// A word realising `x_m ↦ ε_m x_{σ(m)}`; needs
    /// `sign(σ) · Π ε_m = 1`.
    pub fn signed_permutation_word(&self, sigma: &[usize], eps: &[i8]) -> Result<GroupWord, TameError> {
        check_permutation(sigma, self.n)?;
        let parity = if is_even(sigma) { 1 } else { -1 };
        if parity * eps.iter().map(|&e| i32::from(e)).product::<i32>() != 1 {
            return Err(TameError::OddPermutation);
        }
        let mut word = GroupWord::empty();
        let mut seen = vec![false; self.n];
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut c = sigma[start];
            while c != start {
                seen[c] = true;
                cycle.push(c);
                c = sigma[c];
            }
            // (c0 … c_{L-1}) = (c0 c_{L-1}) ∘ … ∘ (c0 c1)
            for &c in cycle[1..].iter().rev() {
                word = word.concat(&self.signed_swap(cycle[0], c)?);
            }
        }
        let got = SignedPerm::of_word(self, &word)?;
        let flips: Vec<usize> = (0..self.n)
            .filter(|&m| got.sign[m] != eps[m])
            .map(|m| sigma[m])
            .collect();
        let mut fix = GroupWord::empty();
        for pair in flips.chunks(2) {
            let s = self.signed_swap(pair[0], pair[1])?;
            fix = fix.concat(&s).concat(&s);
        }
        Ok(fix.concat(&word).reduced())
    }

    /// Conjugate `w_P · w · w_P⁻¹`.
    fn conjugate(p: &GroupWord, w: &GroupWord) -> GroupWord {
        p.concat(w).concat(&p.inverse()).reduced()
    }

    /// The largest admissible payload variable index, `n - 1 - ar S`.
    pub fn max_admissible_var(&self) -> usize {
        self.n - 1 - self.sig.max_arity()
    }

    /// A word equal to `t_0(f)` for integer `f` in `x_1 … x_{n-1-ar S}`.
    pub fn transvection_word(&self, f: &FreeElement) -> Result<GroupWord, TameError> {
        f.validate(&self.sig)?;
        let max = self.max_admissible_var();
        for v in f.variables() {
            if v == 0 || v as usize > max {
                return Err(TameError::VariableOutOfRange { var: v, max });
            }
        }
        let mut word = GroupWord::empty();
        for (t, c) in f.iter() {
            if !c.is_integer() {
                return Err(TameError::NonIntegerCoefficient(c.to_string()));
            }
            let r = c
                .to_integer()
                .to_i64()
                .ok_or_else(|| TameError::NonIntegerCoefficient(c.to_string()))?;
            word = word.concat(&self.term_word(t)?.pow(r));
        }
        Ok(word.reduced())
    }

    fn term_word(&self, t: &Term) -> Result<GroupWord, TameError> {
        match t {
            Term::Var(j) => self.elementary_word(0, *j as usize, 1),
            Term::Node { op, children, .. } => {
                let op = *op as usize;
                let k = children.len();
                let ell = t.max_var() as usize;
                // β' = t_0(⋆(x_{ℓ+1}, …, x_{ℓ+k})) by conjugating β_s
                let mut sigma = vec![usize::MAX; self.n];
                sigma[0] = 0;
                for i in 1..=k {
                    sigma[i] = ell + i;
                }
                let free: Vec<usize> = (0..self.n).filter(|v| !sigma.contains(v)).collect();
                let mut free_targets = free.into_iter();
                for slot in sigma.iter_mut().filter(|s| **s == usize::MAX) {
                    *slot = free_targets.next().unwrap_or(0);
                }
                let mut eps = vec![1i8; self.n];
                if !is_even(&sigma) {
                    // any coordinate outside 0..=k is a free sign
                    eps[k + 1] = -1;
                }
                let p = self.signed_permutation_word(&sigma, &eps)?;
                let mut c = Self::conjugate(&p, &GroupWord::letter(self.beta(op)));
                for (j, child) in children.iter().enumerate() {
                    // γ_j = t_{ℓ+j}(f_j) by moving coordinate 0 to ℓ+j
                    let inner = self.term_word(child)?;
                    let swap = self.signed_swap(0, ell + j + 1)?;
                    let gamma = Self::conjugate(&swap, &inner);
                    c = GroupWord::commutator(&c, &gamma).reduced();
                }
                Ok(c)
            }
        }
    }

    /// Display a word with this alphabet.
    pub fn display_word<'a>(&'a self, w: &'a GroupWord) -> WordDisplay<'a> {
        WordDisplay { gens: self, word: w }
    }

    /// Parses whitespace-separated `name` or `name^e` tokens.
    pub fn parse_word(&self, src: &str) -> Result<GroupWord, TameError> {
        let mut w = GroupWord::empty();
        for tok in src.split_whitespace() {
            let (name, exp) = match tok.split_once('^') {
                Some((name, e)) => (
                    name,
                    e.parse::<i64>()
                        .map_err(|_| TameError::Parse(format!("bad exponent in `{tok}`")))?,
                ),
                None => (tok, 1),
            };
            let g = self
                .find(name)
                .ok_or_else(|| TameError::UnknownGenerator(name.into()))?;
            w = w.concat(&GroupWord::letter(g).pow(exp));
        }
        Ok(w)
    }
}

/// A generator specialised to one algebra for fast tuple updates.
#[derive(Debug, Clone)]
enum CompiledOp {
    /// `a_i += Σ c · a_j`
    Linear { i: usize, terms: Vec<(usize, u32)> },
    /// `a_i += c · ⋆_op(a_{args…})`
    Node {
        i: usize,
        op: usize,
        args: Vec<usize>,
        coeff: u32,
    },
}

/// The generators of Γ acting on `A^n` for one algebra `A`.
#[derive(Debug, Clone)]
pub struct CompiledGenerators<'a> {
    alg: &'a AlgebraStructure,
    n: usize,
    forward: Vec<CompiledOp>,
    backward: Vec<CompiledOp>,
}

impl GammaGenerators {
    /// Specialises every generator and its inverse to `alg`; fails when a
    /// payload denominator is not invertible mod p.
    pub fn compile<'a>(&self, alg: &'a AlgebraStructure) -> Result<CompiledGenerators<'a>, TameError> {
        let field = alg.field();
        let compile_one = |t: &Transvection| -> Result<CompiledOp, TameError> {
            let i = t.index;
            if t.payload.iter().all(|(term, _)| matches!(term, Term::Var(_))) {
                let terms = t
                    .payload
                    .iter()
                    .map(|(term, c)| {
                        let Term::Var(j) = term else { unreachable!() };
                        Ok((*j as usize, rational_residue(c, &field)?))
                    })
                    .collect::<Result<Vec<_>, TameError>>()?;
                return Ok(CompiledOp::Linear { i, terms });
            }
            let mut it = t.payload.iter();
            if let (Some((Term::Node { op, children, .. }, c)), None) = (it.next(), it.next()) {
                let args: Option<Vec<usize>> = children
                    .iter()
                    .map(|ch| match ch {
                        Term::Var(j) => Some(*j as usize),
                        _ => None,
                    })
                    .collect();
                if let Some(args) = args {
                    return Ok(CompiledOp::Node {
                        i,
                        op: *op as usize,
                        args,
                        coeff: rational_residue(c, &field)?,
                    });
                }
            }
            Err(TameError::NonlinearLetter(String::from("compound payload")))
        };
        let mut forward = Vec::with_capacity(self.gens.len());
        let mut backward = Vec::with_capacity(self.gens.len());
        for g in &self.gens {
            forward.push(compile_one(&g.transvection)?);
            backward.push(compile_one(&g.transvection.inverse())?);
        }
        Ok(CompiledGenerators {
            alg,
            n: self.n,
            forward,
            backward,
        })
    }
}

impl CompiledGenerators<'_> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn apply_letter(&self, l: Letter, tuple: &mut [Vec<u32>]) {
        let f = self.alg.field();
        let op = if l.inv {
            &self.backward[l.gen as usize]
        } else {
            &self.forward[l.gen as usize]
        };
        match op {
            CompiledOp::Linear { i, terms } => {
                let k = tuple[*i].len();
                for c in 0..k {
                    let mut acc = u64::from(tuple[*i][c]);
                    for &(j, r) in terms {
                        acc += u64::from(r) * u64::from(tuple[j][c]);
                    }
                    tuple[*i][c] = f.reduce_u64(acc);
                }
            }
            CompiledOp::Node { i, op, args, coeff } => {
                let v = {
                    let refs: Vec<&[u32]> = args.iter().map(|&j| tuple[j].as_slice()).collect();
                    self.alg.apply(*op, &refs)
                };
                f.axpy(&mut tuple[*i], *coeff, &v);
            }
        }
    }

    /// Applies the letters left to right in place.
    pub fn apply_word(&self, w: &GroupWord, tuple: &mut [Vec<u32>]) {
        for &l in &w.letters {
            self.apply_letter(l, tuple);
        }
    }
}

fn check_permutation(sigma: &[usize], n: usize) -> Result<(), TameError> {
    let mut seen = vec![false; n];
    if sigma.len() != n {
        return Err(TameError::NotPermutation(n));
    }
    for &s in sigma {
        if s >= n || seen[s] {
            return Err(TameError::NotPermutation(n));
        }
        seen[s] = true;
    }
    Ok(())
}

/// Parity from the cycle decomposition.
pub fn is_even(sigma: &[usize]) -> bool {
    let mut seen = vec![false; sigma.len()];
    let mut transpositions = 0;
    for start in 0..sigma.len() {
        let mut len = 0;
        let mut c = start;
        while !seen[c] {
            seen[c] = true;
            c = sigma[c];
            len += 1;
        }
        if len > 0 {
            transpositions += len - 1;
        }
    }
    transpositions % 2 == 0
}

/// `x_m ↦ sign[m] · x_{img[m]}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedPerm {
    pub img: Vec<usize>,
    pub sign: Vec<i8>,
}

impl SignedPerm {
    /// Reads a signed permutation off a word's coefficient matrix over the
    /// integers (entries tracked mod a large prime).
    pub fn of_word(gens: &GammaGenerators, w: &GroupWord) -> Result<Self, TameError> {
        let field = PrimeField::new(65_521)?;
        let m = gens.word_matrix(w, &field)?;
        let mut img = vec![0; gens.n];
        let mut sign = vec![0i8; gens.n];
        for r in 0..gens.n {
            let nz: Vec<usize> = (0..gens.n).filter(|&c| m.get(r, c) != 0).collect();
            if nz.len() != 1 {
                return Err(TameError::NotPermutation(gens.n));
            }
            img[r] = nz[0];
            sign[r] = match field.symmetric_lift(m.get(r, nz[0])) {
                1 => 1,
                -1 => -1,
                _ => return Err(TameError::NotPermutation(gens.n)),
            };
        }
        Ok(Self { img, sign })
    }
}

/// One generator or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub gen: u32,
    pub inv: bool,
}

impl Letter {
    pub fn new(gen: usize) -> Self {
        Self {
            gen: gen as u32,
            inv: false,
        }
    }

    pub fn inverse(self) -> Self {
        Self {
            gen: self.gen,
            inv: !self.inv,
        }
    }
}

/// A word over the generators and their inverses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct GroupWord {
    letters: Vec<Letter>,
}

impl GroupWord {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn letter(gen: usize) -> Self {
        Self {
            letters: vec![Letter::new(gen)],
        }
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    pub fn concat(&self, other: &GroupWord) -> Self {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Self { letters }
    }

    pub fn pow(&self, e: i64) -> Self {
        let base = if e < 0 { self.inverse() } else { self.clone() };
        let mut letters = Vec::with_capacity(base.len() * e.unsigned_abs() as usize);
        for _ in 0..e.unsigned_abs() {
            letters.extend_from_slice(&base.letters);
        }
        Self { letters }
    }

    /// `[a, b] = a⁻¹ b a b⁻¹`.
    pub fn commutator(a: &GroupWord, b: &GroupWord) -> Self {
        a.inverse().concat(b).concat(a).concat(&b.inverse())
    }

    /// Free reduction.
    pub fn reduced(&self) -> Self {
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for &l in &self.letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self { letters: out }
    }
}

pub struct WordDisplay<'a> {
    gens: &'a GammaGenerators,
    word: &'a GroupWord,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters = &self.word.letters;
        let mut i = 0;
        let mut first = true;
        while i < letters.len() {
            let l = letters[i];
            let mut run = 1;
            while i + run < letters.len() && letters[i + run] == l {
                run += 1;
            }
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let name = &self.gens.gens[l.gen as usize].name;
            let e = if l.inv { -(run as i64) } else { run as i64 };
            if e == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{e}")?;
            }
            i += run;
        }
        Ok(())
    }
}

/// A one-variable interpolant and its degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrtSolution {
    pub element: FreeElement,
    pub degree: usize,
}

/// Finds `v(x_0)` with `v(a_i) = b_i` for all `i`, trying degree caps
/// `1, 2, …, d_max`.
pub fn crt_solve(
    alg: &AlgebraStructure,
    points: &[Vec<u32>],
    targets: &[Vec<u32>],
    d_max: usize,
) -> Result<CrtSolution, TameError> {
    if points.len() != targets.len() {
        return Err(TameError::TargetCount {
            points: points.len(),
            targets: targets.len(),
        });
    }
    let k = alg.k();
    for v in points.iter().chain(targets) {
        if v.len() != k {
            return Err(FieldError::DimensionMismatch {
                expected: k,
                found: v.len(),
            }
            .into());
        }
    }
    let field = alg.field();
    let m = points.len();
    let rhs: Vec<u32> = targets.concat();
    // by_degree[d-1]: terms of degree d whose values span V_d ⊆ A^m
    let mut by_degree: Vec<Vec<(Term, Vec<u32>)>> = Vec::new();
    let sig = alg.signature();
    for d in 1..=d_max {
        let mut basis = EchelonBasis::new(field, k * m);
        let mut level = Vec::new();
        if d == 1 {
            let v = points.concat();
            if basis.insert(&v) {
                level.push((Term::Var(0), v));
            }
        }
        for op in 0..sig.len() {
            let r = sig.arity(op);
            for parts in compositions(d, r) {
                if parts.iter().any(|&p| p >= d) {
                    continue;
                }
                let lists: Vec<&Vec<(Term, Vec<u32>)>> =
                    parts.iter().map(|&p| &by_degree[p - 1]).collect();
                for choice in product_indices(&lists.iter().map(|l| l.len()).collect::<Vec<_>>()) {
                    let mut value = Vec::with_capacity(k * m);
                    for pt in 0..m {
                        let args: Vec<&[u32]> = choice
                            .iter()
                            .zip(&lists)
                            .map(|(&c, l)| &l[c].1[pt * k..(pt + 1) * k])
                            .collect();
                        value.extend(alg.apply(op, &args));
                    }
                    if basis.insert(&value) {
                        let children = choice
                            .iter()
                            .zip(&lists)
                            .map(|(&c, l)| l[c].0.clone())
                            .collect();
                        level.push((Term::node(op, children), value));
                    }
                }
            }
        }
        by_degree.push(level);
        let columns: Vec<&(Term, Vec<u32>)> = by_degree.iter().flatten().collect();
        if columns.is_empty() {
            continue;
        }
        let cols: Vec<Vec<u32>> = columns.iter().map(|c| c.1.clone()).collect();
        let mat = Matrix::from_columns(&cols, k * m)?;
        if let LinearSolution::Solved { x, .. } = solve_linear(&field, &mat, &rhs)? {
            let element = FreeElement::from_terms(columns.iter().zip(&x).filter(|(_, &c)| c != 0).map(
                |(col, &c)| (col.0.clone(), BigRational::from_integer(BigInt::from(c))),
            ));
            let degree = element.degree().unwrap_or(0);
            return Ok(CrtSolution { element, degree });
        }
    }
    Err(TameError::NoSolution { d_max })
}

/// Ordered `r`-part compositions of `d` into positive parts.
fn compositions(d: usize, r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return if d == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=d.saturating_sub(r - 1) {
        for mut rest in compositions(d - first, r - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn product_indices(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &s in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..s).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}

/// Checks an interpolant against all constraints.
pub fn crt_check(
    alg: &AlgebraStructure,
    v: &FreeElement,
    points: &[Vec<u32>],
    targets: &[Vec<u32>],
) -> Result<bool, TameError> {
    for (a, b) in points.iter().zip(targets) {
        if &evaluate(v, core::slice::from_ref(a), alg)? != b {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{automorphisms, is_minimal};
    use crate::operad::parse_element;
    use crate::rng;

    fn gens(n: usize, big_n: u64, arities: &[usize]) -> GammaGenerators {
        GammaGenerators::new(n, big_n, Signature::with_arities(arities).unwrap()).unwrap()
    }

    fn elem_matrix(n: usize, i: usize, j: usize, r: u32) -> Matrix {
        let mut m = Matrix::identity(n);
        m.set(i, j, r);
        m
    }

    fn random_tuple(n: usize, k: usize, p: u32, rng: &mut impl rand_core::RngCore) -> Vec<Vec<u32>> {
        (0..n)
            .map(|_| (0..k).map(|_| rng::below(rng, p)).collect())
            .collect()
    }

    #[test]
    fn generator_validation() {
        let s = Signature::with_arities(&[3]).unwrap();
        assert!(matches!(
            GammaGenerators::new(3, 1, s.clone()),
            Err(TameError::TooFewVariables { .. })
        ));
        assert!(GammaGenerators::new(4, 1, s.clone()).is_ok());
        assert!(matches!(GammaGenerators::new(4, 0, s), Err(TameError::ZeroN)));
        assert!(matches!(
            Transvection::new(1, FreeElement::var(1)),
            Err(TameError::PayloadInvolvesIndex { index: 1 })
        ));
    }

    #[test]
    fn transvection_examples() {
        let s = Signature::with_arities(&[2]).unwrap();
        let alg = AlgebraStructure::random(&s, 2, 5, 1).unwrap();
        let f = alg.field();
        let a: Vec<Vec<u32>> = vec![vec![1, 2], vec![3, 4], vec![0, 1], vec![2, 2]];
        let t = Transvection::new(1, FreeElement::var(2)).unwrap();
        let out = t.apply(&a, &alg).unwrap();
        assert_eq!(out[1], vec![3, 0]);
        assert_eq!((out[0].clone(), out[2].clone(), out[3].clone()), (a[0].clone(), a[2].clone(), a[3].clone()));

        let star = FreeElement::from_term(Term::node(0, vec![Term::Var(1), Term::Var(2)]));
        let t = Transvection::new(0, star).unwrap();
        let out = t.apply(&a, &alg).unwrap();
        let mut expect = a[0].clone();
        f.axpy(&mut expect, 1, &alg.apply(0, &[&a[1], &a[2]]));
        assert_eq!(out[0], expect);

        let mut r = rng::stream(5, 0);
        for _ in 0..1000 {
            let v = random_tuple(4, 2, 5, &mut r);
            let back = t.inverse().apply(&t.apply(&v, &alg).unwrap(), &alg).unwrap();
            assert_eq!(back, v);
        }
    }

    #[test]
    fn big_n_payload_needs_invertible_n() {
        let g = gens(4, 5, &[2]);
        let alg = AlgebraStructure::random(g.signature(), 1, 5, 2).unwrap();
        let a = vec![vec![1], vec![1], vec![1], vec![1]];
        let w = GroupWord::letter(g.alpha(4));
        assert!(matches!(
            g.apply_word(&w, &a, &alg),
            Err(TameError::Operad(OperadError::DenominatorNotInvertible { .. }))
        ));
        let g = gens(4, 2, &[2]);
        let alg = AlgebraStructure::random(g.signature(), 1, 7, 2).unwrap();
        let out = g.apply_word(&w, &a, &alg).unwrap();
        // 1 + 1/2 = 1 + 4 mod 7
        assert_eq!(out[3], vec![5]);
    }

    #[test]
    fn elementary_words_match_matrices() {
        let field = PrimeField::new(7).unwrap();
        let g = gens(4, 1, &[2]);
        let w = g.elementary_word(0, 1, 3).unwrap();
        assert_eq!(w, GroupWord::letter(g.alpha(1)).pow(3));
        assert_eq!(g.word_matrix(&w, &field).unwrap(), elem_matrix(4, 0, 1, 3));
        let w = g.elementary_word(0, 2, 1).unwrap();
        let e01 = elem_matrix(4, 0, 1, 1);
        let e12 = elem_matrix(4, 1, 2, 1);
        let inv = |m: &Matrix| m.inverse(&field).unwrap();
        // [a, b] = a⁻¹ b a b⁻¹ with M(g1 … gm) = M(gm) ⋯ M(g1)
        let expect = inv(&e12)
            .mul(&e01, &field)
            .unwrap()
            .mul(&e12, &field)
            .unwrap()
            .mul(&inv(&e01), &field)
            .unwrap();
        assert_eq!(g.word_matrix(&w, &field).unwrap(), expect);
        assert_eq!(expect, elem_matrix(4, 0, 2, 1));
        for n in [3, 4, 5] {
            let g = gens(n, 2, &[2]);
            let f = PrimeField::new(11).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    for r in [-2i64, 1, 5] {
                        let w = g.elementary_word(i, j, r).unwrap();
                        let m = g.word_matrix(&w, &f).unwrap();
                        assert_eq!(m, elem_matrix(n, i, j, f.reduce_i64(r)), "{i} {j} {r}");
                    }
                }
            }
        }
        assert!(matches!(g.elementary_word(1, 1, 1), Err(TameError::SameIndex(1))));
    }

    #[test]
    fn signed_swap_matrix() {
        let field = PrimeField::new(7).unwrap();
        let g = gens(4, 1, &[2]);
        let w = g.signed_swap(1, 3).unwrap();
        let m = g.word_matrix(&w, &field).unwrap();
        let mut expect = Matrix::identity(4);
        expect.set(1, 1, 0);
        expect.set(3, 3, 0);
        expect.set(1, 3, 1);
        expect.set(3, 1, 6);
        assert_eq!(m, expect);
    }

    #[test]
    fn permutation_words() {
        let g = gens(4, 1, &[2]);
        assert!(g.permutation_word(&[0, 1, 2, 3]).unwrap().is_empty());
        assert!(matches!(
            g.permutation_word(&[1, 0, 2, 3]),
            Err(TameError::OddPermutation)
        ));
        let w = g.permutation_word(&[1, 2, 0, 3]).unwrap();
        let sp = SignedPerm::of_word(&g, &w).unwrap();
        assert_eq!(sp.img, vec![1, 2, 0, 3]);
        assert_eq!(sp.sign, vec![1; 4]);
        let w = g.signed_permutation_word(&[1, 0, 2, 3], &[1, 1, 1, -1]).unwrap();
        let sp = SignedPerm::of_word(&g, &w).unwrap();
        assert_eq!(sp.img, vec![1, 0, 2, 3]);
        assert_eq!(sp.sign, vec![1, 1, 1, -1]);
    }

    #[test]
    fn conjugation_moves_transvections() {
        let g = gens(4, 1, &[2]);
        let sigma = [1, 2, 0, 3];
        let p = g.permutation_word(&sigma).unwrap();
        let t = g.elementary_word(0, 1, 1).unwrap();
        let conj = p.concat(&t).concat(&p.inverse());
        // P ∘ t_0(x_1) ∘ P⁻¹ = t_{σ(0)}(x_{σ(1)})
        let alg = AlgebraStructure::random(g.signature(), 2, 3, 4).unwrap();
        let expect = Transvection::new(1, FreeElement::var(2)).unwrap();
        let mut r = rng::stream(9, 0);
        for _ in 0..100 {
            let v = random_tuple(4, 2, 3, &mut r);
            assert_eq!(g.apply_word(&conj, &v, &alg).unwrap(), expect.apply(&v, &alg).unwrap());
        }
        assert!(g.verify_word_symbolic(&conj, &expect, 3).unwrap());
    }

    #[test]
    fn symbolic_verification_examples() {
        let g = gens(5, 1, &[2]);
        assert!(g.verify_word_symbolic(&GroupWord::empty(), &Transvection::identity(0), 4).unwrap());
        // [β', γ_1] with f_1 = x_1, ℓ = 2
        let s = g.signature().clone();
        let beta_p = FreeElement::from_term(Term::node(0, vec![Term::Var(3), Term::Var(4)]));
        let sigma = [0, 3, 4, 1, 2];
        let p = g.permutation_word(&sigma).unwrap();
        let bp = GammaGenerators::conjugate(&p, &GroupWord::letter(g.beta(0)));
        assert!(g
            .verify_word_symbolic(&bp, &Transvection::new(0, beta_p).unwrap(), 4)
            .unwrap());
        let gamma = GammaGenerators::conjugate(&g.signed_swap(0, 3).unwrap(), &g.elementary_word(0, 1, 1).unwrap());
        assert!(g
            .verify_word_symbolic(&gamma, &Transvection::new(3, FreeElement::var(1)).unwrap(), 4)
            .unwrap());
        let c = GroupWord::commutator(&bp, &gamma);
        let expect = Transvection::new(0, parse_element("s0(x1, x4)", &s).unwrap()).unwrap();
        assert!(g.verify_word_symbolic(&c, &expect, 4).unwrap());
        assert!(matches!(
            g.verify_word_symbolic(&c, &expect, 1),
            Err(TameError::DegreeCap { .. })
        ));
    }

    #[test]
    fn transvection_word_examples() {
        let g = gens(5, 1, &[2]);
        let s = g.signature().clone();
        let w = g.transvection_word(&FreeElement::var(1)).unwrap();
        assert_eq!(w, g.elementary_word(0, 1, 1).unwrap());
        let f = parse_element("s0(x1, x2)", &s).unwrap();
        let w = g.transvection_word(&f).unwrap();
        let expect = Transvection::new(0, f.clone()).unwrap();
        assert!(g.verify_word_symbolic(&w, &expect, 4).unwrap());
        let mut r = rng::stream(3, 0);
        for seed in 0..3 {
            let alg = AlgebraStructure::random(&s, 2, 3, 100 + seed).unwrap();
            for _ in 0..200 {
                let v = random_tuple(5, 2, 3, &mut r);
                assert_eq!(g.apply_word(&w, &v, &alg).unwrap(), expect.apply(&v, &alg).unwrap());
            }
        }
        let f = parse_element("s0(x1, s0(x1, x2))", &s).unwrap();
        let w = g.transvection_word(&f).unwrap();
        assert!(g.verify_word_symbolic(&w, &Transvection::new(0, f).unwrap(), 4).unwrap());
        let f = parse_element("2*x2 - 3*s0(x2, x1) + x1", &s).unwrap();
        let w = g.transvection_word(&f).unwrap();
        assert!(g.verify_word_symbolic(&w, &Transvection::new(0, f).unwrap(), 4).unwrap());
    }

    #[test]
    fn transvection_word_errors() {
        let g = gens(5, 1, &[2]);
        assert!(matches!(
            g.transvection_word(&FreeElement::var(3)),
            Err(TameError::VariableOutOfRange { var: 3, max: 2 })
        ));
        assert!(matches!(
            g.transvection_word(&FreeElement::var(0)),
            Err(TameError::VariableOutOfRange { var: 0, .. })
        ));
        let half = FreeElement::var(1).scale(&BigRational::new(1.into(), 2.into()));
        assert!(matches!(
            g.transvection_word(&half),
            Err(TameError::NonIntegerCoefficient(_))
        ));
    }

    #[test]
    fn ternary_transvection_word() {
        let g = gens(6, 1, &[3]);
        let s = g.signature().clone();
        let f = parse_element("s0(x1, x2, x1)", &s).unwrap();
        let w = g.transvection_word(&f).unwrap();
        assert!(g.verify_word_symbolic(&w, &Transvection::new(0, f).unwrap(), 3).unwrap());
    }

    #[test]
    fn compiled_generators_match_transvections() {
        let g = gens(5, 2, &[2, 3]);
        let alg = AlgebraStructure::random(g.signature(), 2, 5, 8).unwrap();
        let c = g.compile(&alg).unwrap();
        let mut r = rng::stream(4, 0);
        for _ in 0..50 {
            let v = random_tuple(5, 2, 5, &mut r);
            for gen in 0..g.len() {
                for inv in [false, true] {
                    let l = Letter { gen: gen as u32, inv };
                    let w = GroupWord::from_letters(vec![l]);
                    let mut fast = v.clone();
                    c.apply_letter(l, &mut fast);
                    assert_eq!(fast, g.apply_word(&w, &v, &alg).unwrap());
                }
            }
        }
        let bad = AlgebraStructure::random(g.signature(), 1, 2, 1).unwrap();
        assert!(g.compile(&bad).is_err());
    }

    #[test]
    fn word_text_round_trip() {
        let g = gens(4, 1, &[2]);
        let w = g.parse_word("a1 a2^-1 b:s0 a4^3").unwrap();
        assert_eq!(w.len(), 6);
        let text = g.display_word(&w).to_string();
        assert_eq!(text, "a1 a2^-1 b:s0 a4^3");
        assert_eq!(g.parse_word(&text).unwrap(), w);
        assert!(matches!(g.parse_word("c1"), Err(TameError::UnknownGenerator(_))));
        assert!(matches!(g.parse_word("a1^x"), Err(TameError::Parse(_))));
    }

    #[test]
    fn crt_examples() {
        let s = Signature::with_arities(&[2, 2]).unwrap();
        let alg = AlgebraStructure::random(&s, 2, 3, 1).unwrap();
        let a = vec![1, 2];
        let sol = crt_solve(&alg, core::slice::from_ref(&a), core::slice::from_ref(&a), 8).unwrap();
        assert_eq!(sol.element, FreeElement::var(0));
        let f = alg.field();
        let mut found = 0;
        for seed in 0..40 {
            let alg = AlgebraStructure::random(&s, 2, 3, seed).unwrap();
            if !is_minimal(&alg) {
                continue;
            }
            found += 1;
            for b in f.vectors(2) {
                let sol = crt_solve(&alg, core::slice::from_ref(&a), core::slice::from_ref(&b), 8).unwrap();
                assert!(crt_check(&alg, &sol.element, core::slice::from_ref(&a), core::slice::from_ref(&b)).unwrap());
            }
        }
        assert!(found > 5);
    }

    #[test]
    fn crt_same_orbit_fails() {
        // a_2 = a_1 with different targets
        let s = Signature::with_arities(&[2, 2]).unwrap();
        let alg = (0..)
            .map(|seed| AlgebraStructure::random(&s, 2, 3, seed).unwrap())
            .find(is_minimal)
            .unwrap();
        let a = vec![1, 0];
        assert_eq!(
            crt_solve(&alg, &[a.clone(), a.clone()], &[vec![1, 1], vec![0, 1]], 8),
            Err(TameError::NoSolution { d_max: 8 })
        );
        // a_2 = -a_1 with b_2 ≠ -b_1; -Id is an automorphism of ternary structures
        let s = Signature::with_arities(&[3]).unwrap();
        let f = alg.field();
        let mut tested = 0;
        for seed in 0..40 {
            let alg = AlgebraStructure::random(&s, 2, 3, seed).unwrap();
            if !is_minimal(&alg) {
                continue;
            }
            let aut = automorphisms(&alg).unwrap();
            let Some(phi) = aut.elements().iter().find(|m| !m.is_identity()) else {
                continue;
            };
            let a1 = vec![0, 1];
            let a2 = phi.mul_vec(&a1, &f);
            let b1 = vec![1, 1];
            let b2 = f.vectors(2).find(|b| *b != phi.mul_vec(&b1, &f)).unwrap();
            assert_eq!(
                crt_solve(&alg, &[a1, a2], &[b1, b2], 8),
                Err(TameError::NoSolution { d_max: 8 })
            );
            tested += 1;
        }
        assert!(tested > 0);
    }
}
