//! Algebra structures on `F_p^k` given by structure tensors, subalgebra
//! closure with witnesses, minimality, automorphisms and isomorphisms.
//!
//! The tensor of an operation of arity `r` is a flat array of `k^r · k`
//! residues; the value of `⋆(e_{i1}, …, e_{ir})` sits at offset
//! `((i1·k + i2)·k + … + ir)·k`.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::ffield::{gl_order, EchelonBasis, FieldError, Matrix, PrimeField};
use crate::operad::{evaluate_term, OperadError, Signature, Term};
use crate::rng;

/// Upper bound on `|GL_k(F_p)|` for the enumeration oracles.
pub const GL_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Operad(#[from] OperadError),
    #[error("tensor of `{op}` has {found} entries, expected {expected}")]
    TensorLength {
        op: alloc::string::String,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} tensors, got {found}")]
    TensorCount { expected: usize, found: usize },
    #[error("tensor entry {value} is not reduced mod {p}")]
    EntryOutOfRange { value: u32, p: u32 },
    #[error("dimension k must be at least 1")]
    ZeroDimension,
    #[error("the algebra is not minimal; use the enumeration oracle instead")]
    NotMinimal,
    #[error("algebras differ in signature, dimension or modulus")]
    Incompatible,
    #[error("|GL_k(F_p)| exceeds the enumeration budget {budget}")]
    GlBudget { budget: u64 },
}

/// An algebra structure on `F_p^k` for a signature.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlgebraStructure {
    field: PrimeField,
    k: usize,
    sig: Signature,
    tensors: Vec<Vec<u32>>,
}

fn tensor_len(k: usize, arity: usize) -> usize {
    k.pow(arity as u32 + 1)
}

impl AlgebraStructure {
    pub fn new(
        field: PrimeField,
        k: usize,
        sig: Signature,
        tensors: Vec<Vec<u32>>,
    ) -> Result<Self, AlgebraError> {
        if k == 0 {
            return Err(AlgebraError::ZeroDimension);
        }
        if tensors.len() != sig.len() {
            return Err(AlgebraError::TensorCount {
                expected: sig.len(),
                found: tensors.len(),
            });
        }
        for (op, t) in tensors.iter().enumerate() {
            let expected = tensor_len(k, sig.arity(op));
            if t.len() != expected {
                return Err(AlgebraError::TensorLength {
                    op: sig.name(op).into(),
                    expected,
                    found: t.len(),
                });
            }
            if let Some(&value) = t.iter().find(|&&v| v >= field.p()) {
                return Err(AlgebraError::EntryOutOfRange {
                    value,
                    p: field.p(),
                });
            }
        }
        Ok(Self {
            field,
            k,
            sig,
            tensors,
        })
    }

    /// All tensors zero.
    pub fn zero(field: PrimeField, k: usize, sig: Signature) -> Result<Self, AlgebraError> {
        let tensors = (0..sig.len())
            .map(|op| vec![0; tensor_len(k, sig.arity(op))])
            .collect();
        Self::new(field, k, sig, tensors)
    }

    /// `Σ_s k^{ar(s)+1}`, the number of free parameters.
    pub fn parameter_count(sig: &Signature, k: usize) -> usize {
        (0..sig.len()).map(|op| tensor_len(k, sig.arity(op))).sum()
    }

    /// Entries drawn uniformly from `rng`, op by op in flat tensor order.
    pub fn random_with<R: RngCore>(
        sig: &Signature,
        k: usize,
        field: PrimeField,
        rng: &mut R,
    ) -> Result<Self, AlgebraError> {
        let tensors = (0..sig.len())
            .map(|op| {
                (0..tensor_len(k, sig.arity(op)))
                    .map(|_| rng::below(rng, field.p()))
                    .collect()
            })
            .collect();
        Self::new(field, k, sig.clone(), tensors)
    }

    /// The structure drawn from stream 0 of `seed`.
    pub fn random(sig: &Signature, k: usize, p: u32, seed: u64) -> Result<Self, AlgebraError> {
        let field = PrimeField::new(p)?;
        Self::random_with(sig, k, field, &mut rng::stream(seed, 0))
    }

    /// The structure whose concatenated entries are the base-`p` digits of
    /// `index`, most significant first.
    pub fn from_index(
        sig: &Signature,
        k: usize,
        field: PrimeField,
        index: u64,
    ) -> Result<Self, AlgebraError> {
        let digits = field.digits(index, Self::parameter_count(sig, k));
        Self::from_flat(sig, k, field, &digits)
    }

    pub fn from_flat(
        sig: &Signature,
        k: usize,
        field: PrimeField,
        flat: &[u32],
    ) -> Result<Self, AlgebraError> {
        let mut tensors = Vec::with_capacity(sig.len());
        let mut at = 0;
        for op in 0..sig.len() {
            let len = tensor_len(k, sig.arity(op));
            let Some(chunk) = flat.get(at..at + len) else {
                return Err(AlgebraError::TensorLength {
                    op: sig.name(op).into(),
                    expected: len,
                    found: flat.len().saturating_sub(at),
                });
            };
            tensors.push(chunk.to_vec());
            at += len;
        }
        Self::new(field, k, sig.clone(), tensors)
    }

    /// Concatenated tensor entries.
    pub fn encode(&self) -> Vec<u32> {
        self.tensors.concat()
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn p(&self) -> u32 {
        self.field.p()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn tensor(&self, op: usize) -> &[u32] {
        &self.tensors[op]
    }

    pub fn tensors(&self) -> &[Vec<u32>] {
        &self.tensors
    }

    fn compatible(&self, other: &Self) -> bool {
        self.field == other.field && self.k == other.k && self.sig == other.sig
    }

    /// `⋆_op(e_{idx[0]}, …)`.
    pub fn basis_value(&self, op: usize, idx: &[usize]) -> &[u32] {
        let off = idx.iter().fold(0, |acc, &i| acc * self.k + i) * self.k;
        &self.tensors[op][off..off + self.k]
    }

    /// `⋆_op(args…)` by contracting one argument at a time.
    pub fn apply(&self, op: usize, args: &[&[u32]]) -> Vec<u32> {
        debug_assert_eq!(args.len(), self.sig.arity(op));
        let mut cur = self.contract(&self.tensors[op], args[0]);
        for a in &args[1..] {
            cur = self.contract(&cur, a);
        }
        cur
    }

    fn contract(&self, t: &[u32], a: &[u32]) -> Vec<u32> {
        let rest = t.len() / self.k;
        let mut acc = vec![0u64; rest];
        for (i, &c) in a.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let block = &t[i * rest..(i + 1) * rest];
            for (slot, &v) in acc.iter_mut().zip(block) {
                *slot += u64::from(c) * u64::from(v);
            }
        }
        acc.into_iter().map(|v| self.field.reduce_u64(v)).collect()
    }

    /// The structure `B` with `⋆_B(y…) = M ⋆(M⁻¹ y, …)`, so that `M` is an
    /// isomorphism from `self` to `B`.
    pub fn transport(&self, m: &Matrix) -> Result<Self, AlgebraError> {
        let f = &self.field;
        let inv = m
            .inverse(f)
            .ok_or(FieldError::DimensionMismatch {
                expected: self.k,
                found: m.rank(f),
            })?;
        let cols: Vec<Vec<u32>> = (0..self.k).map(|j| inv.column(j)).collect();
        let mut tensors = Vec::with_capacity(self.sig.len());
        for op in 0..self.sig.len() {
            let r = self.sig.arity(op);
            let mut t = Vec::with_capacity(tensor_len(self.k, r));
            for tuple in tuples(self.k, r) {
                let args: Vec<&[u32]> = tuple.iter().map(|&i| cols[i].as_slice()).collect();
                t.extend(m.mul_vec(&self.apply(op, &args), f));
            }
            tensors.push(t);
        }
        Self::new(self.field, self.k, self.sig.clone(), tensors)
    }

    /// Whether `m` intertwines: `m ⋆_self(e…) = ⋆_other(m e, …)` on basis tuples.
    pub fn is_homomorphism_to(&self, other: &Self, m: &Matrix) -> bool {
        let f = &self.field;
        let cols: Vec<Vec<u32>> = (0..self.k).map(|j| m.column(j)).collect();
        (0..self.sig.len()).all(|op| {
            tuples(self.k, self.sig.arity(op)).all(|tuple| {
                let lhs = m.mul_vec(self.basis_value(op, &tuple), f);
                let args: Vec<&[u32]> = tuple.iter().map(|&i| cols[i].as_slice()).collect();
                lhs == other.apply(op, &args)
            })
        })
    }

    pub fn is_automorphism(&self, m: &Matrix) -> bool {
        m.inverse(&self.field).is_some() && self.is_homomorphism_to(self, m)
    }

    /// Whether `span(basis)` is closed under every operation.
    pub fn is_invariant(&self, basis: &EchelonBasis) -> bool {
        let rows = basis.rows();
        (0..self.sig.len()).all(|op| {
            tuples(rows.len(), self.sig.arity(op)).all(|tuple| {
                let args: Vec<&[u32]> = tuple.iter().map(|&i| rows[i].as_slice()).collect();
                basis.contains(&self.apply(op, &args))
            })
        })
    }
}

/// All tuples in `[0, k)^r`, last index fastest.
pub fn tuples(k: usize, r: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = if k == 0 && r > 0 { 0 } else { k.pow(r as u32) };
    (0..total).map(move |mut idx| {
        let mut t = vec![0; r];
        for slot in t.iter_mut().rev() {
            *slot = idx % k;
            idx /= k;
        }
        t
    })
}

/// The subalgebra generated by some seeds, with a witness term for each
/// spanning vector. Variable `x_j` in a witness stands for seed `j`.
#[derive(Debug, Clone)]
pub struct SubalgebraBasis {
    pub basis: EchelonBasis,
    pub generators: Vec<Vec<u32>>,
    pub witnesses: Vec<Term>,
    pub closed: bool,
}

impl SubalgebraBasis {
    pub fn dim(&self) -> usize {
        self.basis.rank()
    }
}

/// Least invariant subspace containing `seeds`, by fixpoint iteration over
/// tuples of spanning vectors.
pub fn generated_subalgebra(alg: &AlgebraStructure, seeds: &[Vec<u32>]) -> SubalgebraBasis {
    let mut basis = EchelonBasis::new(alg.field, alg.k);
    let mut generators = Vec::new();
    let mut witnesses = Vec::new();
    for (j, s) in seeds.iter().enumerate() {
        if basis.insert(s) {
            generators.push(s.clone());
            witnesses.push(Term::Var(j as u32));
        }
    }
    // tuples using only generators below `done` were already closed
    let mut done = 0;
    while done < generators.len() && !basis.is_full() {
        let upto = generators.len();
        'ops: for op in 0..alg.sig.len() {
            let r = alg.sig.arity(op);
            for tuple in tuples(upto, r) {
                if tuple.iter().all(|&i| i < done) {
                    continue;
                }
                let args: Vec<&[u32]> = tuple.iter().map(|&i| generators[i].as_slice()).collect();
                let v = alg.apply(op, &args);
                if basis.insert(&v) {
                    let children = tuple.iter().map(|&i| witnesses[i].clone()).collect();
                    generators.push(v);
                    witnesses.push(Term::node(op, children));
                    if basis.is_full() {
                        break 'ops;
                    }
                }
            }
        }
        done = upto;
    }
    SubalgebraBasis {
        basis,
        generators,
        witnesses,
        closed: true,
    }
}

/// Minimality by closure from one vector on each projective line.
pub fn is_minimal(alg: &AlgebraStructure) -> bool {
    alg.field
        .projective_points(alg.k)
        .all(|v| generated_subalgebra(alg, &[v]).basis.is_full())
}

/// Minimality by checking that no proper nonzero subspace is invariant.
pub fn is_minimal_oracle(alg: &AlgebraStructure) -> Result<bool, AlgebraError> {
    for d in 1..alg.k {
        for w in crate::ffield::enumerate_subspaces(alg.k, d, alg.p())? {
            let mut basis = EchelonBasis::new(alg.field, alg.k);
            for i in 0..w.rows() {
                basis.insert(w.row(i));
            }
            if alg.is_invariant(&basis) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Whether some line `span{v}` is closed under every operation.
pub fn has_one_dim_subalgebra(alg: &AlgebraStructure) -> bool {
    alg.field.projective_points(alg.k).any(|v| {
        let mut basis = EchelonBasis::new(alg.field, alg.k);
        basis.insert(&v);
        (0..alg.sig.len()).all(|op| {
            let args = vec![v.as_slice(); alg.sig.arity(op)];
            basis.contains(&alg.apply(op, &args))
        })
    })
}

/// `{λ ∈ F_p^* : λ^{ar(s)-1} = 1 for every s}`.
pub fn scalar_group(sig: &Signature, field: &PrimeField) -> Vec<u32> {
    (1..field.p())
        .filter(|&l| {
            sig.ops()
                .iter()
                .all(|o| field.pow(l, (o.arity - 1) as u64) == 1)
        })
        .collect()
}

/// A finite group of invertible matrices, stored as a sorted list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutGroup {
    field: PrimeField,
    k: usize,
    elements: Vec<Matrix>,
}

impl AutGroup {
    fn from_elements(field: PrimeField, k: usize, mut elements: Vec<Matrix>) -> Self {
        elements.sort();
        elements.dedup();
        Self {
            field,
            k,
            elements,
        }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Matrix] {
        &self.elements
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn contains(&self, m: &Matrix) -> bool {
        self.elements.binary_search(m).is_ok()
    }

    /// Closure under products and inverses, identity included.
    pub fn is_group(&self) -> bool {
        let f = &self.field;
        self.contains(&Matrix::identity(self.k))
            && self.elements.iter().all(|a| {
                a.inverse(f).is_some_and(|i| self.contains(&i))
                    && self
                        .elements
                        .iter()
                        .all(|b| a.mul(b, f).is_ok_and(|ab| self.contains(&ab)))
            })
    }

    /// Whether every element is a scalar matrix.
    pub fn is_scalar(&self) -> bool {
        self.elements.iter().all(|m| {
            let l = m.get(0, 0);
            (0..self.k).all(|i| (0..self.k).all(|j| m.get(i, j) == if i == j { l } else { 0 }))
        })
    }

    /// Whether the group is exactly the scalar group of the signature.
    pub fn is_trivial(&self, sig: &Signature) -> bool {
        self.is_scalar() && self.order() == scalar_group(sig, &self.field).len()
    }

    /// Sizes of the orbits on `F_p^k`, in order of least element index.
    pub fn orbit_sizes(&self) -> Vec<usize> {
        let f = &self.field;
        let total = (f.p() as usize).pow(self.k as u32);
        let mut seen = vec![false; total];
        let mut sizes = Vec::new();
        for idx in 0..total {
            if seen[idx] {
                continue;
            }
            let v = f.digits(idx as u64, self.k);
            let orbit: BTreeSet<u64> = self
                .elements
                .iter()
                .map(|m| f.undigits(&m.mul_vec(&v, f)))
                .collect();
            for &o in &orbit {
                seen[o as usize] = true;
            }
            sizes.push(orbit.len());
        }
        sizes
    }

    /// Orbit counts on `A` and on `A ∖ 0`.
    pub fn orbit_counts(&self) -> (usize, usize) {
        let all = self.orbit_sizes().len();
        (all, all - 1)
    }
}

fn generator_data(
    alg: &AlgebraStructure,
) -> Result<(Vec<Term>, Matrix), AlgebraError> {
    let mut a = vec![0; alg.k];
    a[0] = 1;
    let sub = generated_subalgebra(alg, &[a]);
    if !sub.basis.is_full() || !is_minimal(alg) {
        return Err(AlgebraError::NotMinimal);
    }
    let g = Matrix::from_columns(&sub.generators, alg.k)?;
    let g_inv = g.inverse(&alg.field).ok_or(AlgebraError::NotMinimal)?;
    Ok((sub.witnesses, g_inv))
}

/// Candidate maps sending the generator `e_0` to each nonzero `b` of
/// `target`, rebuilt from witnesses.
fn candidate_maps<'a>(
    source: &'a AlgebraStructure,
    target: &'a AlgebraStructure,
) -> Result<impl Iterator<Item = Matrix> + 'a, AlgebraError> {
    let (witnesses, g_inv) = generator_data(source)?;
    let f = source.field;
    Ok(source.field.vectors(source.k).skip(1).filter_map(move |b| {
        let images = witnesses
            .iter()
            .map(|w| evaluate_term(w, core::slice::from_ref(&b), target))
            .collect::<Result<Vec<_>, _>>()
            .ok()?;
        let h = Matrix::from_columns(&images, source.k).ok()?;
        let m = h.mul(&g_inv, &f).ok()?;
        m.inverse(&f)?;
        source.is_homomorphism_to(target, &m).then_some(m)
    }))
}

/// `Aut(A)` for minimal `A`: an automorphism is determined by the image of
/// one generator.
pub fn automorphisms(alg: &AlgebraStructure) -> Result<AutGroup, AlgebraError> {
    let elements = candidate_maps(alg, alg)?.collect();
    Ok(AutGroup::from_elements(alg.field, alg.k, elements))
}

/// Every invertible matrix over `F_p`, column by column.
pub fn general_linear_group(
    k: usize,
    field: PrimeField,
) -> Result<Vec<Matrix>, AlgebraError> {
    let order = gl_order(k, field.p());
    if order > num_bigint::BigUint::from(GL_BUDGET) {
        return Err(AlgebraError::GlBudget { budget: GL_BUDGET });
    }
    let mut out = Vec::new();
    let mut cols: Vec<Vec<u32>> = Vec::with_capacity(k);
    gl_rec(k, &field, &mut cols, &mut out);
    Ok(out)
}

fn gl_rec(k: usize, field: &PrimeField, cols: &mut Vec<Vec<u32>>, out: &mut Vec<Matrix>) {
    if cols.len() == k {
        if let Ok(m) = Matrix::from_columns(cols, k) {
            out.push(m);
        }
        return;
    }
    let mut span = EchelonBasis::new(*field, k);
    for c in cols.iter() {
        span.insert(c);
    }
    for v in field.vectors(k) {
        if span.contains(&v) {
            continue;
        }
        cols.push(v);
        gl_rec(k, field, cols, out);
        cols.pop();
    }
}

/// `Aut(A)` for any `A` by scanning `GL_k(F_p)`.
pub fn automorphisms_oracle(alg: &AlgebraStructure) -> Result<AutGroup, AlgebraError> {
    let elements = general_linear_group(alg.k, alg.field)?
        .into_iter()
        .filter(|m| alg.is_homomorphism_to(alg, m))
        .collect();
    Ok(AutGroup::from_elements(alg.field, alg.k, elements))
}

/// An isomorphism `A → B` for minimal `A` and `B`, or `None`.
pub fn are_isomorphic(
    a: &AlgebraStructure,
    b: &AlgebraStructure,
) -> Result<Option<Matrix>, AlgebraError> {
    if !a.compatible(b) {
        return Err(AlgebraError::Incompatible);
    }
    if !is_minimal(b) {
        return Err(AlgebraError::NotMinimal);
    }
    Ok(candidate_maps(a, b)?.next())
}

/// An isomorphism found by scanning `GL_k(F_p)`.
pub fn are_isomorphic_oracle(
    a: &AlgebraStructure,
    b: &AlgebraStructure,
) -> Result<Option<Matrix>, AlgebraError> {
    if !a.compatible(b) {
        return Err(AlgebraError::Incompatible);
    }
    Ok(general_linear_group(a.k, a.field)?
        .into_iter()
        .find(|m| a.is_homomorphism_to(b, m)))
}

/// Least encoding over the `GL_k` orbit; equal exactly for isomorphic
/// structures.
pub fn canonical_form(
    alg: &AlgebraStructure,
    gl: &[Matrix],
) -> Result<Vec<u32>, AlgebraError> {
    let mut best: Option<Vec<u32>> = None;
    for m in gl {
        let e = alg.transport(m)?.encode();
        if best.as_ref().is_none_or(|b| e < *b) {
            best = Some(e);
        }
    }
    Ok(best.unwrap_or_else(|| alg.encode()))
}
