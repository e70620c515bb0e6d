//! Terms of the free operad on a finite signature, elements of the free
//! algebra with exact rational coefficients, evaluation in a finite algebra,
//! and degree-truncated substitution.
//!
//! A [`Term`] is a planar rooted tree: leaves carry variable indices and
//! internal nodes carry an operation index into a [`Signature`]. Leaf
//! numbering plays the role of the symmetric-group action, so there is no
//! separate permutation API.
//!
//! Text format: variables are `x0, x1, …`; a node is `name(arg, …)`; an
//! element is a sum of optionally scaled terms such as
//! `3/5*m(x1, x2) + x1 - 2*t(x1, x2, x1)`. The zero element is `0`.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::algebra::AlgebraStructure;
use crate::ffield::PrimeField;

/// Degree cap used when none is given explicitly.
pub const DEFAULT_DEGREE_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OperadError {
    #[error("operation `{0}` has arity 0; constants are not allowed")]
    ZeroArity(String),
    #[error("operation name `{0}` is used twice")]
    DuplicateName(String),
    #[error("`{0}` is not a valid operation name")]
    InvalidName(String),
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("operation index {0} is not in the signature")]
    UnknownOperationIndex(usize),
    #[error("operation `{op}` takes {expected} arguments, got {found}")]
    ArityMismatch {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("graft position {i} is outside 1..={leaves}")]
    GraftPosition { i: usize, leaves: usize },
    #[error("term leaves are not numbered 0..n-1 exactly once")]
    NotOperadElement,
    #[error("the zero element has no degree")]
    ZeroElement,
    #[error("variable x{0} has no image")]
    UncoveredVariable(u32),
    #[error("variable x{0} is not assigned")]
    UnassignedVariable(u32),
    #[error("coefficient denominator {den} is divisible by {p}")]
    DenominatorNotInvertible { den: String, p: u32 },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("assignment vector has length {found}, algebra dimension is {expected}")]
    AssignmentDimension { expected: usize, found: usize },
}

/// One abstract operation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Operation {
    pub name: String,
    pub arity: usize,
}

/// A finite list of named operations with positive arities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Signature {
    ops: Vec<Operation>,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    if !first.is_ascii_alphabetic() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
    {
        return false;
    }
    // `x<digits>` is reserved for variables
    !(first == 'x' && name.len() > 1 && name[1..].chars().all(|c| c.is_ascii_digit()))
}

impl Signature {
    pub fn new(ops: Vec<Operation>) -> Result<Self, OperadError> {
        let mut seen = BTreeSet::new();
        for op in &ops {
            if !valid_name(&op.name) {
                return Err(OperadError::InvalidName(op.name.clone()));
            }
            if op.arity == 0 {
                return Err(OperadError::ZeroArity(op.name.clone()));
            }
            if !seen.insert(op.name.clone()) {
                return Err(OperadError::DuplicateName(op.name.clone()));
            }
        }
        Ok(Self { ops })
    }

    /// Builds a signature from `(name, arity)` pairs.
    pub fn from_pairs(pairs: &[(&str, usize)]) -> Result<Self, OperadError> {
        Self::new(
            pairs
                .iter()
                .map(|&(name, arity)| Operation {
                    name: name.to_owned(),
                    arity,
                })
                .collect(),
        )
    }

    /// Operations with the given arities, named `s0, s1, …`.
    pub fn with_arities(arities: &[usize]) -> Result<Self, OperadError> {
        Self::new(
            arities
                .iter()
                .enumerate()
                .map(|(i, &arity)| Operation {
                    name: format!("s{i}"),
                    arity,
                })
                .collect(),
        )
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn arity(&self, op: usize) -> usize {
        self.ops[op].arity
    }

    pub fn name(&self, op: usize) -> &str {
        &self.ops[op].name
    }

    /// `ar S`: the largest arity, 0 for the empty signature.
    pub fn max_arity(&self) -> usize {
        self.ops.iter().map(|o| o.arity).max().unwrap_or(0)
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.ops.iter().position(|o| o.name == name)
    }
}

/// A planar rooted tree with variable-labelled leaves.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(u32),
    Node {
        op: u32,
        leaves: u32,
        children: Vec<Term>,
    },
}

impl Term {
    pub fn var(i: u32) -> Self {
        Term::Var(i)
    }

    /// A node without checking the child count against a signature.
    pub fn node(op: usize, children: Vec<Term>) -> Self {
        let leaves = children.iter().map(Term::leaf_count).sum::<usize>() as u32;
        Term::Node {
            op: op as u32,
            leaves,
            children,
        }
    }

    pub fn node_checked(sig: &Signature, op: usize, children: Vec<Term>) -> Result<Self, OperadError> {
        let t = Self::node(op, children);
        t.validate(sig)?;
        Ok(t)
    }

    /// Number of leaves, which is also the degree of the monomial.
    pub fn leaf_count(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Node { leaves, .. } => *leaves as usize,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::Node { children, .. } => 1 + children.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    /// Leaf labels from left to right.
    pub fn leaf_labels(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.leaf_count());
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<u32>) {
        match self {
            Term::Var(i) => out.push(*i),
            Term::Node { children, .. } => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    pub fn max_var(&self) -> u32 {
        match self {
            Term::Var(i) => *i,
            Term::Node { children, .. } => children.iter().map(Term::max_var).max().unwrap_or(0),
        }
    }

    pub fn contains_var(&self, v: u32) -> bool {
        match self {
            Term::Var(i) => *i == v,
            Term::Node { children, .. } => children.iter().any(|c| c.contains_var(v)),
        }
    }

    pub fn rename(&self, f: &impl Fn(u32) -> u32) -> Term {
        match self {
            Term::Var(i) => Term::Var(f(*i)),
            Term::Node {
                op,
                leaves,
                children,
            } => Term::Node {
                op: *op,
                leaves: *leaves,
                children: children.iter().map(|c| c.rename(f)).collect(),
            },
        }
    }

    pub fn validate(&self, sig: &Signature) -> Result<(), OperadError> {
        match self {
            Term::Var(_) => Ok(()),
            Term::Node { op, children, .. } => {
                let op = *op as usize;
                if op >= sig.len() {
                    return Err(OperadError::UnknownOperationIndex(op));
                }
                if children.len() != sig.arity(op) {
                    return Err(OperadError::ArityMismatch {
                        op: sig.name(op).to_owned(),
                        expected: sig.arity(op),
                        found: children.len(),
                    });
                }
                children.iter().try_for_each(|c| c.validate(sig))
            }
        }
    }

    /// Whether the leaves carry each of `0..leaf_count` exactly once.
    pub fn is_operad_element(&self) -> bool {
        let mut labels = self.leaf_labels();
        labels.sort_unstable();
        labels.iter().enumerate().all(|(i, &l)| l as usize == i)
    }

    fn cmp_preorder(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Term::Var(a), Term::Var(b)) => a.cmp(b),
            (Term::Var(_), Term::Node { .. }) => Ordering::Less,
            (Term::Node { .. }, Term::Var(_)) => Ordering::Greater,
            (
                Term::Node {
                    op: a, children: ca, ..
                },
                Term::Node {
                    op: b, children: cb, ..
                },
            ) => a.cmp(b).then_with(|| {
                for (x, y) in ca.iter().zip(cb) {
                    let o = x.cmp_preorder(y);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                ca.len().cmp(&cb.len())
            }),
        }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> TermDisplay<'a> {
        TermDisplay { term: self, sig }
    }
}

/// Canonical order: by degree, then by preorder sequence of labels.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        self.leaf_count()
            .cmp(&other.leaf_count())
            .then_with(|| self.cmp_preorder(other))
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub struct TermDisplay<'a> {
    term: &'a Term,
    sig: &'a Signature,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.term {
            Term::Var(i) => write!(f, "x{i}"),
            Term::Node { op, children, .. } => {
                let op = *op as usize;
                let name = if op < self.sig.len() {
                    self.sig.name(op)
                } else {
                    "?"
                };
                write!(f, "{name}(")?;
                for (j, c) in children.iter().enumerate() {
                    if j > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", c.display(self.sig))?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Operadic composition `outer ∘_i inner` (1-based `i`): the leaf labelled
/// `i` in `outer` is replaced by `inner`, whose labels shift up by `i - 1`,
/// and labels of `outer` above `i` shift up by `leaves(inner) - 1`.
pub fn graft(outer: &Term, i: usize, inner: &Term) -> Result<Term, OperadError> {
    if !outer.is_operad_element() || !inner.is_operad_element() {
        return Err(OperadError::NotOperadElement);
    }
    let m = outer.leaf_count();
    if i == 0 || i > m {
        return Err(OperadError::GraftPosition { i, leaves: m });
    }
    let n = inner.leaf_count() as u32;
    let target = (i - 1) as u32;
    let shifted = inner.rename(&|l| l + target);
    Ok(graft_rec(outer, target, n, &shifted))
}

fn graft_rec(t: &Term, target: u32, n: u32, inner: &Term) -> Term {
    match t {
        Term::Var(l) if *l == target => inner.clone(),
        Term::Var(l) if *l > target => Term::Var(l + n - 1),
        Term::Var(l) => Term::Var(*l),
        Term::Node { op, children, .. } => Term::node(
            *op as usize,
            children
                .iter()
                .map(|c| graft_rec(c, target, n, inner))
                .collect(),
        ),
    }
}

/// A finite linear combination of terms with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FreeElement {
    terms: BTreeMap<Term, BigRational>,
}

impl FreeElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn var(i: u32) -> Self {
        Self::from_term(Term::Var(i))
    }

    pub fn from_term(t: Term) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(t, BigRational::one());
        Self { terms }
    }

    pub fn from_terms(pairs: impl IntoIterator<Item = (Term, BigRational)>) -> Self {
        let mut e = Self::zero();
        for (t, c) in pairs {
            e.add_term(t, c);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, t: &Term) -> BigRational {
        self.terms.get(t).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add_term(&mut self, t: Term, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&t) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&t);
                }
            }
            None => {
                self.terms.insert(t, c);
            }
        }
    }

    pub fn add_scaled(&mut self, other: &FreeElement, c: &BigRational) {
        if c.is_zero() {
            return;
        }
        for (t, d) in &other.terms {
            self.add_term(t.clone(), d * c);
        }
    }

    pub fn add(&self, other: &FreeElement) -> FreeElement {
        let mut out = self.clone();
        out.add_scaled(other, &BigRational::one());
        out
    }

    pub fn sub(&self, other: &FreeElement) -> FreeElement {
        let mut out = self.clone();
        out.add_scaled(other, &-BigRational::one());
        out
    }

    pub fn scale(&self, c: &BigRational) -> FreeElement {
        if c.is_zero() {
            return FreeElement::zero();
        }
        FreeElement {
            terms: self.terms.iter().map(|(t, d)| (t.clone(), d * c)).collect(),
        }
    }

    pub fn neg(&self) -> FreeElement {
        self.scale(&-BigRational::one())
    }

    /// Maximum leaf count over the support.
    pub fn degree(&self) -> Result<usize, OperadError> {
        self.terms
            .keys()
            .map(Term::leaf_count)
            .max()
            .ok_or(OperadError::ZeroElement)
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().map(Term::leaf_count).min()
    }

    /// Drops every monomial of degree above `cap`.
    pub fn truncate(&self, cap: usize) -> FreeElement {
        FreeElement {
            terms: self
                .terms
                .iter()
                .filter(|(t, _)| t.leaf_count() <= cap)
                .map(|(t, c)| (t.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn variables(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for t in self.terms.keys() {
            out.extend(t.leaf_labels());
        }
        out
    }

    pub fn contains_var(&self, v: u32) -> bool {
        self.terms.keys().any(|t| t.contains_var(v))
    }

    /// Whether every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    pub fn validate(&self, sig: &Signature) -> Result<(), OperadError> {
        self.terms.keys().try_for_each(|t| t.validate(sig))
    }

    pub fn rename(&self, f: &impl Fn(u32) -> u32) -> FreeElement {
        FreeElement::from_terms(self.terms.iter().map(|(t, c)| (t.rename(f), c.clone())))
    }

    /// `⋆_op(args…)` expanded multilinearly, keeping monomials of degree at
    /// most `cap`.
    pub fn operate(op: usize, args: &[&FreeElement], cap: usize) -> FreeElement {
        let mut out = FreeElement::zero();
        if args.iter().any(|a| a.is_zero()) {
            return out;
        }
        let mins: Vec<usize> = args.iter().map(|a| a.min_degree().unwrap_or(1)).collect();
        // suffix sums of minimal degrees for pruning
        let mut tail = vec![0usize; args.len() + 1];
        for j in (0..args.len()).rev() {
            tail[j] = tail[j + 1] + mins[j];
        }
        if tail[0] > cap {
            return out;
        }
        let mut chosen: Vec<&Term> = Vec::with_capacity(args.len());
        expand(op, args, cap, &tail, 0, BigRational::one(), &mut chosen, &mut out);
        out
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> ElementDisplay<'a> {
        ElementDisplay { elem: self, sig }
    }
}

#[allow(clippy::too_many_arguments)]
fn expand<'a>(
    op: usize,
    args: &[&'a FreeElement],
    cap: usize,
    tail: &[usize],
    used: usize,
    coeff: BigRational,
    chosen: &mut Vec<&'a Term>,
    out: &mut FreeElement,
) {
    let j = chosen.len();
    if j == args.len() {
        let t = Term::node(op, chosen.iter().map(|&t| t.clone()).collect());
        out.add_term(t, coeff);
        return;
    }
    for (t, c) in &args[j].terms {
        let d = t.leaf_count();
        if used + d + tail[j + 1] > cap {
            continue;
        }
        chosen.push(t);
        expand(op, args, cap, tail, used + d, &coeff * c, chosen, out);
        chosen.pop();
    }
}

pub struct ElementDisplay<'a> {
    elem: &'a FreeElement,
    sig: &'a Signature,
}

impl fmt::Display for ElementDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.elem.is_zero() {
            return f.write_str("0");
        }
        for (i, (t, c)) in self.elem.terms.iter().enumerate() {
            let negative = c.is_negative();
            let abs = c.abs();
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if !abs.is_one() {
                write!(f, "{abs}*")?;
            }
            write!(f, "{}", t.display(self.sig))?;
        }
        Ok(())
    }
}

/// An algebra endomorphism given by the images of `x0 … x(n-1)`, with all
/// results truncated above a degree cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endomorphism {
    images: Vec<FreeElement>,
    cap: usize,
}

impl Endomorphism {
    pub fn identity(n: usize, cap: usize) -> Self {
        Self {
            images: (0..n as u32).map(FreeElement::var).collect(),
            cap,
        }
    }

    pub fn from_images(images: Vec<FreeElement>, cap: usize) -> Self {
        Self {
            images: images.into_iter().map(|e| e.truncate(cap)).collect(),
            cap,
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn arity(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, i: usize) -> &FreeElement {
        &self.images[i]
    }

    pub fn images(&self) -> &[FreeElement] {
        &self.images
    }

    pub fn set_image(&mut self, i: usize, e: FreeElement) {
        self.images[i] = e.truncate(self.cap);
    }

    pub fn substitute_term(&self, t: &Term) -> Result<FreeElement, OperadError> {
        match t {
            Term::Var(i) => self
                .images
                .get(*i as usize)
                .cloned()
                .ok_or(OperadError::UncoveredVariable(*i)),
            Term::Node { op, children, .. } => {
                let subs = children
                    .iter()
                    .map(|c| self.substitute_term(c))
                    .collect::<Result<Vec<_>, _>>()?;
                let refs: Vec<&FreeElement> = subs.iter().collect();
                Ok(FreeElement::operate(*op as usize, &refs, self.cap))
            }
        }
    }

    /// `φ(e)` truncated at the cap.
    pub fn substitute(&self, e: &FreeElement) -> Result<FreeElement, OperadError> {
        let mut out = FreeElement::zero();
        for (t, c) in e.iter() {
            if t.leaf_count() > self.cap {
                // substitution never lowers degree
                continue;
            }
            let s = self.substitute_term(t)?;
            out.add_scaled(&s, c);
        }
        Ok(out)
    }

    /// `self ∘ other`: first apply `other` to a variable, then `self`.
    pub fn compose(&self, other: &Endomorphism) -> Result<Endomorphism, OperadError> {
        let images = other
            .images
            .iter()
            .map(|e| self.substitute(e))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Endomorphism {
            images,
            cap: self.cap.min(other.cap),
        })
    }
}

/// Reduces a rational coefficient mod p.
pub fn rational_residue(q: &BigRational, field: &PrimeField) -> Result<u32, OperadError> {
    let p = BigInt::from(field.p());
    let num = (q.numer() % &p + &p) % &p;
    let den = (q.denom() % &p + &p) % &p;
    let den = den.to_u32().unwrap_or(0);
    let inv = field
        .inv(den)
        .ok_or_else(|| OperadError::DenominatorNotInvertible {
            den: q.denom().to_string(),
            p: field.p(),
        })?;
    Ok(field.mul(num.to_u32().unwrap_or(0), inv))
}

/// Evaluates a term at an assignment of variables to vectors of `alg`.
pub fn evaluate_term(
    t: &Term,
    assignment: &[Vec<u32>],
    alg: &AlgebraStructure,
) -> Result<Vec<u32>, OperadError> {
    match t {
        Term::Var(i) => {
            let v = assignment
                .get(*i as usize)
                .ok_or(OperadError::UnassignedVariable(*i))?;
            if v.len() != alg.k() {
                return Err(OperadError::AssignmentDimension {
                    expected: alg.k(),
                    found: v.len(),
                });
            }
            Ok(v.clone())
        }
        Term::Node { op, children, .. } => {
            let vals = children
                .iter()
                .map(|c| evaluate_term(c, assignment, alg))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&[u32]> = vals.iter().map(Vec::as_slice).collect();
            Ok(alg.apply(*op as usize, &refs))
        }
    }
}

/// Evaluates an element: structural recursion on each term, then the
/// linear combination with coefficients reduced mod p.
pub fn evaluate(
    e: &FreeElement,
    assignment: &[Vec<u32>],
    alg: &AlgebraStructure,
) -> Result<Vec<u32>, OperadError> {
    let field = alg.field();
    let mut acc = vec![0u32; alg.k()];
    for (t, c) in e.iter() {
        let c = rational_residue(c, &field)?;
        let v = evaluate_term(t, assignment, alg)?;
        field.axpy(&mut acc, c, &v);
    }
    Ok(acc)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    sig: &'a Signature,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T, OperadError> {
        Err(OperadError::Parse {
            pos: self.pos,
            msg: msg.to_owned(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.rest().chars().next() {
            if f(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self) -> Result<BigInt, OperadError> {
        self.skip_ws();
        let digits = self.take_while(|c| c.is_ascii_digit());
        if digits.is_empty() {
            return self.err("expected a number");
        }
        digits
            .parse::<BigInt>()
            .or_else(|_| self.err("malformed number"))
    }

    fn term(&mut self) -> Result<Term, OperadError> {
        self.skip_ws();
        let start = self.pos;
        let ident = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
        if ident.is_empty() {
            return self.err("expected a variable or operation");
        }
        if let Some(idx) = ident.strip_prefix('x') {
            if !idx.is_empty() && idx.chars().all(|c| c.is_ascii_digit()) {
                return idx
                    .parse::<u32>()
                    .map(Term::Var)
                    .or_else(|_| self.err("variable index too large"));
            }
        }
        let Some(op) = self.sig.find(ident) else {
            self.pos = start;
            return Err(OperadError::UnknownOperation(ident.to_owned()));
        };
        if !self.eat('(') {
            return self.err("expected `(`");
        }
        let mut children = vec![self.term()?];
        while self.eat(',') {
            children.push(self.term()?);
        }
        if !self.eat(')') {
            return self.err("expected `)`");
        }
        Term::node_checked(self.sig, op, children)
    }

    fn monomial(&mut self) -> Result<(Term, BigRational), OperadError> {
        let coeff = if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            let num = self.number()?;
            let den = if self.eat('/') {
                self.number()?
            } else {
                BigInt::one()
            };
            if den.is_zero() {
                return self.err("zero denominator");
            }
            if !self.eat('*') {
                return self.err("expected `*` after coefficient; constants are not allowed");
            }
            BigRational::new(num, den)
        } else {
            BigRational::one()
        };
        Ok((self.term()?, coeff))
    }

    fn element(&mut self) -> Result<FreeElement, OperadError> {
        if self.peek() == Some('0') {
            let save = self.pos;
            self.pos += 1;
            if self.peek().is_none() {
                return Ok(FreeElement::zero());
            }
            self.pos = save;
        }
        let mut out = FreeElement::zero();
        let mut negative = self.eat('-');
        if !negative {
            self.eat('+');
        }
        loop {
            let (t, c) = self.monomial()?;
            out.add_term(t, if negative { -c } else { c });
            if self.eat('+') {
                negative = false;
            } else if self.eat('-') {
                negative = true;
            } else {
                break;
            }
        }
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Ok(out)
    }
}

pub fn parse_term(src: &str, sig: &Signature) -> Result<Term, OperadError> {
    let mut p = Parser { src, pos: 0, sig };
    let t = p.term()?;
    if p.peek().is_some() {
        return p.err("unexpected trailing input");
    }
    Ok(t)
}

pub fn parse_element(src: &str, sig: &Signature) -> Result<FreeElement, OperadError> {
    Parser { src, pos: 0, sig }.element()
}
