//! Arithmetic over GF(p), dense matrices, linear solving, and subspace
//! enumeration / counting.
//!
//! Vectors are plain `[u32]` slices of reduced residues; the modulus lives in
//! a [`PrimeField`] value passed to every operation. Moduli are capped below
//! 2^16 so a product of two residues fits in a `u32` and a sum of many
//! products fits in a `u64` before reduction.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Largest modulus accepted by [`PrimeField::new`].
pub const MAX_MODULUS: u32 = 1 << 16;

/// Budget on the number of subspaces [`enumerate_subspaces`] will produce.
pub const SUBSPACE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u32),
    #[error("modulus {0} is not below 2^16")]
    ModulusTooLarge(u32),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("subspace dimension {d} is not in 0..={k}")]
    InvalidSubspaceDimension { k: usize, d: usize },
    #[error("enumeration of {count} items exceeds the budget of {budget}")]
    BudgetExceeded { count: u64, budget: u64 },
    #[error("values from different moduli ({0} and {1}) were mixed")]
    ModulusMismatch(u32, u32),
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// The prime field Z/p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimeField {
    p: u32,
}

impl PrimeField {
    pub fn new(p: u32) -> Result<Self, FieldError> {
        if p >= MAX_MODULUS {
            return Err(FieldError::ModulusTooLarge(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Self { p })
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        (a * b) % self.p
    }

    pub fn pow(&self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self, a: u32) -> Option<u32> {
        if a.is_multiple_of(self.p) {
            None
        } else {
            Some(self.pow(a, u64::from(self.p - 2)))
        }
    }

    #[inline]
    pub fn reduce_u64(&self, a: u64) -> u32 {
        (a % u64::from(self.p)) as u32
    }

    pub fn reduce_i64(&self, a: i64) -> u32 {
        a.rem_euclid(i64::from(self.p)) as u32
    }

    pub fn element(&self, value: u64) -> FieldElement {
        FieldElement {
            value: self.reduce_u64(value),
            p: self.p,
        }
    }

    /// Lifts residues in `[0, p)` to signed representatives in `(-p/2, p/2]`.
    pub fn symmetric_lift(&self, a: u32) -> i64 {
        let a = i64::from(a);
        let p = i64::from(self.p);
        if 2 * a > p {
            a - p
        } else {
            a
        }
    }

    pub fn dot(&self, a: &[u32], b: &[u32]) -> u32 {
        let mut acc = 0u64;
        for (&x, &y) in a.iter().zip(b) {
            acc += u64::from(x * y);
        }
        self.reduce_u64(acc)
    }

    /// `a += c * b` in place.
    pub fn axpy(&self, a: &mut [u32], c: u32, b: &[u32]) {
        if c == 0 {
            return;
        }
        for (x, &y) in a.iter_mut().zip(b) {
            *x = (*x + c * y) % self.p;
        }
    }

    pub fn scale(&self, a: &mut [u32], c: u32) {
        for x in a.iter_mut() {
            *x = self.mul(*x, c);
        }
    }

    /// Decodes `index` as base-p digits, most significant first.
    pub fn digits(&self, mut index: u64, len: usize) -> Vec<u32> {
        let mut out = vec![0u32; len];
        let p = u64::from(self.p);
        for slot in out.iter_mut().rev() {
            *slot = (index % p) as u32;
            index /= p;
        }
        out
    }

    pub fn undigits(&self, digits: &[u32]) -> u64 {
        digits
            .iter()
            .fold(0u64, |acc, &d| acc * u64::from(self.p) + u64::from(d))
    }

    /// All vectors of F_p^k in index order.
    pub fn vectors(&self, k: usize) -> impl Iterator<Item = Vec<u32>> + '_ {
        let total = u64::from(self.p).pow(k as u32);
        (0..total).map(move |i| self.digits(i, k))
    }

    /// One representative per line of F_p^k: first nonzero coordinate equal to 1.
    pub fn projective_points(&self, k: usize) -> impl Iterator<Item = Vec<u32>> + '_ {
        self.vectors(k)
            .filter(|v| v.iter().find(|&&x| x != 0) == Some(&1))
    }
}

/// A single residue that remembers its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    p: u32,
}

impl FieldElement {
    pub fn new(value: i64, p: u32) -> Result<Self, FieldError> {
        let field = PrimeField::new(p)?;
        Ok(Self {
            value: field.reduce_i64(value),
            p,
        })
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn modulus(&self) -> u32 {
        self.p
    }

    pub fn inv(&self) -> Option<Self> {
        PrimeField { p: self.p }
            .inv(self.value)
            .map(|value| Self { value, p: self.p })
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.p, other.p, "mixed moduli in field arithmetic");
    }
}

impl Add for FieldElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.check(&rhs);
        Self {
            value: PrimeField { p: self.p }.add(self.value, rhs.value),
            p: self.p,
        }
    }
}

impl Sub for FieldElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.check(&rhs);
        Self {
            value: PrimeField { p: self.p }.sub(self.value, rhs.value),
            p: self.p,
        }
    }
}

impl Mul for FieldElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.check(&rhs);
        Self {
            value: PrimeField { p: self.p }.mul(self.value, rhs.value),
            p: self.p,
        }
    }
}

impl Neg for FieldElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            value: PrimeField { p: self.p }.neg(self.value),
            p: self.p,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.p)
    }
}

/// Dense row-major matrix of residues.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self, FieldError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(FieldError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<u32>], rows: usize) -> Result<Self, FieldError> {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            if c.len() != rows {
                return Err(FieldError::DimensionMismatch {
                    expected: rows,
                    found: c.len(),
                });
            }
            for (i, &x) in c.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        Ok(m)
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<u32>) -> Result<Self, FieldError> {
        if data.len() != rows * cols {
            return Err(FieldError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u32> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Self, field: &PrimeField) -> Result<Self, FieldError> {
        if self.cols != other.rows {
            return Err(FieldError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u64;
                for l in 0..self.cols {
                    acc += u64::from(self.get(i, l) * other.get(l, j));
                }
                out.set(i, j, field.reduce_u64(acc));
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[u32], field: &PrimeField) -> Vec<u32> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| field.dot(self.row(i), v)).collect()
    }

    /// Reduced row echelon form together with the pivot columns.
    pub fn rref(&self, field: &PrimeField) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| m.get(i, c) != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..m.cols {
                    m.data.swap(pr * m.cols + j, r * m.cols + j);
                }
            }
            let inv = field.inv(m.get(r, c)).expect("pivot is nonzero");
            for j in 0..m.cols {
                let v = field.mul(m.get(r, j), inv);
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i != r {
                    let f = m.get(i, c);
                    if f != 0 {
                        let nf = field.neg(f);
                        for j in 0..m.cols {
                            let v = (m.get(i, j) + nf * m.get(r, j)) % field.p();
                            m.set(i, j, v);
                        }
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self, field: &PrimeField) -> usize {
        self.rref(field).1.len()
    }

    pub fn determinant(&self, field: &PrimeField) -> Result<u32, FieldError> {
        if self.rows != self.cols {
            return Err(FieldError::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut det = 1u32;
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| m.get(i, c) != 0) else {
                return Ok(0);
            };
            if pr != c {
                for j in 0..n {
                    m.data.swap(pr * n + j, c * n + j);
                }
                det = field.neg(det);
            }
            let piv = m.get(c, c);
            det = field.mul(det, piv);
            let inv = field.inv(piv).expect("pivot is nonzero");
            for i in c + 1..n {
                let f = field.mul(m.get(i, c), inv);
                if f != 0 {
                    let nf = field.neg(f);
                    for j in c..n {
                        let v = (m.get(i, j) + nf * m.get(c, j)) % field.p();
                        m.set(i, j, v);
                    }
                }
            }
        }
        Ok(det)
    }

    pub fn inverse(&self, field: &PrimeField) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, n + i, 1);
        }
        let (red, pivots) = aug.rref(field);
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, red.get(i, n + j));
            }
        }
        Some(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self.get(i, j) == u32::from(i == j)))
    }
}

/// Result of [`solve_linear`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinearSolution {
    /// A particular solution together with a basis of the kernel.
    Solved { x: Vec<u32>, kernel: Vec<Vec<u32>> },
    Inconsistent,
}

/// Solves `M x = b` over GF(p).
pub fn solve_linear(
    field: &PrimeField,
    m: &Matrix,
    b: &[u32],
) -> Result<LinearSolution, FieldError> {
    if b.len() != m.rows {
        return Err(FieldError::DimensionMismatch {
            expected: m.rows,
            found: b.len(),
        });
    }
    let (rows, cols) = (m.rows, m.cols);
    let mut aug = Matrix::zeros(rows, cols + 1);
    for i in 0..rows {
        for j in 0..cols {
            aug.set(i, j, m.get(i, j) % field.p());
        }
        aug.set(i, cols, b[i] % field.p());
    }
    let (red, pivots) = aug.rref(field);
    if pivots.last() == Some(&cols) {
        return Ok(LinearSolution::Inconsistent);
    }
    let mut x = vec![0u32; cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = red.get(r, cols);
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let kernel = free
        .iter()
        .map(|&f| {
            let mut v = vec![0u32; cols];
            v[f] = 1;
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = field.neg(red.get(r, f));
            }
            v
        })
        .collect();
    Ok(LinearSolution::Solved { x, kernel })
}

/// An incrementally grown reduced echelon basis of a subspace of F_p^k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EchelonBasis {
    field: PrimeField,
    dim: usize,
    rows: Vec<Vec<u32>>,
    pivots: Vec<usize>,
}

impl EchelonBasis {
    pub fn new(field: PrimeField, dim: usize) -> Self {
        Self {
            field,
            dim,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.dim
    }

    /// Residue of `v` after eliminating against the current pivots.
    pub fn reduce(&self, v: &[u32]) -> Vec<u32> {
        let mut w = v.to_vec();
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            let f = w[c];
            if f != 0 {
                self.field.axpy(&mut w, self.field.neg(f), row);
            }
        }
        w
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Adds `v` to the span; returns whether the rank grew.
    pub fn insert(&mut self, v: &[u32]) -> bool {
        let mut w = self.reduce(v);
        let Some(c) = w.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = self.field.inv(w[c]).expect("nonzero");
        self.field.scale(&mut w, inv);
        for row in self.rows.iter_mut() {
            let f = row[c];
            if f != 0 {
                self.field.axpy(row, self.field.neg(f), &w);
            }
        }
        let pos = self.pivots.partition_point(|&q| q < c);
        self.pivots.insert(pos, c);
        self.rows.insert(pos, w);
        true
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows.len(), self.dim);
        for (i, r) in self.rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of `d`-dimensional subspaces of F_p^k, as the exact quotient
/// `prod_{i<d} (p^{k-i} - 1) / prod_{i<d} (p^{i+1} - 1)`.
pub fn gaussian_binomial(k: usize, d: usize, p: u32) -> Result<BigUint, FieldError> {
    if d > k {
        return Err(FieldError::InvalidSubspaceDimension { k, d });
    }
    let pb = BigUint::from(p);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..d {
        num *= pb.pow((k - i) as u32) - 1u32;
        den *= pb.pow((i + 1) as u32) - 1u32;
    }
    Ok(num / den)
}

/// |GL_k(F_p)| = prod_{i<k} (p^k - p^i).
pub fn gl_order(k: usize, p: u32) -> BigUint {
    let pb = BigUint::from(p);
    let pk = pb.pow(k as u32);
    (0..k).fold(BigUint::one(), |acc, i| acc * (&pk - pb.pow(i as u32)))
}

/// |SL_n(F_p)| = p^{n(n-1)/2} prod_{i=2}^{n} (p^i - 1).
pub fn sl_order(n: usize, p: u32) -> BigUint {
    let pb = BigUint::from(p);
    let mut acc = pb.pow((n * (n - 1) / 2) as u32);
    for i in 2..=n {
        acc *= pb.pow(i as u32) - 1u32;
    }
    acc
}

/// Streams every `d`-dimensional subspace of F_p^k exactly once, as its
/// reduced row echelon basis (a `d × k` matrix).
pub fn enumerate_subspaces(k: usize, d: usize, p: u32) -> Result<SubspaceIter, FieldError> {
    let field = PrimeField::new(p)?;
    let count = gaussian_binomial(k, d, p)?;
    let count = count.to_u64().unwrap_or(u64::MAX);
    if count > SUBSPACE_BUDGET {
        return Err(FieldError::BudgetExceeded {
            count,
            budget: SUBSPACE_BUDGET,
        });
    }
    Ok(SubspaceIter::new(field, k, d))
}

/// Iterator behind [`enumerate_subspaces`]: pivot sets in lexicographic order,
/// and for each pivot set every assignment of the free echelon entries.
#[derive(Debug, Clone)]
pub struct SubspaceIter {
    field: PrimeField,
    k: usize,
    d: usize,
    pivots: Option<Vec<usize>>,
    free: Vec<(usize, usize)>,
    counter: Vec<u32>,
    exhausted_current: bool,
}

impl SubspaceIter {
    fn new(field: PrimeField, k: usize, d: usize) -> Self {
        let pivots: Vec<usize> = (0..d).collect();
        let mut it = Self {
            field,
            k,
            d,
            pivots: Some(pivots),
            free: Vec::new(),
            counter: Vec::new(),
            exhausted_current: false,
        };
        it.reset_free();
        it
    }

    fn reset_free(&mut self) {
        self.free.clear();
        if let Some(piv) = &self.pivots {
            for (r, &c) in piv.iter().enumerate() {
                for col in c + 1..self.k {
                    if !piv.contains(&col) {
                        self.free.push((r, col));
                    }
                }
            }
        }
        self.counter = vec![0; self.free.len()];
        self.exhausted_current = false;
    }

    fn next_pivots(&mut self) {
        let Some(piv) = self.pivots.as_mut() else {
            return;
        };
        let (k, d) = (self.k, self.d);
        let mut i = d;
        loop {
            if i == 0 {
                self.pivots = None;
                return;
            }
            i -= 1;
            if piv[i] < k - d + i {
                piv[i] += 1;
                for j in i + 1..d {
                    piv[j] = piv[j - 1] + 1;
                }
                break;
            }
        }
        self.reset_free();
    }
}

impl Iterator for SubspaceIter {
    type Item = Matrix;

    fn next(&mut self) -> Option<Matrix> {
        loop {
            let piv = self.pivots.as_ref()?;
            if self.exhausted_current {
                self.next_pivots();
                continue;
            }
            let mut m = Matrix::zeros(self.d, self.k);
            for (r, &c) in piv.iter().enumerate() {
                m.set(r, c, 1);
            }
            for (&(r, c), &v) in self.free.iter().zip(&self.counter) {
                m.set(r, c, v);
            }
            // advance the odometer over free entries
            let mut carry = true;
            for slot in self.counter.iter_mut().rev() {
                *slot += 1;
                if *slot == self.field.p() {
                    *slot = 0;
                } else {
                    carry = false;
                    break;
                }
            }
            if carry {
                self.exhausted_current = true;
            }
            return Some(m);
        }
    }
}
