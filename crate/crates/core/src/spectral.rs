//! Finite certificates behind property (T): the pair classification, the
//! matrix Δ and its exact positive-definiteness test, the spectra of its
//! two summands, Heisenberg angles, and generation of `SL_n(F_p)` by the
//! α matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::action::{schreier_sims, ActionError, Perm};
use crate::ffield::{is_prime, sl_order, FieldError, PrimeField};
use crate::operad::Signature;
use crate::tame::{GammaGenerators, TameError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("need 0 <= i < j < n, got i = {i}, j = {j}, n = {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("need n > max(ar, 2), got n = {n}, ar = {ar}")]
    TooFewVariables { n: usize, ar: usize },
    #[error("epsilon must be nonnegative")]
    NegativeEpsilon,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("tolerance {0} is below 1e-12")]
    Tolerance(f64),
    #[error("critical epsilon {eps} falls outside [{lower}, {upper}]")]
    BracketFailure { eps: f64, lower: f64, upper: f64 },
    #[error("{0} is not a prime <= 101")]
    BadPrime(u32),
    #[error("p = {p} divides N = {big_n}")]
    PDividesN { p: u32, big_n: u64 },
    #[error("need n in 3..=5 and p^n <= 10^6, got n = {n}, p = {p}")]
    SlRange { n: usize, p: u32 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Tame(#[from] TameError),
    #[error(transparent)]
    Action(#[from] ActionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    Abelian,
    Heisenberg,
}

fn check_shape(n: usize, ar: usize) -> Result<(), SpectralError> {
    if n <= ar.max(2) {
        return Err(SpectralError::TooFewVariables { n, ar });
    }
    Ok(())
}

/// Heisenberg iff `j - i = 1`, `(i, j) = (0, n-1)`, or `i = 0, j ≤ ar`.
pub fn classify_pair(i: usize, j: usize, n: usize, ar: usize) -> Result<PairClass, SpectralError> {
    if !(i < j && j < n) {
        return Err(SpectralError::IndexOutOfRange { i, j, n });
    }
    let heis = j - i == 1 || (i == 0 && (j == n - 1 || j <= ar));
    Ok(if heis {
        PairClass::Heisenberg
    } else {
        PairClass::Abelian
    })
}

/// Symmetric `n × n` rational matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaMatrix {
    n: usize,
    entries: Vec<BigRational>,
}

impl DeltaMatrix {
    pub fn from_entries(n: usize, entries: Vec<BigRational>) -> Result<Self, SpectralError> {
        let m = Self { n, entries };
        if m.entries.len() != n * n {
            return Err(SpectralError::NotSymmetric);
        }
        for i in 0..n {
            for j in 0..i {
                if m.get(i, j) != m.get(j, i) {
                    return Err(SpectralError::NotSymmetric);
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.n + j]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Exact test through the pivots of symmetric Gaussian elimination,
    /// which are the ratios of consecutive leading principal minors.
    pub fn is_positive_definite(&self) -> bool {
        let n = self.n;
        let mut a = self.entries.clone();
        for k in 0..n {
            let d = a[k * n + k].clone();
            if !d.is_positive() {
                return false;
            }
            for i in k + 1..n {
                let f = &a[i * n + k] / &d;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let delta = &f * &a[k * n + j];
                    a[i * n + j] -= delta;
                }
            }
        }
        true
    }
}

/// Adjacency pattern of the Heisenberg pairs.
pub fn heisenberg_pattern(n: usize, ar: usize) -> Result<Vec<f64>, SpectralError> {
    check_shape(n, ar)?;
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            if classify_pair(i, j, n, ar)? == PairClass::Heisenberg {
                a[i * n + j] = 1.0;
                a[j * n + i] = 1.0;
            }
        }
    }
    Ok(a)
}

/// Δ: ones on the diagonal, `-ε` at Heisenberg pairs, zero elsewhere.
pub fn build_delta(n: usize, ar: usize, eps: &BigRational) -> Result<DeltaMatrix, SpectralError> {
    check_shape(n, ar)?;
    if eps.is_negative() {
        return Err(SpectralError::NegativeEpsilon);
    }
    let mut entries = vec![BigRational::zero(); n * n];
    for i in 0..n {
        entries[i * n + i] = BigRational::one();
        for j in i + 1..n {
            if classify_pair(i, j, n, ar)? == PairClass::Heisenberg {
                entries[i * n + j] = -eps.clone();
                entries[j * n + i] = -eps.clone();
            }
        }
    }
    DeltaMatrix::from_entries(n, entries)
}

/// Δ with a float ε.
pub fn delta_f64(n: usize, ar: usize, eps: f64) -> Result<Vec<f64>, SpectralError> {
    let mut a = heisenberg_pattern(n, ar)?;
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = if i == j { 1.0 } else { -eps * a[i * n + j] };
        }
    }
    Ok(a)
}

/// The circulant part: `2ε` on the diagonal, `-ε` between cyclic
/// neighbours.
pub fn delta1_f64(n: usize, eps: f64) -> Vec<f64> {
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = 2.0 * eps;
        let j = (i + 1) % n;
        a[i * n + j] -= eps;
        a[j * n + i] -= eps;
    }
    a
}

/// `Δ − Δ1`.
pub fn delta2_f64(n: usize, ar: usize, eps: f64) -> Result<Vec<f64>, SpectralError> {
    let d = delta_f64(n, ar, eps)?;
    let d1 = delta1_f64(n, eps);
    Ok(d.iter().zip(&d1).map(|(a, b)| a - b).collect())
}

/// Eigenvalues (ascending) and eigenvectors (columns of the returned
/// row-major matrix) of a real symmetric matrix by cyclic Jacobi sweeps.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if libm::fabs(apq) < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x * n + x].total_cmp(&a[y * n + y]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + new] = v[k * n + old];
        }
    }
    (values, vectors)
}

pub fn eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    symmetric_eigen(a, n).0
}

pub fn min_eigenvalue(a: &[f64], n: usize) -> f64 {
    eigenvalues(a, n).first().copied().unwrap_or(f64::NAN)
}

/// `1 - 2ε` with multiplicity `n - 2` and `1 - 2ε ± ε √(ar - 1)`.
pub fn delta2_closed_form(n: usize, ar: usize, eps: f64) -> Vec<f64> {
    let base = 1.0 - 2.0 * eps;
    let r = eps * libm::sqrt((ar.max(1) - 1) as f64);
    let mut out = vec![base; n - 2];
    out.push(base - r);
    out.push(base + r);
    out.sort_by(f64::total_cmp);
    out
}

/// Numeric spectrum of Δ2 against the closed form (within 1e-9) and
/// `λ_min(Δ1) ≥ -1e-12`.
pub fn delta2_spectrum_check(n: usize, ar: usize, eps: f64) -> Result<bool, SpectralError> {
    let d2 = delta2_f64(n, ar, eps)?;
    let got = eigenvalues(&d2, n);
    let want = delta2_closed_form(n, ar, eps);
    let spectrum_ok = got
        .iter()
        .zip(&want)
        .all(|(a, b)| libm::fabs(a - b) <= 1e-9);
    let d1_ok = min_eigenvalue(&delta1_f64(n, eps), n) >= -1e-12;
    Ok(spectrum_ok && d1_ok)
}

/// `1/(2 + √(ar - 1))`, below which Δ is positive definite.
pub fn sufficient_bound(ar: usize) -> f64 {
    1.0 / (2.0 + libm::sqrt((ar.max(1) - 1) as f64))
}

/// `1/max(2, √(ar - 1))`, above which Δ is not positive definite.
pub fn failure_bound(ar: usize) -> f64 {
    1.0 / libm::fmax(2.0, libm::sqrt((ar.max(1) - 1) as f64))
}

/// Bisection on dyadic rationals with the exact test. The result ε*
/// satisfies PD at ε* − tol and not PD at ε* + tol.
pub fn critical_epsilon(n: usize, ar: usize, tol: f64) -> Result<f64, SpectralError> {
    if !(tol >= 1e-12) {
        return Err(SpectralError::Tolerance(tol));
    }
    check_shape(n, ar)?;
    let mut lo = BigRational::zero();
    let mut hi = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    while (&hi - &lo).to_f64().unwrap_or(0.0) >= tol {
        let mid = (&lo + &hi) / &two;
        if build_delta(n, ar, &mid)?.is_positive_definite() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eps = ((&lo + &hi) / &two).to_f64().unwrap_or(f64::NAN);
    let (lower, upper) = (sufficient_bound(ar), failure_bound(ar));
    if eps < lower - tol || eps > upper + tol {
        return Err(SpectralError::BracketFailure { eps, lower, upper });
    }
    Ok(eps)
}

/// `1/λ_max` of the Heisenberg pattern; Δ = I − ε·pattern.
pub fn critical_epsilon_spectral(n: usize, ar: usize) -> Result<f64, SpectralError> {
    let a = heisenberg_pattern(n, ar)?;
    let top = eigenvalues(&a, n).last().copied().unwrap_or(0.0);
    Ok(1.0 / top)
}

/// Result of the Heisenberg angle computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeisenbergAngle {
    /// Cosine of the Friedrichs angle between the two fixed spaces.
    pub cosine: f64,
    /// Complex dimensions of the fixed spaces of the shift and of the
    /// modulation.
    pub fixed_dims: (usize, usize),
}

/// Real `2p × 2p` form of a complex `p × p` matrix given as `(re, im)`.
fn realify(re: &[f64], im: &[f64], p: usize) -> Vec<f64> {
    let m = 2 * p;
    let mut out = vec![0.0; m * m];
    for i in 0..p {
        for j in 0..p {
            let (a, b) = (re[i * p + j], im[i * p + j]);
            out[i * m + j] = a;
            out[i * m + p + j] = -b;
            out[(p + i) * m + j] = b;
            out[(p + i) * m + p + j] = a;
        }
    }
    out
}

/// Orthonormal basis (columns) of `ker(M - I)` for a real square `M`.
fn fixed_space(m: &[f64], d: usize) -> Vec<Vec<f64>> {
    let mut b = m.to_vec();
    for i in 0..d {
        b[i * d + i] -= 1.0;
    }
    // Gram matrix BᵀB
    let mut g = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            g[i * d + j] = (0..d).map(|k| b[k * d + i] * b[k * d + j]).sum();
        }
    }
    let (vals, vecs) = symmetric_eigen(&g, d);
    vals.iter()
        .enumerate()
        .filter(|(_, &v)| v < 1e-9)
        .map(|(c, _)| (0..d).map(|k| vecs[k * d + c]).collect())
        .collect()
}

/// The `p`-dimensional irreducible representation of the Heisenberg group
/// mod p, generated by the cyclic shift and the modulation by a primitive
/// `p`-th root of unity; returns the cosine of the angle between the fixed
/// spaces of the two generators.
pub fn heisenberg_angle(p: u32) -> Result<HeisenbergAngle, SpectralError> {
    if !is_prime(p) || p > 101 {
        return Err(SpectralError::BadPrime(p));
    }
    let q = p as usize;
    let mut shift_re = vec![0.0; q * q];
    let shift_im = vec![0.0; q * q];
    let mut mod_re = vec![0.0; q * q];
    let mut mod_im = vec![0.0; q * q];
    for j in 0..q {
        shift_re[((j + 1) % q) * q + j] = 1.0;
        let theta = 2.0 * PI * j as f64 / q as f64;
        mod_re[j * q + j] = libm::cos(theta);
        mod_im[j * q + j] = libm::sin(theta);
    }
    let d = 2 * q;
    let u = fixed_space(&realify(&shift_re, &shift_im, q), d);
    let v = fixed_space(&realify(&mod_re, &mod_im, q), d);
    // largest singular value of UᵀV; the intersection is trivial here
    let cross: Vec<f64> = u
        .iter()
        .flat_map(|a| v.iter().map(move |b| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()))
        .collect();
    let (ru, rv) = (u.len(), v.len());
    let mut gram = vec![0.0; rv * rv];
    for i in 0..rv {
        for j in 0..rv {
            gram[i * rv + j] = (0..ru).map(|k| cross[k * rv + i] * cross[k * rv + j]).sum();
        }
    }
    let top = eigenvalues(&gram, rv).last().copied().unwrap_or(0.0);
    Ok(HeisenbergAngle {
        cosine: libm::sqrt(top.max(0.0)),
        fixed_dims: (ru / 2, rv / 2),
    })
}

/// Outcome of the `SL_n(F_p)` generation check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlGeneration {
    pub order: BigUint,
    pub expected: BigUint,
    pub generates: bool,
}

/// Reduces `α_1 … α_n` mod p, lets them act on nonzero column vectors, and
/// compares the order of the generated group with `|SL_n(F_p)|`.
pub fn check_sl_generation(n: usize, p: u32, big_n: u64) -> Result<SlGeneration, SpectralError> {
    let field = PrimeField::new(p)?;
    if big_n.is_multiple_of(u64::from(p)) {
        return Err(SpectralError::PDividesN { p, big_n });
    }
    let size = u64::from(p).checked_pow(n as u32).unwrap_or(u64::MAX);
    if !(3..=5).contains(&n) || size > 1_000_000 {
        return Err(SpectralError::SlRange { n, p });
    }
    let gens = GammaGenerators::new(n, big_n, Signature::default())?;
    let mats = gens.alpha_matrices(&field)?;
    let degree = (size - 1) as usize;
    let perms = mats
        .iter()
        .map(|m| {
            let img = (1..size)
                .map(|idx| {
                    let v = field.digits(idx, n);
                    (field.undigits(&m.mul_vec(&v, &field)) - 1) as u32
                })
                .collect();
            Perm::from_images(img)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let expected = sl_order(n, p);
    let bsgs = schreier_sims(&perms, degree, Some(&expected), 1)?;
    let order = bsgs.order();
    Ok(SlGeneration {
        generates: order == expected,
        order,
        expected,
    })
}
