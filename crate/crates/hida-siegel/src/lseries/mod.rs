//! Dirichlet L-values at nonpositive integers, Gauss sums and the quadratic
//! character of a Fourier index.
//!
//! Conventions: `B_1 = −1/2` for the classical Bernoulli numbers, while the
//! generalized numbers use `B_{k,χ} = f^{k−1} Σ_{a=1}^{f} χ(a) B_k(a/f)`, which
//! gives `B_{1,1} = +1/2` for the trivial character modulo 1 and keeps
//! `L(1−k, χ) = −B_{k,χ}/k` valid for every `k ≥ 1` (so `ζ(0) = −1/2`).

pub mod character;
pub mod cyclo;

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

pub use character::{CharacterError, DirichletCharacter};
pub use cyclo::CycRational;

use crate::intlin;
use crate::symmat::HalfIntMatrix;

/// Errors from L-value and quadratic-character operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LseriesError {
    #[error(transparent)]
    Character(#[from] CharacterError),
    #[error("index has odd rank {0}; the quadratic character needs even rank")]
    OddRank(usize),
    #[error("{0} must be an odd prime not dividing the level")]
    BadPrime(u64),
    #[error("k must be at least 1")]
    BadWeight,
}

/// Parse `"a"` or `"a/b"` as a rational.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|e| format!("bad numerator in {s:?}: {e}"))?;
    let d: BigInt = d.parse().map_err(|e| format!("bad denominator in {s:?}: {e}"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(BigRational::new(n, d))
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// Classical Bernoulli number `B_k` (with `B_1 = −1/2`), from the recurrence
/// `Σ_{j=0}^{k} C(k+1, j) B_j = 0`.
pub fn bernoulli(k: u64) -> BigRational {
    static CACHE: OnceLock<Mutex<Vec<BigRational>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![BigRational::one()]));
    let mut b = cache.lock().unwrap();
    while b.len() as u64 <= k {
        let m = b.len() as u64;
        let s = (0..m).fold(BigRational::zero(), |acc, j| {
            acc + BigRational::from_integer(binomial(m + 1, j)) * &b[j as usize]
        });
        b.push(-s / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b[k as usize].clone()
}

/// Bernoulli polynomial `B_k(x) = Σ_j C(k, j) B_j x^{k−j}`.
pub fn bernoulli_poly(k: u64, x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    let mut xp = BigRational::one();
    // Horner-free accumulation from the top power down.
    let powers: Vec<BigRational> = (0..=k)
        .map(|_| {
            let v = xp.clone();
            xp *= x;
            v
        })
        .collect();
    for j in 0..=k {
        acc += BigRational::from_integer(binomial(k, j)) * bernoulli(j) * &powers[(k - j) as usize];
    }
    acc
}

/// Generalized Bernoulli number `B_{k,χ} = f^{k−1} Σ_{a=1}^{f} χ(a) B_k(a/f)`,
/// with `f` the modulus of `χ` (for an imprimitive `χ` this is the Bernoulli
/// number of the imprimitive L-function).
pub fn gen_bernoulli(k: u64, chi: &DirichletCharacter) -> CycRational {
    assert!(k >= 1, "generalized Bernoulli numbers need k ≥ 1");
    let f = chi.modulus();
    let fr = rat(f as i64);
    // Group the sum by the exponent of χ(a).
    let mut by_exp: BTreeMap<u32, BigRational> = BTreeMap::new();
    for a in 1..=f {
        if let Some(e) = chi.exponent(i128::from(a)) {
            let term = bernoulli_poly(k, &(rat(a as i64) / &fr));
            *by_exp.entry(e).or_insert_with(BigRational::zero) += term;
        }
    }
    let scale = num_traits::pow(fr, (k - 1) as usize);
    let mut poly = vec![BigRational::zero(); chi.order() as usize];
    for (e, s) in by_exp {
        poly[e as usize] += s * &scale;
    }
    CycRational::reduce(chi.order(), poly)
}

/// An L-value at a nonpositive integer together with the parity diagnostic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LValue {
    pub value: CycRational,
    /// Set when `χ(−1) ≠ (−1)^k`; the value then vanishes for nontrivial primitive `χ`.
    pub parity_mismatch: bool,
}

/// `L(1−k, χ) = −B_{k,χ}/k`.
pub fn l_nonpositive(chi: &DirichletCharacter, k: u64) -> Result<LValue, LseriesError> {
    if k == 0 {
        return Err(LseriesError::BadWeight);
    }
    let value = gen_bernoulli(k, chi).scale(&BigRational::new((-1).into(), BigInt::from(k)));
    let parity_mismatch = chi.is_even() != (k % 2 == 0);
    if parity_mismatch && chi.is_primitive() && chi.modulus() > 1 {
        assert!(value.is_zero(), "L(1−k, χ) must vanish for primitive χ of the wrong parity");
    }
    Ok(LValue { value, parity_mismatch })
}

/// `L(1−k, χ) · ∏_{q ∈ removed} (1 − χ(q) q^{k−1})`.
pub fn partial_l(chi: &DirichletCharacter, k: u64, removed: &[u64]) -> Result<CycRational, LseriesError> {
    let base = l_nonpositive(chi, k)?.value;
    Ok(removed.iter().fold(base, |acc, &q| &acc * &euler_factor_inverse(chi, k, q)))
}

/// `1 − χ(q) q^{k−1}`, the reciprocal of the Euler factor at `q` at `s = 1−k`.
pub fn euler_factor_inverse(chi: &DirichletCharacter, k: u64, q: u64) -> CycRational {
    let qk = BigRational::from_integer(num_traits::pow(BigInt::from(q), (k - 1) as usize));
    &CycRational::one() - &chi.eval(i128::from(q)).scale(&qk)
}

/// Gauss sum `G(χ) = Σ_{a mod f} χ(a) ζ_f^a` of a primitive character.
pub fn gauss_sum(chi: &DirichletCharacter) -> Result<CycRational, LseriesError> {
    let f = chi.modulus();
    if !chi.is_primitive() {
        return Err(CharacterError::NotPrimitive { modulus: f, conductor: chi.conductor() }.into());
    }
    let o = chi.order().lcm(&f);
    let (sc, sf) = (o / chi.order(), o / f);
    let mut poly = vec![BigRational::zero(); o as usize];
    for a in 0..f {
        if let Some(e) = chi.exponent(i128::from(a)) {
            let exp = (u64::from(e) * sc + a * sf) % o;
            poly[exp as usize] += BigRational::one();
        }
    }
    Ok(CycRational::reduce(o, poly))
}

/// `(−1)^{r/2} · det(S')` where `r = rank(β)` and `S'` is `2Nβ` restricted to a
/// lattice complement of the radical. Up to the square `(2N)^r` this is
/// `(−1)^{r/2} det*(β)`, the discriminant defining `λ_β`.
pub fn beta_discriminant(beta: &HalfIntMatrix) -> Result<i128, LseriesError> {
    let r = beta.rank();
    if r % 2 == 1 {
        return Err(LseriesError::OddRank(r));
    }
    let det = det_star(beta);
    Ok(if (r / 2) % 2 == 1 { -det } else { det })
}

/// Determinant of `2Nβ` restricted to a complement of its radical
/// (`1` for `β = 0`); independent of the complement chosen.
pub fn det_star(beta: &HalfIntMatrix) -> i128 {
    let m = beta.imat();
    let (_, comp) = intlin::kernel_and_complement(&m, beta.n());
    if comp.is_empty() {
        return 1;
    }
    let c: Vec<Vec<i128>> = (0..beta.n()).map(|i| comp.iter().map(|v| v[i]).collect()).collect();
    intlin::det(&intlin::congruence(&m, &c))
}

/// `λ_β(q)`: the Legendre symbol of `(−1)^{rank/2} det*(β)` at an odd prime `q ∤ N`.
pub fn lambda_beta(beta: &HalfIntMatrix, q: u64) -> Result<i32, LseriesError> {
    if q == 2 || !intlin::is_prime(q) || beta.level() % q == 0 {
        return Err(LseriesError::BadPrime(q));
    }
    let d = beta_discriminant(beta)?;
    Ok(character::legendre_symbol(d, q))
}

/// `λ_β` as a primitive Dirichlet character: the quadratic character of
/// `Q(√((−1)^{rank/2} det*(β)))`. It agrees with [`lambda_beta`] at every odd
/// prime not dividing `det*(2β)`.
pub fn lambda_beta_character(beta: &HalfIntMatrix) -> Result<DirichletCharacter, LseriesError> {
    Ok(DirichletCharacter::quadratic_of(beta_discriminant(beta)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> CycRational {
        CycRational::from_frac(n, d)
    }

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0), rat(1));
        assert_eq!(bernoulli(1), BigRational::new((-1).into(), 2.into()));
        assert_eq!(bernoulli(12), BigRational::new((-691).into(), 2730.into()));
        assert_eq!(bernoulli(13), rat(0));
    }

    #[test]
    fn von_staudt_clausen() {
        // Oracle: denominator of B_{2k} is the product of primes p with (p−1) | 2k.
        for k in 1..=15u64 {
            let b = bernoulli(2 * k);
            let want: i64 = (2..=2 * k + 1)
                .filter(|&p| intlin::is_prime(p) && (2 * k) % (p - 1) == 0)
                .product::<u64>() as i64;
            assert_eq!(b.denom(), &BigInt::from(want), "B_{}", 2 * k);
        }
    }

    #[test]
    fn generalized_bernoulli_examples() {
        assert_eq!(gen_bernoulli(2, &DirichletCharacter::trivial(1)), q(1, 6));
        assert_eq!(gen_bernoulli(1, &DirichletCharacter::trivial(1)), q(1, 2));
        let chi4 = DirichletCharacter::quadratic_of(-4);
        // Two-term oracle: B_{1,χ} = Σ χ(a) a/f = (1 − 3)/4.
        assert_eq!(gen_bernoulli(1, &chi4), q(-1, 2));
        assert_eq!(gen_bernoulli(1, &DirichletCharacter::legendre(3).unwrap()), q(-1, 3));
    }

    #[test]
    fn l_values() {
        let triv = DirichletCharacter::trivial(1);
        assert_eq!(l_nonpositive(&triv, 2).unwrap().value, q(-1, 12));
        assert_eq!(l_nonpositive(&triv, 1).unwrap().value, q(-1, 2));
        let chi4 = DirichletCharacter::quadratic_of(-4);
        assert_eq!(l_nonpositive(&chi4, 1).unwrap().value, q(1, 2));
        let mis = l_nonpositive(&chi4, 2).unwrap();
        assert!(mis.parity_mismatch && mis.value.is_zero());
        assert_eq!(partial_l(&triv, 2, &[2]).unwrap(), q(1, 12));
        assert_eq!(partial_l(&chi4, 1, &[3]).unwrap(), q(1, 1));
        assert_eq!(partial_l(&triv, 2, &[]).unwrap(), q(-1, 12));
    }

    #[test]
    fn imprimitive_bernoulli_equals_euler_stripped() {
        // Two code paths: B via the modulus-12 table versus primitive value times Euler factors.
        let chi = DirichletCharacter::legendre(3).unwrap();
        for k in 1..8u64 {
            let direct = l_nonpositive(&chi.lift_to(12), k).unwrap().value;
            let stripped = partial_l(&chi, k, &[2]).unwrap();
            assert_eq!(direct, stripped, "k = {k}");
        }
    }

    #[test]
    fn gauss_sums() {
        assert_eq!(gauss_sum(&DirichletCharacter::trivial(1)).unwrap(), q(1, 1));
        let g = gauss_sum(&DirichletCharacter::legendre(5).unwrap()).unwrap();
        assert_eq!(&g * &g, q(5, 1));
        assert!(matches!(
            gauss_sum(&DirichletCharacter::trivial(3)),
            Err(LseriesError::Character(CharacterError::NotPrimitive { .. }))
        ));
        for (f, o, k) in [(5u64, 4u64, 1u32), (7, 6, 1), (9, 6, 1), (8, 2, 1), (13, 12, 5), (25, 20, 3)] {
            let chi = match DirichletCharacter::from_generator(f, o, k) {
                Ok(c) => c,
                Err(_) => continue,
            };
            if !chi.is_primitive() {
                continue;
            }
            let g = gauss_sum(&chi).unwrap();
            assert_eq!(&g * &g.conj(), q(f as i64, 1), "modulus {f}");
        }
    }

    #[test]
    fn lambda_examples() {
        let i2 = HalfIntMatrix::diag(1, &[1, 1]);
        assert_eq!(lambda_beta(&i2, 3).unwrap(), -1);
        assert_eq!(lambda_beta(&i2, 5).unwrap(), 1);
        assert_eq!(lambda_beta(&HalfIntMatrix::zero(2, 1), 3).unwrap(), 1);
        assert!(matches!(lambda_beta(&HalfIntMatrix::diag(1, &[1, 0]), 3), Err(LseriesError::OddRank(1))));
        // det* on a degenerate index: 2β = [[2,2],[2,2]] has radical (1,−1), complement value 2.
        assert_eq!(det_star(&HalfIntMatrix::from_flat(1, 2, &[2, 2, 2, 2])), 2);
    }

    proptest! {
        #[test]
        fn kummer_congruences(p in prop::sample::select(vec![5u64, 7]), a in 0u32..=1, k in 2u64..12, t in 1u64..3) {
            // Trivial tame part: (1 − p^{k−1}) ζ(1−k) ≡ (1 − p^{k'−1}) ζ(1−k') mod p^{a+1}
            // for k ≡ k' mod (p−1)p^a and (p−1) ∤ k.
            prop_assume!(k % (p - 1) != 0 && k % 2 == 0);
            let k2 = k + t * (p - 1) * p.pow(a);
            let triv = DirichletCharacter::trivial(1);
            let x = partial_l(&triv, k, &[p]).unwrap();
            let y = partial_l(&triv, k2, &[p]).unwrap();
            prop_assert!(x.congruent_mod(&y, p, i64::from(a) + 1));
        }

        #[test]
        fn gen_bernoulli_trivial_is_classical(k in 2u64..30) {
            prop_assert_eq!(gen_bernoulli(k, &DirichletCharacter::trivial(1)), CycRational::from_rational(bernoulli(k)));
        }
    }
}
