//! Fourier coefficients of the normalized Siegel Eisenstein series of degree
//! `2n` and their pullback to pairs of degree-`n` indices.
//!
//! A coefficient `𝔠(β)` is assembled from local data:
//!
//! * the Schwartz function `α̂(β)` at `p` ([`schwartz_hat`]);
//! * the root of unity `∏_{v|N} e_v(2 tr β0)` coming from the volume sections at `N`;
//! * partial Dirichlet L-values with the Euler factors at `Np` removed;
//! * Siegel-series polynomials `g_{β,q}` at the remaining primes of `det*(2β)`,
//!   supplied by a [`SiegelSeriesProvider`];
//! * the determinant-power weights `∏ det((2β0)_{N_i})^{t_i−t_{i+1}} det(2β0)^{t_d−k}`.
//!
//! Powers of `π` and `2` from the archimedean place are kept symbolic in
//! [`ArchNormalization`] and never enter the cyclotomic part.
//!
//! Conventions.
//! * A size-`2n` index is a [`HalfIntMatrix`] storing `S = 2Nβ`, with blocks
//!   `S1 = 2Nβ1`, `S0 = 2Nβ0`, `S2 = 2Nβ2`; so `2β0 = S0/N`.
//! * `g_{β,q}(t) = F_q(β, t)`, the normalized Siegel series `b_q(β, X)/γ_q(β, X)`
//!   (an integer polynomial with constant term 1). For degenerate `β` it is the
//!   polynomial of the nondegenerate part of `β`.
//! * `λ_β` is the primitive quadratic character of `Q(√((−1)^{r/2} det*(β)))`.
//! * In the improved (`τ^P`-only) mode the twisting character is `φε_d`, and the
//!   rank-dependent L-value is `L^{Np}(n+1−t_d−c/2, φε_dλ_β)` with `c` the corank
//!   of `β` (so that full rank matches the cyclotomic mode at `k = t_d`).

use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::euler::{rat_str, ArithmeticWeight, EulerError};
use crate::intlin::{self, is_prime, prime_divisors, val_p};
use crate::lseries::character::{fundamental_discriminant, kronecker};
use crate::lseries::{det_star, lambda_beta_character, partial_l, CycRational, DirichletCharacter, LseriesError};
use crate::symmat::{block_embed, completions, HalfIntMatrix, OffDiagBlock};

/// Errors from Eisenstein coefficient assembly.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EisensteinError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("Siegel-series provider cannot handle {0}")]
    ProviderCapability(String),
    #[error("Siegel series at q = {q} has not stabilized at denominator exponent {k}")]
    NonConvergent { q: u64, k: u32 },
    #[error(transparent)]
    Lseries(#[from] LseriesError),
    #[error(transparent)]
    Euler(#[from] EulerError),
}

/// Which Eisenstein family the coefficient belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Weight point `(κ, τ^P)`: cyclotomic `(k, χ)` and parabolic `(t^P, ε^P)`.
    Full,
    /// Weight point `τ^P` only, with the enlarged support at `p`.
    Improved,
}

/// The data fixing one Eisenstein series.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EisensteinSpec {
    pub n: usize,
    #[serde(rename = "N")]
    pub level: u64,
    pub p: u64,
    /// Tame character `φ`, of modulus dividing `N`, with `φ²` nontrivial.
    pub phi: DirichletCharacter,
    pub mode: Mode,
    /// `t^P`, `ε^P`, and (in full mode) the cyclotomic point `(k, χ)`.
    pub weight: ArithmeticWeight,
}

fn is_power_of(mut m: u64, p: u64) -> bool {
    while m > 1 && m % p == 0 {
        m /= p;
    }
    m == 1
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, EisensteinError> {
    Err(EisensteinError::Invalid(msg.into()))
}

impl EisensteinSpec {
    /// Check shapes, admissibility and the parity condition.
    pub fn validate(&self) -> Result<(), EisensteinError> {
        self.weight.validate()?;
        if self.weight.parabolic.n != self.n {
            return invalid(format!("parabolic has size {}, expected {}", self.weight.parabolic.n, self.n));
        }
        if !is_prime(self.p) {
            return invalid(format!("{} is not prime", self.p));
        }
        if self.level == 0 || self.level % self.p == 0 {
            return invalid("N must be positive and prime to p");
        }
        if self.level % self.phi.modulus() != 0 {
            return invalid("the modulus of φ must divide N");
        }
        if self.phi.power(2).is_trivial() {
            return invalid("φ² must be nontrivial");
        }
        let p_power = |c: &DirichletCharacter| is_power_of(c.modulus(), self.p);
        if !self.weight.eps.iter().all(p_power) || !self.weight.chi.as_ref().map_or(true, p_power) {
            return invalid("ε_i and χ must have p-power modulus");
        }
        let admissible = match self.mode {
            Mode::Full => self.weight.pair_admissible(),
            Mode::Improved => self.weight.is_admissible(),
        };
        if !admissible {
            return invalid("weight point is not admissible");
        }
        if !self.parity_ok() {
            return invalid("parity condition fails: twist(−1) ≠ (−1)^k");
        }
        Ok(())
    }

    /// `k` in full mode, `t_d` in improved mode.
    pub fn weight_k(&self) -> i64 {
        match self.mode {
            Mode::Full => self.weight.k,
            Mode::Improved => *self.weight.t.last().expect("nonempty weight"),
        }
    }

    /// The cyclotomic finite part `χ` (trivial when absent).
    pub fn chi(&self) -> DirichletCharacter {
        self.weight.chi.clone().unwrap_or_else(|| DirichletCharacter::trivial(1))
    }

    /// `ε_d`.
    pub fn eps_d(&self) -> &DirichletCharacter {
        self.weight.eps.last().expect("nonempty weight")
    }

    /// The twisting character: `φχ` in full mode, `φε_d` in improved mode.
    pub fn twist(&self) -> DirichletCharacter {
        match self.mode {
            Mode::Full => self.phi.product(&self.chi()),
            Mode::Improved => self.phi.product(self.eps_d()),
        }
    }

    /// `twist(−1) = (−1)^{weight_k}`.
    pub fn parity_ok(&self) -> bool {
        self.twist().is_even() == (self.weight_k() % 2 == 0)
    }
}

/// The three `n × n` blocks of `S = 2Nβ`.
struct Blocks {
    s1: Vec<Vec<i128>>,
    s0: Vec<Vec<i128>>,
}

impl Blocks {
    fn of(beta: &HalfIntMatrix, n: usize) -> Self {
        let get = |i: usize, j: usize| i128::from(beta.entry(i, j));
        Self {
            s1: (0..n).map(|i| (0..n).map(|j| get(i, j)).collect()).collect(),
            s0: (0..n).map(|i| (0..n).map(|j| get(i, n + j)).collect()).collect(),
        }
    }

    /// Determinant of the leading `m × m` minor of `S0`.
    fn minor_det(&self, m: usize) -> i128 {
        if m == 0 {
            return 1;
        }
        let minor: Vec<Vec<i128>> = self.s0[..m].iter().map(|r| r[..m].to_vec()).collect();
        intlin::det(&minor)
    }

    fn trace_s0(&self) -> i128 {
        (0..self.s0.len()).map(|i| self.s0[i][i]).sum()
    }
}

fn check_size(spec: &EisensteinSpec, beta: &HalfIntMatrix) -> Result<(), EisensteinError> {
    if beta.n() != 2 * spec.n {
        return invalid(format!("index has size {}, expected {}", beta.n(), 2 * spec.n));
    }
    if beta.level() != spec.level {
        return invalid(format!("index has level {}, expected {}", beta.level(), spec.level));
    }
    Ok(())
}

fn pow_i128(b: i128, e: usize) -> i128 {
    (0..e).fold(1i128, |acc, _| acc * b)
}

/// `v_p(x) ≥ a`, with `v_p(0) = ∞`.
fn divisible(x: i128, p: u64, a: u32) -> bool {
    val_p(x, p).map_or(true, |v| v >= a)
}

/// The Schwartz function `α̂(β)` at `p`.
///
/// Both modes require `β1 ∈ p²Sym(n, Z_p)*`; `β2 ∈ Sym(n, Z_p)*` holds for every
/// index of level prime to `p`. Full mode requires `(2β0)_{N_i} ∈ GL(N_i, Z_p)`
/// for `1 ≤ i ≤ d` and contributes `∏_{i<d} ε_iε_{i+1}^{−1}(det(2β0)_{N_i}) ·
/// ε_dχ^{−1}(det 2β0)`; improved mode requires `β0 ∈ M_n(Z_p)` and the unit
/// conditions only for `i < d`, with the character product over `i < d`.
pub fn schwartz_hat(spec: &EisensteinSpec, beta: &HalfIntMatrix) -> Result<CycRational, EisensteinError> {
    check_size(spec, beta)?;
    let (n, p, level) = (spec.n, spec.p, i128::from(spec.level));
    let b = Blocks::of(beta, n);
    let diag_extra = u32::from(p == 2);
    for i in 0..n {
        for j in 0..n {
            if !divisible(b.s1[i][j], p, 2 + if i == j { diag_extra } else { 0 }) {
                return Ok(CycRational::zero());
            }
        }
    }
    if spec.mode == Mode::Improved && p == 2 && b.s0.iter().flatten().any(|&x| x % 2 != 0) {
        return Ok(CycRational::zero());
    }
    let par = &spec.weight.parabolic;
    let d = par.d();
    let last = match spec.mode {
        Mode::Full => d,
        Mode::Improved => d - 1,
    };
    let eps = &spec.weight.eps;
    let mut value = CycRational::one();
    for i in 1..=last {
        let m = par.cumulative(i);
        let det = b.minor_det(m);
        if det % i128::from(p) == 0 {
            return Ok(CycRational::zero());
        }
        if i < d {
            let ch = eps[i - 1].product(&eps[i].inverse());
            value = &value * &ch.eval_ratio(det, pow_i128(level, m));
        }
    }
    if spec.mode == Mode::Full {
        let ch = eps[d - 1].product(&spec.chi().inverse());
        value = &value * &ch.eval_ratio(b.minor_det(n), pow_i128(level, n));
    }
    Ok(value)
}

/// Exact symbolic archimedean constant `sign · 2^{pow2} · π^{pow_pi_twice/2} · rational`,
/// with `rational` a positive rational of odd numerator and denominator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchNormalization {
    pub sign: i8,
    pub pow2: i64,
    /// Twice the exponent of `π`.
    pub pow_pi_twice: i64,
    #[serde(with = "rat_str")]
    pub rational: BigRational,
}

impl ArchNormalization {
    /// The record of `1`.
    pub fn identity() -> Self {
        Self { sign: 1, pow2: 0, pow_pi_twice: 0, rational: BigRational::one() }
    }

    /// Normalize: move the sign and powers of 2 out of `r` (which must be nonzero).
    fn normalized(sign: i8, mut pow2: i64, pow_pi_twice: i64, r: BigRational) -> Self {
        assert!(!r.is_zero(), "archimedean constants are nonzero");
        let sign = if r.is_negative() { -sign } else { sign };
        let two = BigInt::from(2);
        let (mut num, mut den) = (r.numer().abs(), r.denom().clone());
        while num.is_even() {
            num /= &two;
            pow2 += 1;
        }
        while den.is_even() {
            den /= &two;
            pow2 -= 1;
        }
        Self { sign, pow2, pow_pi_twice, rational: BigRational::new(num, den) }
    }

    /// Componentwise product.
    pub fn mul(&self, other: &Self) -> Self {
        Self::normalized(
            self.sign * other.sign,
            self.pow2 + other.pow2,
            self.pow_pi_twice + other.pow_pi_twice,
            &self.rational * &other.rational,
        )
    }

    /// Multiplicative inverse.
    pub fn inv(&self) -> Self {
        Self::normalized(self.sign, -self.pow2, -self.pow_pi_twice, self.rational.recip())
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }
}

/// `Γ(x)` for `x ∈ ½Z`, `x > 0`: `(m−1)!` at integers and `(2h)!/(4^h h!)·√π` at `h + ½`.
fn gamma_half_integer(twice_x: i64) -> ArchNormalization {
    assert!(twice_x > 0, "Γ is evaluated at positive arguments only");
    let fact = |m: i64| (1..=m).fold(BigInt::one(), |acc, i| acc * BigInt::from(i));
    if twice_x % 2 == 0 {
        ArchNormalization::normalized(1, 0, 0, BigRational::from_integer(fact(twice_x / 2 - 1)))
    } else {
        let h = (twice_x - 1) / 2;
        let r = BigRational::new(fact(2 * h), fact(h) * num_traits::pow(BigInt::from(4), h as usize));
        ArchNormalization::normalized(1, 0, 1, r)
    }
}

/// `Γ_m(s) = π^{m(m−1)/4} ∏_{j=0}^{m−1} Γ(s − j/2)` for `s ∈ ½Z` with `s > (m−1)/2`.
pub fn gamma_multi(m: i64, twice_s: i64) -> ArchNormalization {
    let base = ArchNormalization { pow_pi_twice: m * (m - 1) / 2, ..ArchNormalization::identity() };
    (0..m).fold(base, |acc, j| acc.mul(&gamma_half_integer(twice_s - j)))
}

/// The normalizing constant `(−1)^{nk} 2^{−n+2n²−2nk} π^{−n−2n²} Γ_{2n}((2n+1)/2)`.
pub fn arch_norm(k: i64, n: usize) -> ArchNormalization {
    let n = n as i64;
    let head = ArchNormalization {
        sign: if (n * k) % 2 == 0 { 1 } else { -1 },
        pow2: -n + 2 * n * n - 2 * n * k,
        pow_pi_twice: -2 * (n + 2 * n * n),
        rational: BigRational::one(),
    };
    head.mul(&gamma_multi(2 * n, 2 * n + 1))
}

/// The archimedean Whittaker constant `(−1)^{nk} 2^{n−2n²+2nk} π^{n+2n²} / Γ_{2n}((2n+1)/2)`.
pub fn arch_whittaker(k: i64, n: usize) -> ArchNormalization {
    let n = n as i64;
    let head = ArchNormalization {
        sign: if (n * k) % 2 == 0 { 1 } else { -1 },
        pow2: n - 2 * n * n + 2 * n * k,
        pow_pi_twice: 2 * (n + 2 * n * n),
        rational: BigRational::one(),
    };
    head.mul(&gamma_multi(2 * n, 2 * n + 1).inv())
}

/// What a [`SiegelSeriesProvider`] can evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderCapability {
    /// Largest size of the nondegenerate part of `β`.
    pub max_size: usize,
    /// Largest `val_q(det*(2β))`.
    pub max_valuation: u32,
}

/// Source of the local polynomials `g_{β,q}`.
pub trait SiegelSeriesProvider {
    fn capability(&self) -> ProviderCapability;

    /// Coefficients of `g_{β,q}`, constant term first, for a prime `q ∤ N`.
    fn polynomial(&self, beta: &HalfIntMatrix, q: u64) -> Result<Vec<BigInt>, EisensteinError>;

    /// `g_{β,q}(t)`.
    fn eval(&self, beta: &HalfIntMatrix, q: u64, t: &CycRational) -> Result<CycRational, EisensteinError> {
        let poly = self.polynomial(beta, q)?;
        Ok(poly.iter().rev().fold(CycRational::zero(), |acc, c| {
            &(&acc * t) + &CycRational::from_rational(BigRational::from_integer(c.clone()))
        }))
    }
}

/// `S` restricted to a lattice complement of its radical (size `rank`).
fn nondegenerate_part(beta: &HalfIntMatrix) -> Vec<Vec<i128>> {
    let n = beta.n();
    let m: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| i128::from(beta.entry(i, j))).collect()).collect();
    let (_, comp) = intlin::kernel_and_complement(&m, n);
    if comp.is_empty() {
        return Vec::new();
    }
    let c: Vec<Vec<i128>> = (0..n).map(|i| comp.iter().map(|v| v[i]).collect()).collect();
    intlin::congruence(&m, &c)
}

/// Largest `q^{3(K+1)}` the brute-force provider will enumerate.
const BRUTE_FORCE_BUDGET: u64 = 40_000_000;

/// Siegel-series polynomials by exact exponential sums over `Sym(m, q^{−L}Z/Z)`,
/// for nondegenerate parts of size `m ≤ 2`.
///
/// The coefficient of `X^j` in `b_q(β, X) = Σ_ς e_q(tr βς) X^{log_q ν(ς)}` is an exact
/// integer once every `ς` with `ν(ς) = q^j` is enumerated, which holds for `j ≤ L`.
/// Dividing by `γ_q(β, X)` gives `F_q(β, X)`; the result at exponent `K` is accepted
/// only when the `X^{K+1}` coefficient computed at `L = K + 1` vanishes.
pub struct BruteForceProvider {
    max_size: usize,
    exponent: Option<u32>,
    cache: Mutex<HashMap<(Vec<Vec<i128>>, u64, u64), Vec<BigInt>>>,
}

/// A brute-force provider for nondegenerate parts of size `≤ max_size ≤ 2`. With
/// `max_denominator_exponent = None` the exponent is `K = val_q(det*(2β))`.
pub fn brute_force_provider(max_size: usize, max_denominator_exponent: Option<u32>) -> BruteForceProvider {
    BruteForceProvider { max_size: max_size.min(2), exponent: max_denominator_exponent, cache: Mutex::new(HashMap::new()) }
}

impl SiegelSeriesProvider for BruteForceProvider {
    fn capability(&self) -> ProviderCapability {
        ProviderCapability { max_size: self.max_size, max_valuation: self.exponent.unwrap_or(8) }
    }

    fn polynomial(&self, beta: &HalfIntMatrix, q: u64) -> Result<Vec<BigInt>, EisensteinError> {
        if !is_prime(q) || beta.level() % q == 0 {
            return invalid(format!("{q} must be a prime not dividing the level"));
        }
        let s = nondegenerate_part(beta);
        let m = s.len();
        if m == 0 {
            return Ok(vec![BigInt::one()]);
        }
        if m > self.max_size {
            return Err(EisensteinError::ProviderCapability(format!("an index of rank {m}")));
        }
        let e = val_p(intlin::det(&s), q).expect("nondegenerate part");
        let k = self.exponent.unwrap_or(e);
        if self.exponent.is_none() && e > self.capability().max_valuation {
            return Err(EisensteinError::ProviderCapability(format!("val_{q}(det*(2β)) = {e}")));
        }
        let l = k + 1;
        let count = (q as f64).powi((l * (m * (m + 1) / 2) as u32) as i32);
        if count > BRUTE_FORCE_BUDGET as f64 {
            return Err(EisensteinError::ProviderCapability(format!("q = {q} at denominator exponent {l}")));
        }
        let key = (s.clone(), beta.level(), q);
        if self.exponent.is_none() {
            if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
                return Ok(v.clone());
            }
        }
        let b = siegel_series_coefficients(&s, beta.level(), q, l);
        let f = normalize_series(&b, &s, q, l as usize);
        if !f[l as usize].is_zero() {
            return Err(EisensteinError::NonConvergent { q, k });
        }
        let mut poly = f;
        while poly.len() > 1 && poly.last().map_or(false, |c| c.is_zero()) {
            poly.pop();
        }
        if self.exponent.is_none() {
            self.cache.lock().expect("cache lock").insert(key, poly.clone());
        }
        Ok(poly)
    }
}

/// `b_j` for `0 ≤ j ≤ l`: `Σ_{ν(ς) = q^j} e_q(tr βς)` over `ς ∈ Sym(m, Q_q)/Sym(m, Z_q)`,
/// where `2Nβ = s` and `e_q(x) = exp(−2πi{x}_q)`.
fn siegel_series_coefficients(s: &[Vec<i128>], level: u64, q: u64, l: u32) -> Vec<BigInt> {
    let m = s.len();
    let modulus = q.pow(l);
    let mi = i128::from(modulus);
    let val: Vec<u32> = (0..modulus).map(|x| val_p(i128::from(x), q).unwrap_or(l).min(l)).collect();
    let vcap_full = |x: i128| val_p(x, q).expect("nonzero");
    let n_inv = {
        let (g, x, _) = intlin::ext_gcd(i128::from(level).rem_euclid(mi), mi);
        debug_assert_eq!(g, 1);
        x.rem_euclid(mi)
    };
    // counts[j][r]: number of ς of exponent j whose phase is ζ^{−r}.
    let mut counts = vec![vec![0u64; modulus as usize]; l as usize + 1];
    let mut record = |j: u32, half_trace: i128| {
        if j <= l {
            let r = (half_trace.rem_euclid(mi) * n_inv).rem_euclid(mi);
            counts[j as usize][r as usize] += 1;
        }
    };
    match m {
        1 => {
            for a in 0..modulus {
                let j = l - val[a as usize];
                record(j, s[0][0] / 2 * i128::from(a));
            }
        }
        2 => {
            let (s11, s12, s22) = (s[0][0], s[0][1], s[1][1]);
            for a in 0..modulus {
                for b in 0..modulus {
                    let vab = val[a as usize].min(val[b as usize]);
                    for c in 0..modulus {
                        let v1 = vab.min(val[c as usize]);
                        let (ai, bi, ci) = (i128::from(a), i128::from(b), i128::from(c));
                        let det = ai * ci - bi * bi;
                        let v2 = if v1 >= l || det == 0 { l } else { (vcap_full(det) - v1).min(l) };
                        let j = (l - v1) + (l - v2);
                        // tr(SA)/2 with A = [[a, b], [b, c]].
                        record(j, s11 / 2 * ai + s12 * bi + s22 / 2 * ci);
                    }
                }
            }
        }
        _ => unreachable!("brute force supports sizes 1 and 2"),
    }
    counts
        .iter()
        .map(|row| {
            let mut poly = vec![BigRational::zero(); modulus as usize];
            for (r, &c) in row.iter().enumerate() {
                if c > 0 {
                    let idx = (modulus as usize - r) % modulus as usize;
                    poly[idx] += BigRational::from_integer(BigInt::from(c));
                }
            }
            let v = CycRational::reduce(modulus, poly).as_rational().expect("Galois-invariant sum");
            assert!(v.is_integer(), "exponential sums are integers");
            v.to_integer()
        })
        .collect()
}

/// `F = b · (1 − χ_β(q)q^{m/2}X) / ((1 − X) ∏_{j ≤ m/2} (1 − q^{2j}X²))` up to `X^l`
/// (the `χ_β` factor only for even `m`).
fn normalize_series(b: &[BigInt], s: &[Vec<i128>], q: u64, l: usize) -> Vec<BigInt> {
    let m = s.len();
    let qb = BigInt::from(q);
    let mut num: Vec<BigInt> = b[..=l].to_vec();
    if m % 2 == 0 {
        let sign = if (m / 2) % 2 == 1 { -1 } else { 1 };
        let chi = kronecker(fundamental_discriminant(sign * intlin::det(&s.to_vec())), q as i128);
        let c = BigInt::from(chi) * num_traits::pow(qb.clone(), m / 2);
        for i in (1..=l).rev() {
            let prev = num[i - 1].clone();
            num[i] -= &c * prev;
        }
    }
    // Denominator polynomial D(X), D_0 = 1.
    let mut den = vec![BigInt::one(), -BigInt::one()];
    for j in 1..=m / 2 {
        let mut factor = vec![BigInt::zero(); 2 * 1 + 1];
        factor[0] = BigInt::one();
        factor[2] = -num_traits::pow(qb.clone(), 2 * j);
        den = poly_mul(&den, &factor);
    }
    let mut f = vec![BigInt::zero(); l + 1];
    for i in 0..=l {
        let mut acc = num[i].clone();
        for k in 1..den.len().min(i + 1) {
            acc -= &den[k] * &f[i - k];
        }
        f[i] = acc;
    }
    f
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// A coefficient split into its cyclotomic part and its symbolic archimedean part.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientValue {
    pub cyc: CycRational,
    pub arch: ArchNormalization,
}

/// `∏_{v|N} e_v(2 tr β0)`: since `2 tr β0 = tr(S0)/N` is integral away from `N`,
/// the product formula `∏_v e_v = 1` gives `e_∞(tr(S0)/N)^{−1} = ζ_N^{−tr S0}`.
pub fn level_root_of_unity(level: u64, beta: &HalfIntMatrix) -> CycRational {
    let n = beta.n() / 2;
    let tr = Blocks::of(beta, n).trace_s0();
    CycRational::zeta(level, -(tr.rem_euclid(i128::from(level)) as i64))
}

fn primes_of(x: i128) -> Vec<u64> {
    prime_divisors(x.unsigned_abs() as u64)
}

/// The Fourier coefficient `𝔠(β)` of the normalized Eisenstein series at a
/// size-`2n` index `β ≥ 0`.
pub fn coeff_c(
    spec: &EisensteinSpec,
    beta: &HalfIntMatrix,
    provider: &dyn SiegelSeriesProvider,
) -> Result<CoefficientValue, EisensteinError> {
    spec.validate()?;
    check_size(spec, beta)?;
    let k = spec.weight_k();
    let arch = arch_norm(k, spec.n).mul(&arch_whittaker(k, spec.n));
    let alpha = schwartz_hat(spec, beta)?;
    if alpha.is_zero() || !beta.is_psd() {
        return Ok(CoefficientValue { cyc: CycRational::zero(), arch });
    }
    let n = spec.n as i64;
    let level = spec.level;
    let p = spec.p;
    let rank = beta.rank() as i64;
    let corank = 2 * n - rank;
    let psi = spec.twist();
    let removed = prime_divisors(level * p);

    let level_factor = CycRational::from_rational(BigRational::new(
        BigInt::one(),
        num_traits::pow(BigInt::from(level), (n * (2 * n + 1)) as usize),
    ));
    let root = level_root_of_unity(level, beta);

    let mut l_part = CycRational::one();
    match spec.mode {
        Mode::Full => {
            if corank != 0 {
                return invalid("full-mode coefficients are supported on nondegenerate indices");
            }
            let lam = lambda_beta_character(beta)?;
            l_part = partial_l(&psi.product(&lam), (k - n) as u64, &removed)?;
        }
        Mode::Improved => {
            let jmax = if rank % 2 == 0 {
                let lam = lambda_beta_character(beta)?;
                l_part = partial_l(&psi.product(&lam), (k - n + corank / 2) as u64, &removed)?;
                corank / 2
            } else {
                (corank + 1) / 2
            };
            let sq = psi.power(2);
            for j in 1..=jmax {
                l_part = &l_part * &partial_l(&sq, (2 * k + 2 * j - 2 * n - 2) as u64, &removed)?;
            }
        }
    }

    let mut g_part = CycRational::one();
    for q in primes_of(det_star(beta)) {
        if removed.contains(&q) {
            continue;
        }
        let qpow = crate::euler::p_pow(q, k - 2 * n - 1);
        let t = &psi.eval(i128::from(q)) * &qpow;
        g_part = &g_part * &provider.eval(beta, q, &t)?;
    }

    let b = Blocks::of(beta, spec.n);
    let par = &spec.weight.parabolic;
    let t = &spec.weight.t;
    let d = par.d();
    let mut weights = BigRational::one();
    let minor = |m: usize| BigRational::new(BigInt::from(b.minor_det(m)), BigInt::from(pow_i128(i128::from(level), m)));
    for i in 1..d {
        weights *= num_traits::pow(minor(par.cumulative(i)), (t[i - 1] - t[i]) as usize);
    }
    if spec.mode == Mode::Full {
        weights *= num_traits::pow(minor(spec.n), (t[d - 1] - k) as usize);
    }

    let cyc = [level_factor, root, l_part, g_part, alpha, CycRational::from_rational(weights)]
        .iter()
        .fold(CycRational::one(), |acc, x| &acc * x);
    Ok(CoefficientValue { cyc, arch })
}

/// One summand of a restricted coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictedTerm {
    pub beta0: OffDiagBlock,
    pub cyc: CycRational,
}

/// `ε_{q-exp}(β1, β2, 𝓔) = Σ_{β0} 𝔠([[β1, β0], [ᵗβ0, β2]])`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictedCoefficient {
    pub value: CoefficientValue,
    pub terms: Vec<RestrictedTerm>,
}

/// The pullback coefficient at `(β1, β2)`: the sum of `coeff_c` over all PSD completions.
pub fn restricted_coeff(
    spec: &EisensteinSpec,
    b1: &HalfIntMatrix,
    b2: &HalfIntMatrix,
    provider: &dyn SiegelSeriesProvider,
) -> Result<RestrictedCoefficient, EisensteinError> {
    spec.validate()?;
    if b1.n() != spec.n || b2.n() != spec.n || b1.level() != spec.level || b2.level() != spec.level {
        return invalid("β1 and β2 must have size n and level N");
    }
    if !b1.is_psd() || !b2.is_psd() {
        return invalid("β1 and β2 must be positive semidefinite");
    }
    let k = spec.weight_k();
    let mut total = CycRational::zero();
    let mut terms = Vec::new();
    for b0 in completions(b1, b2) {
        let beta = block_embed(b1, &b0, b2).map_err(|e| EisensteinError::Invalid(e.to_string()))?;
        let c = coeff_c(spec, &beta, provider)?;
        total = &total + &c.cyc;
        terms.push(RestrictedTerm { beta0: b0, cyc: c.cyc });
    }
    let arch = arch_norm(k, spec.n).mul(&arch_whittaker(k, spec.n));
    Ok(RestrictedCoefficient { value: CoefficientValue { cyc: total, arch }, terms })
}

/// Comparison of two full-mode coefficients at congruent weight points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongruenceReport {
    pub k1: i64,
    pub k2: i64,
    /// The weights agree modulo `(p−1)p^a`; the coefficients are compared mod `p^{a+1}`.
    pub a: u32,
    pub value1: CycRational,
    pub value2: CycRational,
    pub congruent: bool,
}

/// Compare `coeff_c` for two full-mode specs with the same tame data and trivial
/// finite parts whose weights agree modulo `(p−1)p^a`.
pub fn check_congruence(
    spec1: &EisensteinSpec,
    spec2: &EisensteinSpec,
    beta: &HalfIntMatrix,
    a: u32,
    provider: &dyn SiegelSeriesProvider,
) -> Result<CongruenceReport, EisensteinError> {
    for s in [spec1, spec2] {
        if s.mode != Mode::Full {
            return invalid("congruences compare full-mode coefficients");
        }
        let trivial = s.weight.eps.iter().all(|e| e.is_trivial()) && s.chi().is_trivial();
        if !trivial {
            return invalid("congruences are checked at trivial finite parts");
        }
    }
    if (spec1.n, spec1.level, spec1.p, &spec1.phi, &spec1.weight.parabolic)
        != (spec2.n, spec2.level, spec2.p, &spec2.phi, &spec2.weight.parabolic)
    {
        return invalid("the two specs must share n, N, p, φ and the parabolic");
    }
    let p = spec1.p;
    let m = i64::try_from((p - 1) * p.pow(a)).map_err(|_| EisensteinError::Invalid("modulus overflow".into()))?;
    let agree = |x: i64, y: i64| (x - y) % m == 0;
    let weights_agree = agree(spec1.weight.k, spec2.weight.k)
        && spec1.weight.t.iter().zip(&spec2.weight.t).all(|(&x, &y)| agree(x, y));
    if !weights_agree {
        return invalid(format!("weight points do not agree modulo {m}"));
    }
    let value1 = coeff_c(spec1, beta, provider)?.cyc;
    let value2 = coeff_c(spec2, beta, provider)?.cyc;
    let integral = |v: &CycRational| v.coeff_valuation(p).map_or(true, |x| x >= 0);
    if !integral(&value1) || !integral(&value2) {
        return invalid("coefficients are not p-integral");
    }
    let congruent = value1.congruent_mod(&value2, p, i64::from(a) + 1);
    Ok(CongruenceReport { k1: spec1.weight.k, k2: spec2.weight.k, a, value1, value2, congruent })
}

/// A `p`-adic character `ψ` through a Dirichlet character of `p`-power modulus,
/// with the exponent `c` of its conductor.
fn conductor_exponent(psi: &DirichletCharacter, p: u64) -> u32 {
    let mut f = psi.conductor();
    let mut c = 0;
    while f > 1 && f % p == 0 {
        f /= p;
        c += 1;
    }
    c
}

fn p_power_rat(p: u64, e: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(p));
    if e >= 0 {
        num_traits::pow(b, e as usize)
    } else {
        num_traits::pow(b, (-e) as usize).recip()
    }
}

fn rat_valuation(x: &BigRational, p: u64) -> Option<i64> {
    (!x.is_zero()).then(|| crate::lseries::cyclo::rational_valuation(x, p))
}

fn rational_det(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= &a[col][col];
        for r in col + 1..n {
            let f = &a[r][col] / &a[col][col];
            for c in col..n {
                let sub = &f * &a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    det
}

/// Reduce a `p`-integral rational modulo `p`.
fn mod_p(x: &BigRational, p: u64) -> u64 {
    let pb = BigInt::from(p);
    let den = x.denom().mod_floor(&pb).to_u64().expect("small");
    let num = x.numer().mod_floor(&pb).to_u64().expect("small");
    num * intlin::pow_mod(den, p - 2, p) % p
}

/// Rank of a matrix over `F_p`.
fn rank_mod_p(m: &[Vec<u64>], p: u64) -> usize {
    let mut a = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| a[r][col] % p != 0) else { continue };
        a.swap(piv, rank);
        let inv = intlin::pow_mod(a[rank][col], p - 2, p);
        for r in 0..rows {
            if r != rank && a[r][col] != 0 {
                let f = a[r][col] * inv % p;
                for c in 0..cols {
                    a[r][c] = (a[r][c] + p * p - f * a[rank][c] % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Gaussian binomial `[a choose b]_p` (zero when `b > a`).
pub fn gaussian_binomial(a: usize, b: usize, p: u64) -> BigInt {
    if b > a {
        return BigInt::zero();
    }
    let pb = BigInt::from(p);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..b {
        num *= num_traits::pow(pb.clone(), a - i) - 1;
        den *= num_traits::pow(pb.clone(), i + 1) - 1;
    }
    num / den
}

/// The Fourier transform `𝓕_ψ(λ)` on `M_{n_d}(Q_p)` of `ψ(det(−x))·𝟙_{GL(n_d, Z_p)}(x)`
/// (additive Haar measure with `vol(M_{n_d}(Z_p)) = 1`, character `e_p(−tr λx)`).
///
/// For `ψ` of conductor `p^c > 1`:
/// `p^{−n_d(n_d+1)c/2} G(ψ)^{n_d} 𝟙_{GL(n_d, Z_p)}(p^cλ) ψ^{−1}(det p^cλ)`.
/// For trivial `ψ`: `Σ_{j=0}^{n_d} (−1)^j p^{j(j−1)/2 − j n_d} #{L : pZ_p^{n_d} ⊂ L ⊂ Z_p^{n_d},
/// [Z_p^{n_d} : L] = p^j, λL ⊂ Z_p^{n_d}}`, which for `n_d = 1` is `𝟙_{Z_p}(λ) − p^{−1}𝟙_{Z_p}(pλ)`.
pub fn bs_fourier(p: u64, psi: Option<&DirichletCharacter>, lambda: &[Vec<BigRational>]) -> Result<CycRational, EisensteinError> {
    let nd = lambda.len();
    if nd == 0 || lambda.iter().any(|r| r.len() != nd) {
        return invalid("λ must be a nonempty square matrix");
    }
    let ramified = psi.filter(|c| !c.is_trivial());
    match ramified {
        Some(psi) => {
            if !is_power_of(psi.modulus(), p) {
                return invalid("ψ must have p-power modulus");
            }
            let c = conductor_exponent(psi, p);
            let prim = psi.primitive();
            let scale = p_power_rat(p, i64::from(c));
            let scaled: Vec<Vec<BigRational>> =
                lambda.iter().map(|r| r.iter().map(|x| x * &scale).collect()).collect();
            let integral = scaled.iter().flatten().all(|x| rat_valuation(x, p).map_or(true, |v| v >= 0));
            if !integral {
                return Ok(CycRational::zero());
            }
            let det = rational_det(&scaled);
            if rat_valuation(&det, p) != Some(0) {
                return Ok(CycRational::zero());
            }
            let g = crate::lseries::gauss_sum(&prim)?;
            let (num, den) = (det.numer().to_i128().expect("small"), det.denom().to_i128().expect("small"));
            let psi_inv_det = prim.eval_ratio(den, num);
            let nd_i = nd as i64;
            let head = CycRational::from_rational(p_power_rat(p, -(nd_i * (nd_i + 1) / 2) * i64::from(c)));
            Ok(&(&head * &g.pow(nd_i)) * &psi_inv_det)
        }
        None => {
            let pb = BigRational::from_integer(BigInt::from(p));
            let scaled: Vec<Vec<BigRational>> = lambda.iter().map(|r| r.iter().map(|x| x * &pb).collect()).collect();
            if !scaled.iter().flatten().all(|x| rat_valuation(x, p).map_or(true, |v| v >= 0)) {
                return Ok(CycRational::zero());
            }
            let reduced: Vec<Vec<u64>> = scaled.iter().map(|r| r.iter().map(|x| mod_p(x, p)).collect()).collect();
            let kernel_dim = nd - rank_mod_p(&reduced, p);
            let mut total = BigRational::zero();
            for j in 0..=nd {
                let count = gaussian_binomial(kernel_dim, nd - j, p);
                let e = (j * (j.saturating_sub(1)) / 2) as i64 - (j * nd) as i64;
                let term = BigRational::from_integer(count) * p_power_rat(p, e);
                if j % 2 == 0 {
                    total += term;
                } else {
                    total -= term;
                }
            }
            Ok(CycRational::from_rational(total))
        }
    }
}

/// `𝟙_{Z_p}(λ) − p^{−1}𝟙_{Z_p}(pλ)`, the trivial-character transform for `n_d = 1`.
pub fn bs_fourier_trivial_rank_one(p: u64, lambda: &BigRational) -> BigRational {
    let ind = |x: &BigRational| rat_valuation(x, p).map_or(true, |v| v >= 0);
    let pl = lambda * BigRational::from_integer(BigInt::from(p));
    let mut v = BigRational::zero();
    if ind(lambda) {
        v += BigRational::one();
    }
    if ind(&pl) {
        v -= p_power_rat(p, -1);
    }
    v
}

/// Reference value of `𝓕_ψ(λ)` as a finite Fourier sum over `GL(n_d, Z/p^K)`, for `λ`
/// with entries in `Z[1/p]`: `p^{−K n_d²} Σ_x ψ(det(−x)) ζ_{p^K}^{−p^K tr(λx)}` with
/// `K = max(c, v)` where `p^v` bounds the denominators of `λ`. Cost `p^{K n_d²}`.
pub fn fourier_oracle(p: u64, psi: Option<&DirichletCharacter>, lambda: &[Vec<BigRational>]) -> Result<CycRational, EisensteinError> {
    let nd = lambda.len();
    if lambda.iter().flatten().any(|x| !is_power_of(x.denom().to_u64().unwrap_or(0), p)) {
        return invalid("oracle needs λ with p-power denominators");
    }
    let c = psi.map_or(0, |ch| conductor_exponent(ch, p));
    let v = lambda.iter().flatten().filter_map(|x| rat_valuation(x, p)).map(|v| (-v).max(0)).max().unwrap_or(0) as u32;
    let kk = c.max(v).max(1);
    let modulus = p.pow(kk);
    let cells = nd * nd;
    if (modulus as f64).powi(cells as i32) > 5e7 {
        return Err(EisensteinError::ProviderCapability("oracle size".into()));
    }
    let scale = BigRational::from_integer(BigInt::from(modulus));
    let lam: Vec<i128> = lambda
        .iter()
        .flatten()
        .map(|x| (x * &scale).to_integer().to_i128().expect("small").rem_euclid(i128::from(modulus)))
        .collect();
    let psi_order = psi.map_or(1, |ch| ch.order());
    let order = psi_order.lcm(&modulus);
    let mut poly = vec![BigRational::zero(); order as usize];
    let mut x = vec![0u64; cells];
    let mi = i128::from(modulus);
    loop {
        let xm: Vec<Vec<i128>> = (0..nd).map(|i| (0..nd).map(|j| i128::from(x[i * nd + j])).collect()).collect();
        let det = intlin::det(&xm);
        if det % i128::from(p) != 0 {
            let sign_det = if nd % 2 == 0 { det } else { -det };
            let psi_exp = match psi {
                Some(ch) => ch.exponent(sign_det).expect("unit") as u64,
                None => 0,
            };
            // tr(λx) = Σ_{i,j} λ_ij x_ji
            let tr: i128 = (0..nd).flat_map(|i| (0..nd).map(move |j| (i, j))).map(|(i, j)| lam[i * nd + j] * xm[j][i]).sum();
            let e = (psi_exp * (order / psi_order) + ((-tr).rem_euclid(mi) as u64) * (order / modulus)) % order;
            poly[e as usize] += BigRational::one();
        }
        let mut idx = 0;
        while idx < cells {
            x[idx] += 1;
            if x[idx] < modulus {
                break;
            }
            x[idx] = 0;
            idx += 1;
        }
        if idx == cells {
            break;
        }
    }
    let sum = CycRational::reduce(order, poly);
    Ok(sum.scale(&p_power_rat(p, -(i64::from(kk) * cells as i64))))
}
