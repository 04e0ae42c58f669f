//! Satake data at `p`, `U^P_p` eigenvalues, Newton–Hodge ordinarity, the
//! modified Euler factors `E_p`, `E^imp`, the comparison factor `A^P`, the
//! doubling normalizer `d_v` and the classification of trivial zeros.
//!
//! Field elements live in the cyclotomic field [`CycRational`]; half-integer
//! powers of `p` are realised exactly through `√p ∈ Q(ζ_{4p})` (or `Q(ζ_8)`
//! for `p = 2`). Valuations are carried alongside as exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cosets::PartitionParabolic;
use crate::lseries::{gauss_sum, CharacterError, CycRational, DirichletCharacter, LseriesError};

/// Errors from Euler-factor evaluation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EulerError {
    #[error("pole at s = {0}")]
    PoleAtS(String),
    #[error("the two evaluations of A^P disagree: product {product}, eigenvalue form {expansion}")]
    MismatchedForms { product: String, expansion: String },
    #[error("invalid data: {0}")]
    Invalid(String),
    #[error(transparent)]
    Lseries(#[from] LseriesError),
}

impl From<CharacterError> for EulerError {
    fn from(e: CharacterError) -> Self {
        EulerError::Lseries(e.into())
    }
}

pub(crate) mod rat_str {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        crate::lseries::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// An arithmetic weight `(t^P, ε^P)` on the parabolic, with its cyclotomic point `(k, χ)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArithmeticWeight {
    pub parabolic: PartitionParabolic,
    /// `t_1 ≥ … ≥ t_d`.
    pub t: Vec<i64>,
    /// `ε_1, …, ε_d` of `p`-power conductor.
    pub eps: Vec<DirichletCharacter>,
    /// Cyclotomic weight `k`.
    #[serde(default)]
    pub k: i64,
    /// Finite part `χ` of the cyclotomic point (`p`-power conductor); trivial when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<DirichletCharacter>,
}

impl ArithmeticWeight {
    /// Check lengths and dominance.
    pub fn validate(&self) -> Result<(), EulerError> {
        let d = self.parabolic.d();
        if self.t.len() != d || self.eps.len() != d {
            return Err(EulerError::Invalid(format!("expected {d} weights and {d} characters")));
        }
        if self.t.windows(2).any(|w| w[0] < w[1]) {
            return Err(EulerError::Invalid("weights must satisfy t_1 ≥ … ≥ t_d".into()));
        }
        Ok(())
    }

    /// `t_d ≥ n+1`.
    pub fn is_admissible(&self) -> bool {
        self.t.last().map_or(false, |&t| t >= self.parabolic.n as i64 + 1)
    }

    /// `t_d ≥ k ≥ n+1`.
    pub fn pair_admissible(&self) -> bool {
        self.is_admissible() && self.k >= self.parabolic.n as i64 + 1 && self.k <= *self.t.last().unwrap()
    }
}

/// A Satake parameter `α_j = θ_j(p)` with its `p`-adic valuation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alpha {
    pub value: CycRational,
    #[serde(with = "rat_str")]
    pub valuation: BigRational,
}

/// The tame character `φ` through its value `φ_p(p)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TameCharacter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub character: Option<DirichletCharacter>,
    pub phi_p_at_p: CycRational,
}

/// Satake data at `p` of a `P`-ordinary form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatakeData {
    #[serde(flatten)]
    pub weight: ArithmeticWeight,
    pub p: u64,
    pub alphas: Vec<Alpha>,
    pub phi: TameCharacter,
    /// Nontrivial monodromy between the Frobenius eigenvalues `1` and `α_n`
    /// (then `L_p(s, π×φ)` lacks the factor `1 − φ_p(p)p^{−s}`).
    #[serde(default)]
    pub monodromy: bool,
}

impl SatakeData {
    /// Check shapes.
    pub fn validate(&self) -> Result<(), EulerError> {
        self.weight.validate()?;
        if self.alphas.len() != self.n() {
            return Err(EulerError::Invalid(format!("expected {} Satake parameters", self.n())));
        }
        if self.alphas.iter().any(|a| a.value.is_zero()) {
            return Err(EulerError::Invalid("Satake parameters must be nonzero".into()));
        }
        Ok(())
    }

    /// `n`.
    pub fn n(&self) -> usize {
        self.weight.parabolic.n
    }

    /// `d`.
    pub fn d(&self) -> usize {
        self.weight.parabolic.d()
    }

    fn block(&self, i: usize) -> std::ops::Range<usize> {
        let par = &self.weight.parabolic;
        par.cumulative(i)..par.cumulative(i + 1)
    }

    fn phi(&self) -> &CycRational {
        &self.phi.phi_p_at_p
    }
}

fn rat(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn cyc(r: BigRational) -> CycRational {
    CycRational::from_rational(r)
}

/// `p^e` for an integer `e` (possibly negative).
pub fn p_pow(p: u64, e: i64) -> CycRational {
    let base = BigRational::from_integer(BigInt::from(p));
    let v = if e >= 0 {
        num_traits::pow(base, e as usize)
    } else {
        BigRational::one() / num_traits::pow(base, (-e) as usize)
    };
    cyc(v)
}

/// `√p` as an element of a cyclotomic field.
pub fn sqrt_p(p: u64) -> CycRational {
    if p == 2 {
        return &CycRational::zeta(8, 1) + &CycRational::zeta(8, 7);
    }
    let g = gauss_sum(&DirichletCharacter::legendre(p).expect("odd prime")).expect("primitive");
    if p % 4 == 1 {
        g
    } else {
        // G² = −p, so √p = −i·G.
        -(&CycRational::zeta(4, 1) * &g)
    }
}

/// `p^{e/2}`.
pub fn p_pow_half(p: u64, twice_e: i64) -> CycRational {
    let whole = p_pow(p, twice_e.div_euclid(2));
    if twice_e.rem_euclid(2) == 0 {
        whole
    } else {
        &whole * &sqrt_p(p)
    }
}

/// Newton–Hodge `P`-ordinarity: the partial-sum inequalities within each block
/// and the block equalities.
pub fn is_p_ordinary(data: &SatakeData) -> bool {
    let par = &data.weight.parabolic;
    for i in 0..par.d() {
        let ni = par.parts[i] as i64;
        let prev = par.cumulative(i) as i64;
        let t = data.weight.t[i];
        let mut sum = BigRational::zero();
        for r in 1..=ni {
            sum += &data.alphas[(prev + r - 1) as usize].valuation;
            // −r(t − N_{i−1} − (r+1)/2), doubled to stay integral.
            let bound = rat(-r * (2 * (t - prev) - (r + 1)), 2);
            if sum < bound {
                return false;
            }
        }
        let eq = rat(-ni * (2 * t - (prev + prev + ni + 1)), 2);
        if sum != eq {
            return false;
        }
    }
    true
}

/// A `U^P_p` eigenvalue with its valuation when the leading monomial is unique.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub value: CycRational,
    #[serde(with = "opt_rat_str", default)]
    pub valuation: Option<BigRational>,
}

mod opt_rat_str {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_str(&r.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| crate::lseries::parse_rational(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

/// Elementary symmetric polynomial `e_r` of the given values.
pub fn elementary_symmetric(values: &[CycRational], r: usize) -> CycRational {
    // e_0..e_r by the recurrence over values.
    let mut e = vec![CycRational::zero(); r + 1];
    e[0] = CycRational::one();
    for v in values {
        for k in (1..=r).rev() {
            e[k] = &e[k] + &(&e[k - 1] * v);
        }
    }
    e[r].clone()
}

/// The eigenvalues `𝔞_1, …, 𝔞_n`:
/// `𝔞_{N_i} = Π_{j≤i} p^{n_j(t_j − (N_{j−1}+N_j+1)/2)} α_{N_{j−1}+1}⋯α_{N_j}`, and for
/// `N_j ≤ i ≤ N_{j+1}`, `𝔞_i = 𝔞_{N_j} p^{(i−N_j)(t_{j+1} − (N_j+i+1)/2)} e_{i−N_j}(α_{N_j+1}, …, α_{N_{j+1}})`.
pub fn up_eigenvalues(data: &SatakeData) -> Vec<Eigenvalue> {
    let par = &data.weight.parabolic;
    let p = data.p;
    let mut out = Vec::with_capacity(data.n());
    let mut base = CycRational::one();
    let mut base_val = BigRational::zero();
    for j in 0..par.d() {
        let nj = par.cumulative(j) as i64;
        let block: Vec<CycRational> = data.block(j).map(|k| data.alphas[k].value.clone()).collect();
        let vals: Vec<&BigRational> = data.block(j).map(|k| &data.alphas[k].valuation).collect();
        let t = data.weight.t[j];
        let mut sorted: Vec<BigRational> = vals.iter().map(|v| (*v).clone()).collect();
        sorted.sort();
        for r in 1..=par.parts[j] as i64 {
            let i = nj + r;
            // (i − N_j)(t − (N_j + i + 1)/2), doubled.
            let twice = r * (2 * t - (nj + i + 1));
            let value = &(&base * &p_pow_half(p, twice)) * &elementary_symmetric(&block, r as usize);
            let r_us = r as usize;
            // The leading monomial (product of the r smallest valuations) is unique
            // exactly when the r-th and (r+1)-th smallest valuations differ.
            let unique = r_us == sorted.len() || sorted[r_us - 1] < sorted[r_us];
            let valuation = unique.then(|| {
                let lead: BigRational = sorted[..r_us].iter().cloned().sum();
                &base_val + rat(twice, 2) + lead
            });
            out.push(Eigenvalue { value, valuation });
        }
        let full = out.last().unwrap();
        base = full.value.clone();
        base_val = full.valuation.clone().expect("a block product is a single monomial");
    }
    out
}

fn inv_or_pole(x: &CycRational, s: &str) -> Result<CycRational, EulerError> {
    x.inv().ok_or_else(|| EulerError::PoleAtS(s.to_string()))
}

/// `χ ε_i^{−1}` as a character of `p`-power conductor, with the exponent `c` of its conductor.
fn twist(data: &SatakeData, i: usize, chi: &DirichletCharacter) -> (DirichletCharacter, u32) {
    let tw = chi.product(&data.weight.eps[i].inverse()).primitive();
    let f = tw.conductor();
    let mut c = 0;
    let mut m = f;
    while m > 1 && m % data.p == 0 {
        m /= data.p;
        c += 1;
    }
    (tw, c)
}

/// The block-`i` gamma factor (0-based `i`) as an explicit function of `s`:
/// unramified `Π_j (1 − φ_p(p)^{−1}α_j^{−1}p^{s−1}) / (1 − φ_p(p)α_j p^{−s})`,
/// ramified `G(χε_i^{−1})^{n_i} Π_j (φ_p(p)^{−1}α_j^{−1}p^{s−1})^{c}`.
pub fn gamma_p(s: i64, i: usize, data: &SatakeData, chi: &DirichletCharacter) -> Result<CycRational, EulerError> {
    let p = data.p;
    let (tw, c) = twist(data, i, chi);
    let phi_inv = inv_or_pole(data.phi(), "φ_p(p) = 0")?;
    let mut acc = CycRational::one();
    if tw.is_trivial() {
        for j in data.block(i) {
            let a = &data.alphas[j].value;
            let a_inv = inv_or_pole(a, "α = 0")?;
            let num = &CycRational::one() - &(&(&phi_inv * &a_inv) * &p_pow(p, s - 1));
            let den = &CycRational::one() - &(&(data.phi() * a) * &p_pow(p, -s));
            let den_inv = inv_or_pole(&den, &s.to_string())?;
            acc = &acc * &(&num * &den_inv);
        }
    } else {
        let g = gauss_sum(&tw)?;
        acc = g.pow(data.weight.parabolic.parts[i] as i64);
        for j in data.block(i) {
            let a_inv = inv_or_pole(&data.alphas[j].value, "α = 0")?;
            let m = &(&phi_inv * &a_inv) * &p_pow(p, s - 1);
            acc = &acc * &m.pow(i64::from(c));
        }
    }
    Ok(acc)
}

/// `E_p(s, π×φχ) = Π_{i=1}^d γ_p(…)` with the block twists `χ ε_i^{−1}`.
pub fn e_p(s: i64, data: &SatakeData, chi: &DirichletCharacter) -> Result<CycRational, EulerError> {
    (0..data.d()).try_fold(CycRational::one(), |acc, i| Ok(&acc * &gamma_p(s, i, data, chi)?))
}

/// Local factor `L_p(s, σ_d ⊗ φ_p) = Π_{j > N_{d−1}} (1 − φ_p(p)α_j p^{−s})^{−1}`.
pub fn local_l_last_block(s: i64, data: &SatakeData) -> Result<CycRational, EulerError> {
    let d = data.d();
    let mut acc = CycRational::one();
    for j in data.block(d - 1) {
        let f = &CycRational::one() - &(&(data.phi() * &data.alphas[j].value) * &p_pow(data.p, -s));
        acc = &acc * &inv_or_pole(&f, &s.to_string())?;
    }
    Ok(acc)
}

/// `E^{P-imp}_p(s, π×φε_d) = Π_{i<d} γ_p(…, twist ε_d ε_i^{−1}) · L_p(s, σ_d ⊗ φ_p)`.
pub fn e_imp(s: i64, data: &SatakeData) -> Result<CycRational, EulerError> {
    let eps_d = data.weight.eps[data.d() - 1].clone();
    let head = (0..data.d() - 1).try_fold(CycRational::one(), |acc, i| Ok::<_, EulerError>(&acc * &gamma_p(s, i, data, &eps_d)?))?;
    Ok(&head * &local_l_last_block(s, data)?)
}

/// `A^P` as the product `Π_{j>N_{d−1}} (1 − φ_p(p)^{−1} α_j^{−1} p^{n−t_d})`.
pub fn a_p_product(data: &SatakeData) -> Result<CycRational, EulerError> {
    let n = data.n() as i64;
    let td = *data.weight.t.last().unwrap();
    let phi_inv = inv_or_pole(data.phi(), "φ_p(p) = 0")?;
    let mut acc = CycRational::one();
    for j in data.block(data.d() - 1) {
        let a_inv = inv_or_pole(&data.alphas[j].value, "α = 0")?;
        acc = &acc * &(&CycRational::one() - &(&(&phi_inv * &a_inv) * &p_pow(data.p, n - td)));
    }
    Ok(acc)
}

/// `A^P` through the eigenvalues:
/// `1 + 𝔞_n^{−1}𝔞_{N_{d−1}}(−φ^{−1}p^{(n_d−1)/2})^{n_d} + 𝔞_n^{−1} Σ_{r=1}^{n_d−1} 𝔞_{N_{d−1}+r}(−φ^{−1}p^{(n_d−1−r)/2})^{n_d−r}`.
pub fn a_p_expansion(data: &SatakeData) -> Result<CycRational, EulerError> {
    let eig = up_eigenvalues(data);
    let n = data.n();
    let par = &data.weight.parabolic;
    let nd = par.last();
    let m = par.cumulative(par.d() - 1);
    let a_n_inv = inv_or_pole(&eig[n - 1].value, "𝔞_n = 0")?;
    let phi_inv = inv_or_pole(data.phi(), "φ_p(p) = 0")?;
    let a_at = |i: usize| if i == 0 { CycRational::one() } else { eig[i - 1].value.clone() };
    let mut acc = CycRational::one();
    for r in 0..nd {
        let e = (nd - r) as i64;
        let inner = -(&phi_inv * &p_pow_half(data.p, (nd - 1 - r) as i64));
        let term = &(&a_n_inv * &a_at(m + r)) * &inner.pow(e);
        acc = &acc + &term;
    }
    Ok(acc)
}

/// `A^P`, evaluated both ways and cross-checked.
pub fn a_p(data: &SatakeData) -> Result<CycRational, EulerError> {
    let prod = a_p_product(data)?;
    let exp = a_p_expansion(data)?;
    if prod != exp {
        return Err(EulerError::MismatchedForms { product: prod.to_string(), expansion: exp.to_string() });
    }
    Ok(prod)
}

/// The doubling normalizer `d_v(s, ξ) = L_v(s + (2n+1)/2, ξ) Π_{j=1}^n L_v(2s + 2n + 1 − 2j, ξ²)`
/// over a set of primes, with `L_v(s′, ξ) = (1 − ξ(q) q^{−s′})^{−1}`.
pub fn d_factor(s: &BigRational, xi: &DirichletCharacter, n: u64, primes: &[u64]) -> Result<CycRational, EulerError> {
    let shift = s + rat(2 * n as i64 + 1, 2);
    if !shift.is_integer() {
        return Err(EulerError::Invalid(format!("s + (2n+1)/2 = {shift} is not an integer")));
    }
    let s1 = shift.to_integer().to_i64().unwrap();
    let two_s = s * BigRational::from_integer(2.into());
    let two_s = two_s.to_integer().to_i64().unwrap();
    let xi2 = xi.product(xi);
    let local = |q: u64, ch: &DirichletCharacter, sp: i64| -> Result<CycRational, EulerError> {
        let v = ch.eval(i128::from(q));
        let f = &CycRational::one() - &(&v * &p_pow(q, -sp));
        inv_or_pole(&f, &s.to_string())
    };
    let mut acc = CycRational::one();
    for &q in primes {
        acc = &acc * &local(q, xi, s1)?;
        for j in 1..=n as i64 {
            acc = &acc * &local(q, &xi2, two_s + 2 * n as i64 + 1 - 2 * j)?;
        }
    }
    Ok(acc)
}

/// Type of trivial zero at the near-central point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrivialZero {
    None,
    Crystalline,
    SemiStable,
}

/// Classify the trivial zero at `s = n+1−k`, `k = n+1`: crystalline when
/// `φ_p(p) = 1` and `L_p(s, π×φ)` contains `1 − φ_p(p)p^{−s}` (no monodromy);
/// semi-stable when otherwise `φ_p(p) = 1`, `ε_d` is trivial and `α_n = p^{−1}`.
pub fn classify_trivial_zero(data: &SatakeData) -> TrivialZero {
    if !data.phi().is_one() {
        return TrivialZero::None;
    }
    if !data.monodromy {
        return TrivialZero::Crystalline;
    }
    let eps_d = &data.weight.eps[data.d() - 1];
    let alpha_n = &data.alphas[data.n() - 1].value;
    if eps_d.is_trivial() && *alpha_n == p_pow(data.p, -1) {
        TrivialZero::SemiStable
    } else {
        TrivialZero::None
    }
}

trait IsOne {
    fn is_one(&self) -> bool;
}

impl IsOne for CycRational {
    fn is_one(&self) -> bool {
        *self == CycRational::one()
    }
}

/// A random character of `(Z/p^c)^×` (trivial when `c = 0`).
pub fn random_p_character<R: Rng>(rng: &mut R, p: u64, c: u32) -> DirichletCharacter {
    if c == 0 {
        return DirichletCharacter::trivial(1);
    }
    let m = p.pow(c);
    let order = m / p * (p - 1);
    let k = rng.gen_range(0..order) as u32;
    DirichletCharacter::from_generator(m, order, k).expect("cyclic unit group")
}

/// Random `P`-ordinary Satake data for an odd prime `p`: valuations on the
/// Hodge polygon perturbed by moving up to one unit of valuation from the
/// first to the second element of a block, times roots of unity and `p`-adic
/// unit rationals; characters `ε_i` random of conductor dividing `p^{max_c}`.
pub fn random_ordinary<R: Rng>(rng: &mut R, p: u64, parts: &[usize], max_c: u32) -> SatakeData {
    let parabolic = PartitionParabolic::new(parts.to_vec()).expect("valid parts");
    let n = parabolic.n as i64;
    let d = parabolic.d();
    let mut t = Vec::with_capacity(d);
    let mut cur = n + 1 + rng.gen_range(0..3);
    for _ in 0..d {
        t.push(cur);
        cur += rng.gen_range(0..3);
    }
    t.reverse();
    let eps: Vec<DirichletCharacter> = (0..d)
        .map(|_| {
            let c = rng.gen_range(0..=max_c);
            random_p_character(rng, p, c)
        })
        .collect();
    let mut alphas = Vec::with_capacity(parabolic.n);
    for i in 0..d {
        let prev = parabolic.cumulative(i) as i64;
        let ni = parabolic.parts[i];
        // Hodge vertices: v_r = −(t_i − N_{i−1} − r); doubled.
        let mut twice: Vec<i64> = (1..=ni as i64).map(|r| -2 * (t[i] - prev - r)).collect();
        if ni >= 2 {
            let delta = rng.gen_range(0..=2);
            twice[0] += delta;
            twice[1] -= delta;
            twice.sort();
        }
        for tv in twice {
            let unit_num = loop {
                let x: i64 = rng.gen_range(1..7);
                if x as u64 % p != 0 {
                    break x;
                }
            };
            let unit_den = loop {
                let x: i64 = rng.gen_range(1..5);
                if x as u64 % p != 0 {
                    break x;
                }
            };
            let root = CycRational::zeta(4, rng.gen_range(0..4));
            let value = &(&p_pow_half(p, tv) * &root) * &cyc(rat(unit_num, unit_den));
            alphas.push(Alpha { value, valuation: rat(tv, 2) });
        }
    }
    let phi_root = CycRational::zeta(3, rng.gen_range(0..3));
    SatakeData {
        weight: ArithmeticWeight { parabolic, t, eps, k: 0, chi: None },
        p,
        alphas,
        phi: TameCharacter { character: None, phi_p_at_p: phi_root },
        monodromy: false,
    }
}

/// Simple Satake data with one block per part, integer valuations and `φ_p(p) = 1`
/// (used for fixtures).
pub fn simple_data(p: u64, parts: &[usize], t: &[i64], alphas: &[(i64, i64, i64)]) -> SatakeData {
    let parabolic = PartitionParabolic::new(parts.to_vec()).expect("valid parts");
    let d = parabolic.d();
    let alphas = alphas
        .iter()
        .map(|&(e, num, den)| Alpha { value: &p_pow(p, e) * &cyc(rat(num, den)), valuation: BigRational::from_integer(e.into()) })
        .collect();
    SatakeData {
        weight: ArithmeticWeight {
            parabolic,
            t: t.to_vec(),
            eps: vec![DirichletCharacter::trivial(1); d],
            k: 0,
            chi: None,
        },
        p,
        alphas,
        phi: TameCharacter { character: None, phi_p_at_p: CycRational::one() },
        monodromy: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(a: i64, b: i64) -> CycRational {
        CycRational::from_frac(a, b)
    }

    fn with_vals(parts: &[usize], t: &[i64], twice_vals: &[i64]) -> SatakeData {
        let mut d = simple_data(3, parts, t, &vec![(0, 1, 1); twice_vals.len()]);
        for (a, &v) in d.alphas.iter_mut().zip(twice_vals) {
            a.valuation = rat(v, 2);
            a.value = p_pow_half(3, v);
        }
        d
    }

    #[test]
    fn sqrt_p_squares_to_p() {
        for p in [2u64, 3, 5, 7, 11, 13] {
            let r = sqrt_p(p);
            assert_eq!(&r * &r, CycRational::from_int(p as i64), "p = {p}");
            assert_eq!(p_pow_half(p, -3).pow(2), p_pow(p, -3));
        }
    }

    #[test]
    fn newton_hodge_examples() {
        assert!(is_p_ordinary(&with_vals(&[1], &[2], &[-2])));
        assert!(!is_p_ordinary(&with_vals(&[1], &[2], &[-4])));
        // Block equalities: −1·(4 − 1) = −3 and −1·(3 − 2) = −1.
        assert!(is_p_ordinary(&with_vals(&[1, 1], &[4, 3], &[-6, -2])));
        assert!(!is_p_ordinary(&with_vals(&[1, 1], &[4, 3], &[-6, -4])));
        // Inequality chain inside a block of size 2, t = 5: bound −(5−1) = −4 at r = 1,
        // block sum −2(5 − 3/2) = −7.
        assert!(is_p_ordinary(&with_vals(&[2], &[5], &[-8, -6])));
        assert!(is_p_ordinary(&with_vals(&[2], &[5], &[-7, -7])));
        assert!(!is_p_ordinary(&with_vals(&[2], &[5], &[-9, -5])));
    }

    /// Hand-coded oracle for the inequalities of a single block of size ≤ 2.
    fn ordinary_oracle(t: i64, prev: i64, twice_vals: &[i64]) -> bool {
        match twice_vals {
            [v] => *v == -2 * (t - prev - 1),
            [v1, v2] => *v1 >= -2 * (t - prev - 1) && v1 + v2 == -(2 * (2 * t - 2 * prev - 3)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn newton_hodge_matches_oracle() {
        for t in 3..7 {
            for v1 in -16..0 {
                for v2 in -16..0 {
                    let d = with_vals(&[2], &[t], &[v1, v2]);
                    assert_eq!(is_p_ordinary(&d), ordinary_oracle(t, 0, &[v1, v2]), "t={t} v=({v1},{v2})");
                }
            }
        }
    }

    #[test]
    fn eigenvalue_examples() {
        let (a1, a2) = (c(2, 3), c(5, 7));
        let mut d = simple_data(3, &[1], &[4], &[(0, 2, 3)]);
        assert_eq!(up_eigenvalues(&d)[0].value, &p_pow(3, 3) * &a1);
        d = simple_data(3, &[2], &[4], &[(0, 2, 3), (0, 5, 7)]);
        let e = up_eigenvalues(&d);
        assert_eq!(e[1].value, &p_pow(3, 5) * &(&a1 * &a2));
        assert_eq!(e[0].value, &p_pow(3, 3) * &(&a1 + &a2));
        d = simple_data(3, &[1, 1], &[5, 4], &[(0, 2, 3), (0, 5, 7)]);
        let e = up_eigenvalues(&d);
        assert_eq!(e[0].value, &p_pow(3, 4) * &a1);
        assert_eq!(e[1].value, &(&p_pow(3, 4) * &a1) * &(&p_pow(3, 2) * &a2));
    }

    #[test]
    fn elementary_symmetric_oracle() {
        let xs: Vec<CycRational> = [2, 3, 5, 7].iter().map(|&x| CycRational::from_int(x)).collect();
        // Brute force over subsets.
        for r in 0..=4 {
            let mut total = 0i64;
            for mask in 0u32..16 {
                if mask.count_ones() as usize == r {
                    total += (0..4).filter(|b| mask >> b & 1 == 1).map(|b| [2, 3, 5, 7][b]).product::<i64>();
                }
            }
            assert_eq!(elementary_symmetric(&xs, r), CycRational::from_int(total));
        }
    }

    #[test]
    fn gamma_examples() {
        let triv = DirichletCharacter::trivial(1);
        let d = simple_data(3, &[1], &[2], &[(-1, 1, 1)]);
        assert!(gamma_p(0, 0, &d, &triv).unwrap().is_zero());
        let d = simple_data(3, &[1], &[2], &[(0, 1, 1)]);
        assert!(gamma_p(1, 0, &d, &triv).unwrap().is_zero());
        // Ramified, c = 1.
        let chi = DirichletCharacter::legendre(5).unwrap();
        let d = simple_data(5, &[1], &[2], &[(-1, 2, 1)]);
        let g = gauss_sum(&chi).unwrap();
        let want = &g * &(&c(1, 2) * &p_pow(5, 1 + 2 - 1));
        assert_eq!(gamma_p(2, 0, &d, &chi).unwrap(), want);
        // Pole: φα p^{−s} = 1.
        let d = simple_data(3, &[1], &[2], &[(1, 1, 1)]);
        assert!(matches!(gamma_p(1, 0, &d, &triv), Err(EulerError::PoleAtS(_))));
    }

    #[test]
    fn gamma_ratio_identity() {
        let triv = DirichletCharacter::trivial(1);
        let d = simple_data(5, &[2], &[5], &[(-3, 2, 3), (-4, 1, 7)]);
        for s in -3..4 {
            let g = gamma_p(s, 0, &d, &triv).unwrap();
            let mut num = CycRational::one();
            let mut den = CycRational::one();
            for a in &d.alphas {
                num = &num * &(&CycRational::one() - &(&a.value.inv().unwrap() * &p_pow(5, s - 1)));
                den = &den * &(&CycRational::one() - &(&a.value * &p_pow(5, -s)));
            }
            assert_eq!(&g * &den, num);
        }
    }

    #[test]
    fn ep_examples() {
        let triv = DirichletCharacter::trivial(1);
        let d = simple_data(3, &[1], &[2], &[(-1, 1, 1)]);
        assert!(e_p(0, &d, &triv).unwrap().is_zero());
        // Fully ramified blocks: pure Gauss sums and monomials.
        let chi = DirichletCharacter::legendre(5).unwrap();
        let d = simple_data(5, &[1, 1], &[4, 3], &[(-3, 1, 1), (-1, 2, 1)]);
        let v = e_p(0, &d, &chi).unwrap();
        let g = gauss_sum(&chi).unwrap();
        let want = &(&g * &g) * &(&p_pow(5, 3 - 1) * &(&c(1, 2) * &p_pow(5, 1 - 1)));
        assert_eq!(v, want);
    }

    #[test]
    fn ep_matches_l_factor_ratio() {
        // With χ and all ε trivial, E_p(s) = Π_j L(s, α_j)/L(1 − s, α_j^{−1}) in terms of
        // local factors L(s, x) = (1 − x p^{−s})^{−1}.
        let triv = DirichletCharacter::trivial(1);
        let d = simple_data(3, &[1, 2], &[6, 5], &[(-4, 2, 1), (-2, 1, 2), (-3, 4, 5)]);
        let lf = |s: i64, x: &CycRational| (&CycRational::one() - &(x * &p_pow(3, -s))).inv().unwrap();
        for s in -2..3 {
            let mut want = CycRational::one();
            for a in &d.alphas {
                want = &want * &(&lf(s, &a.value) * &lf(1 - s, &a.value.inv().unwrap()).inv().unwrap());
            }
            assert_eq!(e_p(s, &d, &triv).unwrap(), want);
        }
    }

    #[test]
    fn improved_examples() {
        let d = simple_data(3, &[1], &[2], &[(-1, 1, 1)]);
        let l = local_l_last_block(0, &d).unwrap();
        assert_eq!(e_imp(0, &d).unwrap(), l);
        assert_eq!(l, c(3, 2));
        assert_eq!(a_p(&d).unwrap(), CycRational::zero());
    }

    #[test]
    fn a_p_forms_agree() {
        let d = simple_data(3, &[1, 2], &[6, 5], &[(-4, 2, 1), (-2, 1, 2), (-3, 4, 5)]);
        assert_eq!(a_p_product(&d).unwrap(), a_p_expansion(&d).unwrap());
        let d = simple_data(5, &[1], &[3], &[(-2, 3, 2)]);
        let want = &CycRational::one() - &(&c(2, 3) * &p_pow(5, 2 + 1 - 3));
        assert_eq!(a_p(&d).unwrap(), want);
    }

    #[test]
    fn factorization_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..40 {
            let parts: &[usize] = [&[1usize][..], &[2], &[1, 1], &[1, 2], &[2, 1], &[1, 1, 1]][trial % 6];
            let p = [3u64, 5][trial % 2];
            let d = random_ordinary(&mut rng, p, parts, 1);
            assert!(is_p_ordinary(&d));
            for e in up_eigenvalues(&d).iter().zip(1..) {
                if d.weight.parabolic.parts.iter().scan(0, |s, &x| { *s += x; Some(*s) }).any(|ni| ni == e.1) {
                    assert_eq!(e.0.valuation, Some(BigRational::zero()));
                }
            }
            let n = d.n() as i64;
            let s = n + 1 - d.weight.t.last().unwrap();
            let eps_d = d.weight.eps.last().unwrap().clone();
            let lhs = e_p(s, &d, &eps_d).unwrap();
            let rhs = &a_p(&d).unwrap() * &e_imp(s, &d).unwrap();
            assert_eq!(lhs, rhs, "trial {trial}");
        }
    }

    #[test]
    fn non_ordinary_has_nonunit_eigenvalue() {
        let d = with_vals(&[1, 1], &[4, 3], &[-6, -4]);
        let e = up_eigenvalues(&d);
        assert_ne!(e[1].valuation, Some(BigRational::zero()));
        let d = with_vals(&[1, 1], &[4, 3], &[-6, -2]);
        let e = up_eigenvalues(&d);
        assert_eq!(e[0].valuation, Some(BigRational::zero()));
        assert_eq!(e[1].valuation, Some(BigRational::zero()));
    }

    #[test]
    fn d_factor_examples() {
        let triv = DirichletCharacter::trivial(1);
        assert_eq!(d_factor(&rat(1, 2), &triv, 1, &[2]).unwrap(), c(16, 9));
        assert!(matches!(d_factor(&rat(-1, 2), &triv, 1, &[2]), Err(EulerError::PoleAtS(_))));
        let xi = DirichletCharacter::legendre(3).unwrap();
        assert_eq!(d_factor(&rat(1, 2), &xi, 2, &[3]).unwrap(), CycRational::one());
        let s = rat(3, 2);
        let both = d_factor(&s, &xi, 2, &[2, 5]).unwrap();
        let split = &d_factor(&s, &xi, 2, &[2]).unwrap() * &d_factor(&s, &xi, 2, &[5]).unwrap();
        assert_eq!(both, split);
        assert!(d_factor(&rat(1, 3), &xi, 1, &[2]).is_err());
    }

    #[test]
    fn classification() {
        let mut d = simple_data(3, &[1, 1], &[5, 3], &[(-4, 1, 1), (-1, 1, 1)]);
        assert_eq!(classify_trivial_zero(&d), TrivialZero::Crystalline);
        d.monodromy = true;
        assert_eq!(classify_trivial_zero(&d), TrivialZero::SemiStable);
        assert!(a_p(&d).unwrap().is_zero());
        assert!(!e_imp(0, &d).unwrap().is_zero());
        d.phi.phi_p_at_p = CycRational::zeta(3, 1);
        assert_eq!(classify_trivial_zero(&d), TrivialZero::None);
    }

    #[test]
    fn json_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = random_ordinary(&mut rng, 5, &[1, 2], 1);
        let s = serde_json::to_string(&d).unwrap();
        let back: SatakeData = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
