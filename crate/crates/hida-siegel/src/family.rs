//! Finite-precision p-adic numbers, truncated multivariable power series over
//! them, the p-adic logarithm, the ℓ-invariant as a logarithmic derivative of
//! an eigenvalue ratio, and the chain-rule identity behind the derivative of a
//! p-adic L-function at a trivial zero.
//!
//! A [`PadicNumber`] is `p^{v} · u` with `v ∈ ½Z` and `u` a unit known modulo
//! `p^{prec}`, or a zero known modulo `p^{a}`. Precision is tracked through
//! every operation; nothing is silently rounded.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intlin::is_prime;

/// Errors from p-adic arithmetic and the family identities.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FamilyError {
    #[error("not a one-unit: constant term {0}")]
    NotOneUnit(String),
    #[error("center is not a zero of 1 − u: u(center) = {0}")]
    CenterNotZero(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("cannot add values with valuations in different cosets of Z: {0} and {1}")]
    MixedValuations(String, String),
    #[error("division by a p-adic zero")]
    DivisionByZero,
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Doubled absolute precision used for exact zeros.
const EXACT: i64 = i64::MAX / 4;

/// A p-adic number `p^{tv/2} · unit` with the unit known modulo `p^{prec}`.
/// A zero has `unit = 0`, `prec = 0` and `tv` equal to twice its absolute
/// precision (`EXACT` for an exact zero).
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PadicNumber {
    p: u64,
    tv: i64,
    unit: u64,
    prec: u32,
}

fn pow_u64(p: u64, e: u32) -> u64 {
    p.checked_pow(e).expect("p-adic precision too large for 64-bit residues")
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(m)) as u64
}

fn inv_mod(a: u64, m: u64) -> u64 {
    let (g, x, _) = crate::intlin::ext_gcd(i128::from(a), i128::from(m));
    assert_eq!(g.abs(), 1, "not a unit");
    (x.rem_euclid(i128::from(m))) as u64
}

/// Largest precision whose residues fit comfortably in 64 bits.
pub fn max_precision(p: u64) -> u32 {
    let mut e = 0;
    let mut acc: u128 = 1;
    while acc * u128::from(p) < (1u128 << 62) {
        acc *= u128::from(p);
        e += 1;
    }
    e
}

impl PadicNumber {
    /// Exact zero.
    pub fn zero(p: u64) -> Self {
        Self { p, tv: EXACT, unit: 0, prec: 0 }
    }

    /// Zero known modulo `p^{a}` (`a` in half units: `twice_abs = 2a`).
    pub fn zero_mod(p: u64, twice_abs: i64) -> Self {
        Self { p, tv: twice_abs, unit: 0, prec: 0 }
    }

    /// `1` to relative precision `m`.
    pub fn one(p: u64, m: u32) -> Self {
        Self::from_int(p, 1, m)
    }

    /// An integer to relative precision `m`.
    pub fn from_int(p: u64, x: i64, m: u32) -> Self {
        Self::from_bigint(p, &BigInt::from(x), m)
    }

    fn from_bigint(p: u64, x: &BigInt, m: u32) -> Self {
        if x.is_zero() {
            return Self::zero(p);
        }
        let pb = BigInt::from(p);
        let mut v = 0i64;
        let mut y = x.clone();
        while (&y % &pb).is_zero() {
            y /= &pb;
            v += 1;
        }
        let md = pow_u64(p, m);
        let unit = y.mod_floor(&BigInt::from(md)).to_u64().unwrap();
        Self { p, tv: 2 * v, unit, prec: m }.normalized()
    }

    /// A rational to relative precision `m`.
    pub fn from_rational(p: u64, r: &BigRational, m: u32) -> Self {
        if r.is_zero() {
            return Self::zero(p);
        }
        let n = Self::from_bigint(p, r.numer(), m);
        let d = Self::from_bigint(p, r.denom(), m);
        n.div(&d).expect("nonzero denominator")
    }

    /// `p^{tv/2} · unit` with the unit modulo `p^m`.
    pub fn from_parts(p: u64, twice_val: i64, unit: u64, m: u32) -> Result<Self, FamilyError> {
        if unit % p == 0 {
            return Err(FamilyError::Invalid(format!("unit {unit} is divisible by {p}")));
        }
        let md = pow_u64(p, m);
        Ok(Self { p, tv: twice_val, unit: unit % md, prec: m })
    }

    fn normalized(mut self) -> Self {
        if self.prec == 0 {
            return Self::zero_mod(self.p, self.tv);
        }
        while self.unit % self.p == 0 {
            if self.prec == 0 || self.unit == 0 {
                return Self::zero_mod(self.p, self.tv + 2 * i64::from(self.prec));
            }
            self.unit /= self.p;
            self.tv += 2;
            self.prec -= 1;
            if self.prec == 0 {
                return Self::zero_mod(self.p, self.tv);
            }
        }
        self
    }

    /// The prime.
    pub fn prime(&self) -> u64 {
        self.p
    }

    /// True for zeros (exact or to finite precision).
    pub fn is_zero(&self) -> bool {
        self.unit == 0
    }

    /// True only for the exact zero.
    pub fn is_exact_zero(&self) -> bool {
        self.unit == 0 && self.tv == EXACT
    }

    /// Twice the valuation (for zeros, twice the absolute precision).
    pub fn twice_valuation(&self) -> i64 {
        self.tv
    }

    /// The valuation as a rational (`None` for zeros).
    pub fn valuation(&self) -> Option<BigRational> {
        (!self.is_zero()).then(|| BigRational::new(self.tv.into(), 2.into()))
    }

    /// Unit part residue.
    pub fn unit(&self) -> u64 {
        self.unit
    }

    /// Relative precision.
    pub fn relative_precision(&self) -> u32 {
        self.prec
    }

    /// Twice the absolute precision (`EXACT`-like for exact zeros).
    pub fn twice_abs_precision(&self) -> i64 {
        if self.is_zero() {
            self.tv
        } else {
            self.tv + 2 * i64::from(self.prec)
        }
    }

    /// Reduce to absolute precision `≤ twice_abs / 2`.
    pub fn cap(&self, twice_abs: i64) -> Self {
        if self.twice_abs_precision() <= twice_abs {
            return *self;
        }
        if self.is_zero() || twice_abs <= self.tv {
            return Self::zero_mod(self.p, twice_abs);
        }
        let prec = ((twice_abs - self.tv) / 2) as u32;
        if prec == 0 {
            return Self::zero_mod(self.p, twice_abs);
        }
        Self { unit: self.unit % pow_u64(self.p, prec), prec, ..*self }
    }

    /// Sum (errors when the valuations lie in different cosets of `Z`).
    pub fn add(&self, other: &Self) -> Result<Self, FamilyError> {
        assert_eq!(self.p, other.p);
        let abs = self.twice_abs_precision().min(other.twice_abs_precision());
        if self.is_zero() {
            return Ok(other.cap(abs));
        }
        if other.is_zero() {
            return Ok(self.cap(abs));
        }
        if (self.tv - other.tv).rem_euclid(2) != 0 {
            return Err(FamilyError::MixedValuations(self.to_string(), other.to_string()));
        }
        let v = self.tv.min(other.tv);
        let rel = ((abs - v) / 2) as u32;
        if rel == 0 {
            return Ok(Self::zero_mod(self.p, abs));
        }
        let md = pow_u64(self.p, rel);
        let shift = |x: &Self| {
            let e = ((x.tv - v) / 2) as u32;
            if e >= rel {
                0
            } else {
                mulmod(x.unit % md, pow_u64(x.p, e), md)
            }
        };
        let s = (shift(self) + shift(other)) % md;
        if s == 0 {
            return Ok(Self::zero_mod(self.p, abs));
        }
        Ok(Self { p: self.p, tv: v, unit: s, prec: rel }.normalized())
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        let md = pow_u64(self.p, self.prec);
        Self { unit: (md - self.unit) % md, ..*self }
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Result<Self, FamilyError> {
        self.add(&other.neg())
    }

    /// Product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p);
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Self::zero_mod(self.p, self.tv.saturating_add(other.tv).min(EXACT)),
            (true, false) => Self::zero_mod(self.p, if self.tv == EXACT { EXACT } else { self.tv + other.tv }),
            (false, true) => Self::zero_mod(self.p, if other.tv == EXACT { EXACT } else { self.tv + other.tv }),
            (false, false) => {
                let prec = self.prec.min(other.prec);
                let md = pow_u64(self.p, prec);
                Self { p: self.p, tv: self.tv + other.tv, unit: mulmod(self.unit % md, other.unit % md, md), prec }
            }
        }
    }

    /// Inverse.
    pub fn inv(&self) -> Result<Self, FamilyError> {
        if self.is_zero() {
            return Err(FamilyError::DivisionByZero);
        }
        let md = pow_u64(self.p, self.prec);
        Ok(Self { tv: -self.tv, unit: inv_mod(self.unit, md), ..*self })
    }

    /// Quotient.
    pub fn div(&self, other: &Self) -> Result<Self, FamilyError> {
        Ok(self.mul(&other.inv()?))
    }

    /// Multiply by an integer (exact).
    pub fn scale_int(&self, k: i64) -> Self {
        self.mul(&Self::from_int(self.p, k, max_precision(self.p)))
    }

    /// Agreement to the smaller of the two absolute precisions.
    pub fn approx_eq(&self, other: &Self) -> bool {
        match self.sub(other) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }

    /// The value as a rational number congruent to it (exact when the unit
    /// part is exact to its precision): `p^{v} · unit` (integral valuations only).
    pub fn to_rational(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        if self.tv % 2 != 0 {
            return None;
        }
        let v = self.tv / 2;
        let pb = BigRational::from_integer(BigInt::from(self.p));
        let pw = if v >= 0 { num_traits::pow(pb, v as usize) } else { BigRational::one() / num_traits::pow(pb, (-v) as usize) };
        Some(pw * BigRational::from_integer(BigInt::from(self.unit)))
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact_zero() {
            return write!(f, "0");
        }
        let half = |tv: i64| if tv % 2 == 0 { format!("{}", tv / 2) } else { format!("{}/2", tv) };
        if self.is_zero() {
            return write!(f, "O({}^{})", self.p, half(self.tv));
        }
        write!(f, "{}^{}·{} + O({}^{})", self.p, half(self.tv), self.unit, self.p, half(self.twice_abs_precision()))
    }
}

impl fmt::Debug for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
struct PadicJson {
    /// Valuation (for zeros: absolute precision, or "inf" for an exact zero).
    v: String,
    u: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prec: Option<u32>,
}

fn padic_to_json(x: &PadicNumber) -> PadicJson {
    let v = if x.is_exact_zero() {
        "inf".to_string()
    } else if x.tv % 2 == 0 {
        (x.tv / 2).to_string()
    } else {
        format!("{}/2", x.tv)
    };
    PadicJson { v, u: x.unit.to_string(), prec: Some(x.prec) }
}

fn padic_from_json(p: u64, m: u32, j: &PadicJson) -> Result<PadicNumber, FamilyError> {
    let unit: u64 = j.u.trim().parse().map_err(|_| FamilyError::Invalid(format!("bad unit {}", j.u)))?;
    if j.v.trim() == "inf" {
        return Ok(PadicNumber::zero(p));
    }
    let v = crate::lseries::parse_rational(&j.v).map_err(FamilyError::Invalid)?;
    let twice = v * BigRational::from_integer(2.into());
    if !twice.is_integer() {
        return Err(FamilyError::Invalid(format!("valuation {} has denominator > 2", j.v)));
    }
    let tv = twice.to_integer().to_i64().ok_or_else(|| FamilyError::Invalid("valuation too large".into()))?;
    if unit == 0 {
        return Ok(PadicNumber::zero_mod(p, tv));
    }
    PadicNumber::from_parts(p, tv, unit, j.prec.unwrap_or(m))
}

/// A truncated power series in named variables, total degree `≤ D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicSeries {
    pub p: u64,
    pub m: u32,
    pub vars: Vec<String>,
    pub degree: u32,
    coeffs: BTreeMap<Vec<u32>, PadicNumber>,
}

impl PadicSeries {
    /// The zero series.
    pub fn zero(p: u64, m: u32, vars: &[&str], degree: u32) -> Result<Self, FamilyError> {
        if !is_prime(p) {
            return Err(FamilyError::Invalid(format!("{p} is not prime")));
        }
        if m == 0 || m > max_precision(p) {
            return Err(FamilyError::Invalid(format!("precision {m} out of range 1..={}", max_precision(p))));
        }
        Ok(Self { p, m, vars: vars.iter().map(|s| s.to_string()).collect(), degree, coeffs: BTreeMap::new() })
    }

    /// Constant series.
    pub fn constant(&self, c: PadicNumber) -> Self {
        let mut s = self.empty_like();
        s.set(vec![0; self.vars.len()], c);
        s
    }

    fn empty_like(&self) -> Self {
        Self { coeffs: BTreeMap::new(), ..self.clone() }
    }

    /// Build from integer coefficients `(exponents, value)`.
    pub fn from_int_terms(
        p: u64,
        m: u32,
        vars: &[&str],
        degree: u32,
        terms: &[(Vec<u32>, i64)],
    ) -> Result<Self, FamilyError> {
        let mut s = Self::zero(p, m, vars, degree)?;
        for (e, c) in terms {
            s.add_term(e.clone(), PadicNumber::from_int(p, *c, m))?;
        }
        Ok(s)
    }

    /// Number of variables.
    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    /// Index of a named variable.
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Coefficient at an exponent vector (exact zero when absent).
    pub fn coeff(&self, e: &[u32]) -> PadicNumber {
        self.coeffs.get(e).copied().unwrap_or_else(|| PadicNumber::zero(self.p))
    }

    /// Constant term.
    pub fn constant_term(&self) -> PadicNumber {
        self.coeff(&vec![0; self.nvars()])
    }

    /// Stored terms.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &PadicNumber)> {
        self.coeffs.iter()
    }

    /// Set a coefficient (dropped beyond the degree bound; exact zeros removed).
    pub fn set(&mut self, e: Vec<u32>, c: PadicNumber) {
        assert_eq!(e.len(), self.nvars());
        if e.iter().sum::<u32>() > self.degree {
            return;
        }
        if c.is_exact_zero() {
            self.coeffs.remove(&e);
        } else {
            self.coeffs.insert(e, c);
        }
    }

    /// Add to a coefficient.
    pub fn add_term(&mut self, e: Vec<u32>, c: PadicNumber) -> Result<(), FamilyError> {
        if e.iter().sum::<u32>() > self.degree {
            return Ok(());
        }
        let cur = self.coeff(&e);
        let s = cur.add(&c)?;
        self.set(e, s);
        Ok(())
    }

    /// Sum.
    pub fn add(&self, other: &Self) -> Result<Self, FamilyError> {
        let mut out = self.with_degree(self.degree.min(other.degree));
        for (e, c) in &other.coeffs {
            out.add_term(e.clone(), *c)?;
        }
        Ok(out)
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Result<Self, FamilyError> {
        self.add(&other.neg())
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        let mut out = self.empty_like();
        for (e, c) in &self.coeffs {
            out.set(e.clone(), c.neg());
        }
        out
    }

    /// Scalar multiple.
    pub fn scale(&self, c: &PadicNumber) -> Self {
        let mut out = self.empty_like();
        for (e, x) in &self.coeffs {
            out.set(e.clone(), x.mul(c));
        }
        out
    }

    fn with_degree(&self, d: u32) -> Self {
        let mut out = self.empty_like();
        out.degree = d;
        for (e, c) in &self.coeffs {
            out.set(e.clone(), *c);
        }
        out
    }

    /// Truncated product.
    pub fn mul(&self, other: &Self) -> Result<Self, FamilyError> {
        let mut out = self.with_degree(self.degree.min(other.degree));
        out.coeffs.clear();
        for (e1, c1) in &self.coeffs {
            for (e2, c2) in &other.coeffs {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                if e.iter().sum::<u32>() <= out.degree {
                    out.add_term(e, c1.mul(c2))?;
                }
            }
        }
        Ok(out)
    }

    /// `f^k`.
    pub fn pow(&self, k: u32) -> Result<Self, FamilyError> {
        let mut acc = self.constant(PadicNumber::one(self.p, max_precision(self.p)));
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Multiplicative inverse (constant term must be nonzero).
    pub fn inv(&self) -> Result<Self, FamilyError> {
        let c0 = self.constant_term();
        let c0_inv = c0.inv()?;
        // f = c0(1 + w), 1/f = c0^{-1} Σ (−w)^k.
        let mut w = self.scale(&c0_inv);
        w.set(vec![0; self.nvars()], PadicNumber::zero(self.p));
        let minus_w = w.neg();
        let mut term = self.constant(PadicNumber::one(self.p, max_precision(self.p)));
        let mut acc = term.clone();
        for _ in 0..self.degree {
            term = term.mul(&minus_w)?;
            acc = acc.add(&term)?;
        }
        Ok(acc.scale(&c0_inv))
    }

    /// Formal partial derivative (degree bound drops by one).
    pub fn ddt(&self, var: usize) -> Self {
        let mut out = self.empty_like();
        out.degree = self.degree.saturating_sub(1);
        for (e, c) in &self.coeffs {
            if e[var] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            out.set(e2, c.scale_int(i64::from(e[var])));
        }
        out
    }

    /// Substitute `T_j ↦ T_j + c_j`. Coefficients of total degree `i` are
    /// capped at the absolute precision `v_min + (D+1−i)·v(c)`, bounding the
    /// contribution of the truncated tail (assumed to have valuations `≥ v_min`,
    /// the least valuation among the given coefficients).
    pub fn recenter(&self, center: &[PadicNumber]) -> Result<Self, FamilyError> {
        assert_eq!(center.len(), self.nvars());
        let mut out = self.empty_like();
        for (e, c) in &self.coeffs {
            // Π_j (T_j + c_j)^{e_j} expanded.
            let mut partial: Vec<(Vec<u32>, PadicNumber)> = vec![(vec![0; self.nvars()], *c)];
            for (j, &ej) in e.iter().enumerate() {
                let mut next = Vec::new();
                for (mono, coef) in &partial {
                    let mut binom: i64 = 1;
                    for a in 0..=ej {
                        // choose T_j^a from (T_j + c_j)^{e_j}
                        let mut cpow = PadicNumber::one(self.p, max_precision(self.p));
                        for _ in 0..(ej - a) {
                            cpow = cpow.mul(&center[j]);
                        }
                        let mut m2 = mono.clone();
                        m2[j] = a;
                        next.push((m2, coef.mul(&cpow).scale_int(binom)));
                        binom = binom * i64::from(ej - a) / i64::from(a + 1);
                    }
                }
                partial = next;
            }
            for (mono, coef) in partial {
                out.add_term(mono, coef)?;
            }
        }
        let vc = center.iter().filter(|c| !c.is_exact_zero()).map(|c| c.tv).min();
        if let Some(vc) = vc {
            let vmin = self.coeffs.values().map(|c| c.tv).min().unwrap_or(0).min(0);
            let mut capped = out.empty_like();
            // All monomials of degree ≤ D, so that zero coefficients carry their precision too.
            for e in monomials(self.nvars(), self.degree) {
                let i = i64::from(e.iter().sum::<u32>());
                let cap = vmin + (i64::from(self.degree) + 1 - i) * vc;
                let val = out.coeff(&e).cap(cap);
                capped.set(e, val);
            }
            out = capped;
        }
        Ok(out)
    }

    /// Value at the origin after recentring at `center`.
    pub fn eval(&self, center: &[PadicNumber]) -> Result<PadicNumber, FamilyError> {
        Ok(self.recenter(center)?.constant_term())
    }

    /// Exponent vector of the single variable `var`.
    pub fn unit_exponent(&self, var: usize) -> Vec<u32> {
        let mut e = vec![0; self.nvars()];
        e[var] = 1;
        e
    }

    /// Agreement coefficientwise within precision.
    pub fn approx_eq(&self, other: &Self) -> bool {
        let d = self.degree.min(other.degree);
        monomials(self.nvars(), d).into_iter().all(|e| self.coeff(&e).approx_eq(&other.coeff(&e)))
    }
}

/// All exponent vectors in `k` variables of total degree `≤ d`.
pub fn monomials(k: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; k];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur[i] = a;
            rec(i + 1, left - a, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, d, &mut cur, &mut out);
    out
}

/// `log_p(x)` of a scalar one-unit `x ≡ 1 mod p`.
pub fn logp_scalar(x: &PadicNumber) -> Result<PadicNumber, FamilyError> {
    let p = x.p;
    let one = PadicNumber::one(p, max_precision(p));
    let y = x.sub(&one)?;
    if !y.is_zero() && y.tv < 2 {
        return Err(FamilyError::NotOneUnit(x.to_string()));
    }
    if y.is_zero() {
        // log(1 + O(p^a)) = O(p^a).
        return Ok(if y.is_exact_zero() { PadicNumber::zero(p) } else { PadicNumber::zero_mod(p, y.tv) });
    }
    let target = y.twice_abs_precision();
    // Term k has doubled valuation ≥ g(k) = k·v(y) − 2⌊log_p k⌋, and g is
    // nondecreasing on integers since v(y) ≥ 2 (doubled); stop at the first k
    // with g(k) ≥ target.
    let ilog = |mut j: i64| {
        let mut e = 0;
        while j >= p as i64 {
            j /= p as i64;
            e += 1;
        }
        e
    };
    let mut acc = PadicNumber::zero(p);
    let mut pw = one;
    let mut k: i64 = 1;
    while k * y.tv - 2 * ilog(k) < target {
        pw = pw.mul(&y);
        let term = pw.div(&PadicNumber::from_int(p, k, max_precision(p)))?;
        let term = if k % 2 == 0 { term.neg() } else { term };
        acc = acc.add(&term)?;
        k += 1;
    }
    Ok(acc.cap(target))
}

/// `log_p(u)` of a one-unit series: `log_p(u_0) + Σ_{k=1}^{D} (−1)^{k+1} w^k / k`
/// with `u = u_0(1 + w)`.
pub fn logp(u: &PadicSeries) -> Result<PadicSeries, FamilyError> {
    let u0 = u.constant_term();
    let log0 = logp_scalar(&u0)?;
    let mut w = u.scale(&u0.inv()?);
    w.set(vec![0; u.nvars()], PadicNumber::zero(u.p));
    let mut acc = u.constant(log0);
    let mut pw = u.constant(PadicNumber::one(u.p, max_precision(u.p)));
    for k in 1..=i64::from(u.degree) {
        pw = pw.mul(&w)?;
        let inv_k = PadicNumber::from_int(u.p, k, max_precision(u.p)).inv()?;
        let sign = if k % 2 == 1 { inv_k } else { inv_k.neg() };
        acc = acc.add(&pw.scale(&sign))?;
    }
    Ok(acc)
}

/// `ddT` by variable index.
pub fn ddt(f: &PadicSeries, var: usize) -> PadicSeries {
    f.ddt(var)
}

/// `ℓ = −∂/∂T_var log_p(a_n / a_{n−1})` evaluated at `center`.
pub fn l_invariant(
    a_n: &PadicSeries,
    a_nm1: &PadicSeries,
    var: usize,
    center: &[PadicNumber],
) -> Result<PadicNumber, FamilyError> {
    let ratio = a_n.mul(&a_nm1.inv()?)?;
    let rc = ratio.recenter(center)?;
    let c0 = rc.constant_term();
    let one = PadicNumber::one(rc.p, rc.m);
    match c0.sub(&one) {
        Ok(d) if d.is_zero() || d.tv >= 2 => {}
        _ => return Err(FamilyError::NotOneUnit(c0.to_string())),
    }
    let lg = logp(&rc)?;
    let value = lg.coeff(&lg.unit_exponent(var)).neg();
    if value.is_zero() && !value.is_exact_zero() && value.tv <= 0 {
        return Err(FamilyError::PrecisionExhausted(format!("ℓ known only to {value}")));
    }
    Ok(value)
}

/// Both sides of `d/dT[(1−u)G](c) = −(d log_p u/dT)(c) · G(c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivativeCheck {
    pub lhs: PadicNumber,
    pub rhs: PadicNumber,
    pub equal: bool,
}

/// Evaluate both sides of the derivative identity at `center` (requires `u(center) = 1`).
pub fn derivative_identity(
    u: &PadicSeries,
    g: &PadicSeries,
    var: usize,
    center: &[PadicNumber],
) -> Result<DerivativeCheck, FamilyError> {
    let uc = u.recenter(center)?;
    let one = PadicNumber::one(u.p, u.m);
    let u_at = uc.constant_term();
    if !u_at.sub(&one)?.is_zero() {
        return Err(FamilyError::CenterNotZero(u_at.to_string()));
    }
    let e = uc.unit_exponent(var);
    // Left side: differentiate (1 − u)G and evaluate.
    let one_minus_u = u.constant(PadicNumber::one(u.p, max_precision(u.p))).sub(u)?;
    let prod = one_minus_u.mul(g)?;
    let lhs = prod.ddt(var).recenter(center)?.constant_term();
    // Right side: log-derivative of u times G, both at the center.
    let lg = logp(&uc)?;
    let dlog = lg.coeff(&e);
    let g_at = g.recenter(center)?.constant_term();
    let rhs = dlog.mul(&g_at).neg();
    let equal = lhs.approx_eq(&rhs);
    Ok(DerivativeCheck { lhs, rhs, equal })
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Vec<u32>,
    val: PadicJson,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    p: u64,
    #[serde(rename = "M")]
    m: u32,
    vars: Vec<String>,
    #[serde(rename = "D")]
    degree: u32,
    coeffs: Vec<TermJson>,
}

impl Serialize for PadicSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SeriesJson {
            p: self.p,
            m: self.m,
            vars: self.vars.clone(),
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|(e, c)| TermJson { exp: e.clone(), val: padic_to_json(c) }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PadicSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let j = SeriesJson::deserialize(d)?;
        let vars: Vec<&str> = j.vars.iter().map(String::as_str).collect();
        let mut s = PadicSeries::zero(j.p, j.m, &vars, j.degree).map_err(D::Error::custom)?;
        for t in j.coeffs {
            if t.exp.len() != s.nvars() {
                return Err(D::Error::custom("exponent length does not match the variables"));
            }
            let c = padic_from_json(j.p, j.m, &t.val).map_err(D::Error::custom)?;
            s.add_term(t.exp, c).map_err(D::Error::custom)?;
        }
        Ok(s)
    }
}

impl Serialize for PadicNumber {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Full {
            p: u64,
            #[serde(flatten)]
            val: PadicJson,
        }
        Full { p: self.p, val: padic_to_json(self) }.serialize(s)
    }
}

/// A pseudo-random series with integer coefficients in `[−30, 30)`; with
/// `one_unit` the constant term is `1 + p·x` for a small integer `x`.
pub fn random_int_series<R: Rng>(
    rng: &mut R,
    p: u64,
    m: u32,
    vars: &[&str],
    degree: u32,
    one_unit: bool,
) -> Result<PadicSeries, FamilyError> {
    let mut terms = Vec::new();
    for e in monomials(vars.len(), degree) {
        let mut c: i64 = rng.gen_range(-30..30);
        if one_unit && e.iter().all(|&x| x == 0) {
            c = 1 + p as i64 * rng.gen_range(-3..3);
        }
        terms.push((e, c));
    }
    PadicSeries::from_int_terms(p, m, vars, degree, &terms)
}

/// Parse a scalar p-adic number from `{"v": "a/b", "u": "…", "prec": M}`.
pub fn padic_from_value(p: u64, m: u32, v: &serde_json::Value) -> Result<PadicNumber, FamilyError> {
    let j: PadicJson = serde_json::from_value(v.clone()).map_err(|e| FamilyError::Invalid(e.to_string()))?;
    padic_from_json(p, m, &j)
}

/// The rational `x` reduced modulo `p^M` as a p-adic number — a convenience for
/// building centers such as `(1+p)^{k} − 1`.
pub fn padic_from_int_expr(p: u64, x: &BigInt, m: u32) -> PadicNumber {
    PadicNumber::from_bigint(p, x, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const P: u64 = 5;
    const M: u32 = 12;

    fn n(x: i64) -> PadicNumber {
        PadicNumber::from_int(P, x, M)
    }

    fn series(terms: &[(Vec<u32>, i64)], vars: &[&str], d: u32) -> PadicSeries {
        PadicSeries::from_int_terms(P, M, vars, d, terms).unwrap()
    }

    /// Rational oracle for log(1 + x) mod p^K: Σ_{k ≤ K'} (−1)^{k+1} x^k / k.
    fn log_oracle(x: i64, kmax: u32) -> BigRational {
        let mut acc = BigRational::zero();
        let xr = BigRational::from_integer(x.into());
        for k in 1..=kmax {
            let term = num_traits::pow(xr.clone(), k as usize) / BigRational::from_integer(k.into());
            if k % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }

    #[test]
    fn arithmetic_basics() {
        let a = n(50);
        assert_eq!(a.twice_valuation(), 4);
        assert_eq!(a.unit(), 2);
        let b = a.sub(&a).unwrap();
        assert!(b.is_zero() && !b.is_exact_zero());
        assert_eq!(b.twice_abs_precision(), 2 * (2 + i64::from(M)));
        let q = PadicNumber::from_rational(P, &BigRational::new(3.into(), 25.into()), M);
        assert_eq!(q.twice_valuation(), -4);
        assert!(q.mul(&n(25)).approx_eq(&n(3)));
        let half = PadicNumber::from_parts(P, 1, 1, M).unwrap();
        assert!(matches!(half.add(&n(1)), Err(FamilyError::MixedValuations(..))));
        assert!(half.mul(&half).approx_eq(&n(5)));
    }

    #[test]
    fn scalar_log_matches_rational_oracle() {
        for x in [5i64, 10, 25, -15, 125] {
            let got = logp_scalar(&n(1 + x)).unwrap();
            let want = PadicNumber::from_rational(P, &log_oracle(x, 60), max_precision(P));
            assert!(got.approx_eq(&want), "x = {x}: {got} vs {want}");
        }
        assert!(logp_scalar(&n(1)).unwrap().is_zero());
        assert!(matches!(logp_scalar(&n(2)), Err(FamilyError::NotOneUnit(_))));
    }

    #[test]
    fn series_log_examples() {
        let one = series(&[(vec![0], 1)], &["T"], 4);
        assert!(logp(&one).unwrap().terms().all(|(_, c)| c.is_zero()));
        let u = series(&[(vec![0], 1), (vec![1], 5)], &["T"], 4);
        let l = logp(&u).unwrap();
        let want = [0i64, 5, 0, 0, 0];
        assert!(l.coeff(&[1]).approx_eq(&n(want[1])));
        let c2 = PadicNumber::from_rational(P, &BigRational::new((-25).into(), 2.into()), M);
        assert!(l.coeff(&[2]).approx_eq(&c2));
        let c3 = PadicNumber::from_rational(P, &BigRational::new(125.into(), 3.into()), M);
        assert!(l.coeff(&[3]).approx_eq(&c3));
        assert!(matches!(logp(&series(&[(vec![0], 2)], &["T"], 2)), Err(FamilyError::NotOneUnit(_))));
    }

    #[test]
    fn derivative_examples() {
        let c = series(&[(vec![0], 7)], &["T"], 3);
        assert!(c.ddt(0).terms().next().is_none());
        let t2 = series(&[(vec![2], 1)], &["T"], 3);
        let d = t2.ddt(0);
        assert!(d.coeff(&[1]).approx_eq(&n(2)));
        assert_eq!(d.degree, 2);
    }

    fn random_series(rng: &mut ChaCha8Rng, vars: &[&str], d: u32, one_unit: bool) -> PadicSeries {
        random_int_series(rng, P, M, vars, d, one_unit).unwrap()
    }

    /// Integer-polynomial product oracle.
    fn int_product(a: &PadicSeries, b: &PadicSeries) -> BTreeMap<Vec<u32>, BigRational> {
        let mut out: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for (e1, c1) in a.terms() {
            for (e2, c2) in b.terms() {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(x, y)| x + y).collect();
                if e.iter().sum::<u32>() <= a.degree {
                    *out.entry(e).or_insert_with(BigRational::zero) += c1.to_rational().unwrap() * c2.to_rational().unwrap();
                }
            }
        }
        out
    }

    #[test]
    fn product_matches_integer_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = random_series(&mut rng, &["S", "T"], 3, false);
            let b = random_series(&mut rng, &["S", "T"], 3, false);
            let prod = a.mul(&b).unwrap();
            for (e, v) in int_product(&a, &b) {
                // Residues were stored mod p^M; compare in Z/p^M.
                assert!(prod.coeff(&e).approx_eq(&PadicNumber::from_rational(P, &v, M)), "{e:?}");
            }
        }
    }

    #[test]
    fn log_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let u = random_series(&mut rng, &["T1", "T2"], 3, true);
            let v = random_series(&mut rng, &["T1", "T2"], 3, true);
            let lhs = logp(&u.mul(&v).unwrap()).unwrap();
            let rhs = logp(&u).unwrap().add(&logp(&v).unwrap()).unwrap();
            assert!(lhs.approx_eq(&rhs));
        }
    }

    #[test]
    fn product_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = random_series(&mut rng, &["S", "T"], 4, false);
            let g = random_series(&mut rng, &["S", "T"], 4, false);
            let lhs = f.mul(&g).unwrap().ddt(1);
            let rhs = f.ddt(1).mul(&g).unwrap().add(&f.mul(&g.ddt(1)).unwrap()).unwrap();
            assert!(lhs.approx_eq(&rhs));
        }
    }

    #[test]
    fn l_invariant_examples() {
        let zero = [n(0)];
        let one = series(&[(vec![0], 1)], &["T"], 4);
        let ratio = series(&[(vec![0], 1), (vec![1], 7)], &["T"], 4);
        assert!(l_invariant(&ratio, &one, 0, &zero).unwrap().approx_eq(&n(-7)));
        // (1 + pT)^3: ℓ = −3p.
        let base = series(&[(vec![0], 1), (vec![1], 5)], &["T"], 4);
        let cube = base.pow(3).unwrap();
        assert!(l_invariant(&cube, &one, 0, &zero).unwrap().approx_eq(&n(-15)));
        let c = series(&[(vec![0], 6)], &["T"], 4);
        assert!(l_invariant(&c, &c, 0, &zero).unwrap().is_zero());
        let bad = series(&[(vec![0], 2)], &["T"], 4);
        assert!(matches!(l_invariant(&bad, &one, 0, &zero), Err(FamilyError::NotOneUnit(_))));
    }

    #[test]
    fn l_invariant_ratio_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let center = [n(5), n(10)];
        for _ in 0..10 {
            let a = random_series(&mut rng, &["T1", "T2"], 4, true);
            let b = random_series(&mut rng, &["T1", "T2"], 4, true);
            let w = random_series(&mut rng, &["T1", "T2"], 4, true);
            let l1 = l_invariant(&a, &b, 1, &center).unwrap();
            let l2 = l_invariant(&a.mul(&w).unwrap(), &b.mul(&w).unwrap(), 1, &center).unwrap();
            assert!(l1.approx_eq(&l2), "{l1} vs {l2}");
        }
    }

    #[test]
    fn recenter_matches_direct_evaluation() {
        // For a polynomial of degree < D the recentred constant term is the exact value.
        let f = series(&[(vec![0], 3), (vec![1], 2), (vec![2], 1)], &["T"], 6);
        let v = f.eval(&[n(5)]).unwrap();
        assert!(v.approx_eq(&n(3 + 10 + 25)));
        assert!(v.twice_abs_precision() >= 2 * 5);
    }

    #[test]
    fn derivative_identity_examples() {
        let zero = [n(0)];
        let u = series(&[(vec![0], 1), (vec![1], 5)], &["T"], 4);
        let g = series(&[(vec![0], 3)], &["T"], 4);
        let r = derivative_identity(&u, &g, 0, &zero).unwrap();
        assert!(r.equal);
        assert!(r.lhs.approx_eq(&n(-15)));
        let one = series(&[(vec![0], 1)], &["T"], 4);
        let r = derivative_identity(&one, &g, 0, &zero).unwrap();
        assert!(r.lhs.is_zero() && r.rhs.is_zero() && r.equal);
        let bad = series(&[(vec![0], 6)], &["T"], 4);
        assert!(matches!(derivative_identity(&bad, &g, 0, &zero), Err(FamilyError::CenterNotZero(_))));
    }

    #[test]
    fn json_roundtrip() {
        let f = series(&[(vec![0, 0], 1), (vec![1, 0], 10), (vec![0, 2], -3)], &["S", "T"], 3);
        let s = serde_json::to_string(&f).unwrap();
        let back: PadicSeries = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }

    proptest! {
        #[test]
        fn add_then_subtract(a in -10_000i64..10_000, b in -10_000i64..10_000) {
            let (x, y) = (n(a), n(b));
            prop_assert!(x.add(&y).unwrap().sub(&y).unwrap().approx_eq(&x));
        }

        #[test]
        fn inverse_roundtrip(a in 1i64..100_000) {
            let x = n(a);
            prop_assert!(x.mul(&x.inv().unwrap()).approx_eq(&n(1)));
        }

        #[test]
        fn derivative_identity_random(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // u(0) = 1 so that 1 − u vanishes at the center 0.
            let mut u = random_series(&mut rng, &["T"], 5, true);
            u.set(vec![0], n(1));
            let g = random_series(&mut rng, &["T"], 5, false);
            let r = derivative_identity(&u, &g, 0, &[n(0)]).unwrap();
            prop_assert!(r.equal, "{:?}", r);
        }
    }
}
