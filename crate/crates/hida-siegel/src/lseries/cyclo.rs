//! Exact arithmetic in cyclotomic fields `Q(ζ_o)`.
//!
//! An element is a polynomial in `ζ_o` with rational coefficients, reduced
//! modulo the `o`-th cyclotomic polynomial `Φ_o`, so it has a unique
//! representation of length `φ(o)`. Mixed-order arithmetic embeds both
//! operands into `Q(ζ_L)` with `L = lcm` of the orders.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// The coefficients (constant term first) of the monic integer polynomial `Φ_o`.
pub fn cyclotomic_poly(o: u64) -> Arc<Vec<i64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Vec<i64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&o) {
        return p.clone();
    }
    // Φ_o = (x^o - 1) / ∏_{d | o, d < o} Φ_d.
    let mut num = vec![0i64; o as usize + 1];
    num[0] = -1;
    num[o as usize] = 1;
    for d in 1..o {
        if o % d == 0 {
            let den = cyclotomic_poly(d);
            num = exact_div_monic(&num, &den);
        }
    }
    let out = Arc::new(num);
    cache.lock().unwrap().insert(o, out.clone());
    out
}

fn exact_div_monic(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut r = num.to_vec();
    let dn = den.len() - 1;
    let qn = r.len() - 1 - dn;
    let mut q = vec![0i64; qn + 1];
    for k in (0..=qn).rev() {
        let c = r[k + dn];
        q[k] = c;
        for (j, &dj) in den.iter().enumerate() {
            r[k + j] -= c * dj;
        }
    }
    debug_assert!(r.iter().all(|&x| x == 0));
    q
}

/// Euler's totient.
pub fn totient(o: u64) -> u64 {
    crate::intlin::prime_divisors(o).iter().fold(o, |acc, &p| acc / p * (p - 1))
}

/// An element of `Q(ζ_o)`.
#[derive(Clone, Serialize, Deserialize)]
pub struct CycRational {
    order: u64,
    #[serde(with = "rat_vec")]
    coeffs: Vec<BigRational>,
}

mod rat_vec {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        use serde::de::Error;
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| crate::lseries::parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}

impl CycRational {
    /// The rational number `r` viewed in `Q(ζ_1) = Q`.
    pub fn from_rational(r: BigRational) -> Self {
        Self { order: 1, coeffs: vec![r] }
    }

    /// The integer `k`.
    pub fn from_int(k: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(k)))
    }

    /// `num / den`.
    pub fn from_frac(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// `ζ_o^k` (negative `k` allowed).
    pub fn zeta(order: u64, k: i64) -> Self {
        let e = k.rem_euclid(order as i64) as usize;
        let mut poly = vec![BigRational::zero(); e + 1];
        poly[e] = BigRational::one();
        Self::reduce(order, poly)
    }

    /// Reduce an arbitrary polynomial in `ζ_o` modulo `Φ_o`.
    pub fn reduce(order: u64, mut poly: Vec<BigRational>) -> Self {
        let phi = cyclotomic_poly(order);
        let d = phi.len() - 1;
        while poly.len() > d {
            let top = poly.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let shift = poly.len() - d;
            for (j, &c) in phi.iter().enumerate().take(d) {
                if c != 0 {
                    poly[shift + j] -= &top * BigRational::from_integer(BigInt::from(c));
                }
            }
        }
        poly.resize(d, BigRational::zero());
        Self { order, coeffs: poly }
    }

    /// Order `o` of the ambient field `Q(ζ_o)` of this representation.
    pub fn order(&self) -> u64 {
        self.order
    }

    /// Power-basis coefficients (length `φ(o)`).
    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// The rational value, if this element lies in `Q`.
    pub fn as_rational(&self) -> Option<BigRational> {
        let m = self.minimized();
        if m.order == 1 || m.coeffs.iter().skip(1).all(|c| c.is_zero()) {
            Some(m.coeffs.first().cloned().unwrap_or_else(BigRational::zero))
        } else {
            None
        }
    }

    /// Re-express in `Q(ζ_big)` where `self.order | big`.
    pub fn embed(&self, big: u64) -> Self {
        assert_eq!(big % self.order, 0, "cannot embed Q(ζ_{}) into Q(ζ_{big})", self.order);
        if big == self.order {
            return self.clone();
        }
        let step = (big / self.order) as usize;
        let mut poly = vec![BigRational::zero(); step * self.coeffs.len().max(1)];
        for (i, c) in self.coeffs.iter().enumerate() {
            poly[i * step] = c.clone();
        }
        Self::reduce(big, poly)
    }

    /// The smallest-order representation (tries every divisor of the order).
    pub fn minimized(&self) -> Self {
        let mut divs: Vec<u64> = (1..=self.order).filter(|d| self.order % d == 0).collect();
        divs.sort_unstable();
        for d in divs {
            if d == self.order {
                break;
            }
            // Candidate: the element lies in Q(ζ_d) iff it is fixed by every
            // automorphism ζ ↦ ζ^a with a ≡ 1 mod d.
            let fixed = (1..self.order)
                .filter(|&a| a.gcd(&self.order) == 1 && a % d == 1 % d)
                .all(|a| self.galois(a) == *self);
            if fixed {
                return self.descend(d);
            }
        }
        self.clone()
    }

    /// Find the representation in `Q(ζ_d)` of an element known to lie there.
    fn descend(&self, d: u64) -> Self {
        // Solve by linear algebra over Q: the images of the basis ζ_d^i in Q(ζ_o).
        let phi_d = totient(d) as usize;
        let basis: Vec<Self> = (0..phi_d).map(|i| Self::zeta(d, i as i64).embed(self.order)).collect();
        let n = self.coeffs.len();
        // Gaussian elimination on the n × phi_d system.
        let mut a: Vec<Vec<BigRational>> = (0..n)
            .map(|r| {
                let mut row: Vec<BigRational> = basis.iter().map(|b| b.coeffs[r].clone()).collect();
                row.push(self.coeffs[r].clone());
                row
            })
            .collect();
        let mut piv_cols = Vec::new();
        let mut r = 0;
        for c in 0..phi_d {
            let Some(p) = (r..n).find(|&i| !a[i][c].is_zero()) else { continue };
            a.swap(p, r);
            let inv = a[r][c].recip();
            for x in a[r].iter_mut() {
                *x *= &inv;
            }
            for i in 0..n {
                if i != r && !a[i][c].is_zero() {
                    let f = a[i][c].clone();
                    for j in 0..=phi_d {
                        let v = &a[r][j] * &f;
                        a[i][j] -= v;
                    }
                }
            }
            piv_cols.push(c);
            r += 1;
        }
        let mut out = vec![BigRational::zero(); phi_d];
        for (row, &c) in piv_cols.iter().enumerate() {
            out[c] = a[row][phi_d].clone();
        }
        Self { order: d, coeffs: out }
    }

    /// The automorphism `ζ_o ↦ ζ_o^a` (`a` prime to `o`).
    pub fn galois(&self, a: u64) -> Self {
        let o = self.order;
        let mut poly = vec![BigRational::zero(); o as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = ((i as u64 * a) % o) as usize;
            poly[e] += c;
        }
        Self::reduce(o, poly)
    }

    /// Complex conjugation `ζ ↦ ζ^{-1}`.
    pub fn conj(&self) -> Self {
        self.galois(self.order - 1 + u64::from(self.order == 1))
    }

    /// Field norm down to `Q`.
    pub fn norm(&self) -> BigRational {
        let o = self.order;
        let mut acc = self.clone();
        for a in 2..o {
            if a.gcd(&o) == 1 {
                acc = &acc * &self.galois(a);
            }
        }
        acc.coeffs.first().cloned().unwrap_or_else(BigRational::zero)
    }

    /// Multiplicative inverse (`None` for zero): product of the nontrivial
    /// Galois conjugates divided by the norm.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let o = self.order;
        let mut acc = Self::one().embed(o);
        for a in 2..o {
            if a.gcd(&o) == 1 {
                acc = &acc * &self.galois(a);
            }
        }
        let n = (&acc * self).coeffs[0].clone();
        Some(acc.scale(&n.recip()))
    }

    /// Multiply by a rational scalar.
    pub fn scale(&self, r: &BigRational) -> Self {
        Self { order: self.order, coeffs: self.coeffs.iter().map(|c| c * r).collect() }
    }

    /// Integer power (negative exponents invert; panics on `0^{-k}`).
    pub fn pow(&self, e: i64) -> Self {
        let base = if e < 0 { self.inv().expect("inverse of zero") } else { self.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = Self::one().embed(self.order);
        let mut b = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &b;
            }
            b = &b * &b;
            k >>= 1;
        }
        acc
    }

    /// Minimal p-adic valuation of the power-basis coefficients (`None` for zero).
    ///
    /// For `p ∤ o` this is the valuation of the element in `Z_p[ζ_o]`, so
    /// `x ≡ y (mod p^a)` there iff `(x − y).coeff_valuation(p) ≥ a`.
    pub fn coeff_valuation(&self, p: u64) -> Option<i64> {
        self.coeffs
            .iter()
            .filter(|c| !c.is_zero())
            .map(|c| rational_valuation(c, p))
            .min()
    }

    /// `x ≡ y (mod p^a)` in `Z_(p)[ζ]` (both must be p-integral).
    pub fn congruent_mod(&self, other: &Self, p: u64, a: i64) -> bool {
        (self - other).coeff_valuation(p).map_or(true, |v| v >= a)
    }

    fn common(a: &Self, b: &Self) -> (Self, Self) {
        if a.order == b.order {
            return (a.clone(), b.clone());
        }
        let l = a.order.lcm(&b.order);
        (a.embed(l), b.embed(l))
    }
}

/// p-adic valuation of a nonzero rational.
pub fn rational_valuation(c: &BigRational, p: u64) -> i64 {
    let pb = BigInt::from(p);
    let count = |x: &BigInt| {
        let mut x = x.abs();
        let mut v = 0i64;
        while (&x % &pb).is_zero() {
            x /= &pb;
            v += 1;
        }
        v
    };
    count(c.numer()) - count(c.denom())
}

impl PartialEq for CycRational {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = Self::common(self, other);
        a.coeffs == b.coeffs
    }
}

impl Eq for CycRational {}

impl<'a> Add<&'a CycRational> for &'a CycRational {
    type Output = CycRational;
    fn add(self, rhs: &CycRational) -> CycRational {
        let (a, b) = CycRational::common(self, rhs);
        CycRational {
            order: a.order,
            coeffs: a.coeffs.iter().zip(b.coeffs.iter()).map(|(x, y)| x + y).collect(),
        }
    }
}

impl<'a> Sub<&'a CycRational> for &'a CycRational {
    type Output = CycRational;
    fn sub(self, rhs: &CycRational) -> CycRational {
        let (a, b) = CycRational::common(self, rhs);
        CycRational {
            order: a.order,
            coeffs: a.coeffs.iter().zip(b.coeffs.iter()).map(|(x, y)| x - y).collect(),
        }
    }
}

impl<'a> Mul<&'a CycRational> for &'a CycRational {
    type Output = CycRational;
    fn mul(self, rhs: &CycRational) -> CycRational {
        let (a, b) = CycRational::common(self, rhs);
        if a.coeffs.len() == 1 {
            return CycRational { order: a.order, coeffs: vec![&a.coeffs[0] * &b.coeffs[0]] };
        }
        let mut poly = vec![BigRational::zero(); a.coeffs.len() + b.coeffs.len() - 1];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if !y.is_zero() {
                    poly[i + j] += x * y;
                }
            }
        }
        CycRational::reduce(a.order, poly)
    }
}

impl Neg for &CycRational {
    type Output = CycRational;
    fn neg(self) -> CycRational {
        CycRational { order: self.order, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<CycRational> for CycRational {
            type Output = CycRational;
            fn $m(self, rhs: CycRational) -> CycRational {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for CycRational {
    type Output = CycRational;
    fn neg(self) -> CycRational {
        -&self
    }
}

impl fmt::Debug for CycRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for CycRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.minimized();
        let terms: Vec<String> = m
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => c.to_string(),
                1 => format!("({c})ζ{}", m.order),
                _ => format!("({c})ζ{}^{i}", m.order),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> CycRational {
        CycRational::from_frac(n, d)
    }

    #[test]
    fn cyclotomic_polys() {
        assert_eq!(*cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(*cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(*cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(*cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
        assert_eq!(cyclotomic_poly(15).len() as u64 - 1, totient(15));
    }

    #[test]
    fn roots_of_unity() {
        let z5 = CycRational::zeta(5, 1);
        assert_eq!(z5.pow(5), CycRational::one());
        let s: CycRational = (0..5).fold(CycRational::zero(), |acc, k| &acc + &CycRational::zeta(5, k));
        assert!(s.is_zero());
        assert_eq!(CycRational::zeta(4, 2), q(-1, 1));
        assert_eq!(CycRational::zeta(6, 2), CycRational::zeta(3, 1));
        assert_eq!(CycRational::zeta(2, 1), q(-1, 1));
        // Mixed-order sums land in the lcm field.
        let x = &CycRational::zeta(3, 1) + &CycRational::zeta(4, 1);
        assert_eq!(x.order(), 12);
    }

    #[test]
    fn sqrt5_from_gauss_sum() {
        // (ζ - ζ^2 - ζ^3 + ζ^4)^2 = 5 in Q(ζ_5).
        let g = [1i64, -1, -1, 1]
            .iter()
            .enumerate()
            .fold(CycRational::zero(), |acc, (i, &s)| &acc + &CycRational::zeta(5, i as i64 + 1).scale(&BigRational::from_integer(s.into())));
        assert_eq!(&g * &g, q(5, 1));
        assert_eq!(g.as_rational(), None);
        assert_eq!((&g * &g).as_rational(), Some(BigRational::from_integer(5.into())));
    }

    #[test]
    fn minimization_and_display() {
        let x = CycRational::zeta(12, 4);
        assert_eq!(x.minimized().order(), 3);
        assert_eq!(format!("{}", q(3, 4)), "3/4");
    }

    #[test]
    fn valuation_congruence() {
        let a = q(26, 1);
        let b = q(1, 1);
        assert!(a.congruent_mod(&b, 5, 2));
        assert!(!a.congruent_mod(&b, 5, 3));
        assert_eq!(q(3, 25).coeff_valuation(5), Some(-2));
    }

    fn elem(order: u64) -> impl Strategy<Value = CycRational> {
        proptest::collection::vec((-5i64..=5, 1i64..=4), order as usize).prop_map(move |v| {
            let poly = v.into_iter().map(|(n, d)| BigRational::new(n.into(), d.into())).collect();
            CycRational::reduce(order, poly)
        })
    }

    proptest! {
        #[test]
        fn field_axioms(a in elem(12), b in elem(12), c in elem(7)) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
            if !a.is_zero() {
                prop_assert_eq!(&a * &a.inv().unwrap(), CycRational::one());
            }
            prop_assert_eq!(a.conj().conj(), a.clone());
            prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
        }
    }
}
