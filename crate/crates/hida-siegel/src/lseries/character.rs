//! Dirichlet characters stored by value table.
//!
//! A character of modulus `f` and order dividing `o` is a table indexed by
//! residues `a mod f`, holding the exponent `e` with `χ(a) = ζ_o^e`, or `None`
//! when `gcd(a, f) > 1`.

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cyclo::CycRational;
use crate::intlin::{is_prime, pow_mod, prime_divisors};

/// Errors from character construction and character-dependent operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CharacterError {
    #[error("value table has length {0}, expected the modulus {1}")]
    TableLength(usize, u64),
    #[error("table is not a character: {0}")]
    NotMultiplicative(String),
    #[error("character of modulus {modulus} has conductor {conductor}; a primitive character is required")]
    NotPrimitive { modulus: u64, conductor: u64 },
    #[error("no primitive root modulo {0}")]
    NotCyclic(u64),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
}

/// A Dirichlet character with values in `μ_o ∪ {0}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirichletCharacter {
    modulus: u64,
    order: u64,
    values: Vec<Option<u32>>,
}

impl DirichletCharacter {
    /// Validate and build from a value table.
    pub fn from_values(modulus: u64, order: u64, values: Vec<Option<u32>>) -> Result<Self, CharacterError> {
        if values.len() as u64 != modulus {
            return Err(CharacterError::TableLength(values.len(), modulus));
        }
        for a in 0..modulus {
            let unit = a.gcd(&modulus) == 1;
            match values[a as usize] {
                Some(e) if !unit || u64::from(e) >= order => {
                    return Err(CharacterError::NotMultiplicative(format!("bad entry at {a}")))
                }
                None if unit => return Err(CharacterError::NotMultiplicative(format!("missing value at unit {a}"))),
                _ => {}
            }
        }
        let chi = Self { modulus, order, values };
        for a in 0..modulus {
            for b in 0..modulus {
                if let (Some(x), Some(y)) = (chi.values[a as usize], chi.values[b as usize]) {
                    let ab = (a * b % modulus) as usize;
                    if chi.values[ab] != Some(((u64::from(x) + u64::from(y)) % order) as u32) {
                        return Err(CharacterError::NotMultiplicative(format!("χ({a})χ({b}) ≠ χ({a}·{b})")));
                    }
                }
            }
        }
        Ok(chi)
    }

    /// The principal character modulo `f`.
    pub fn trivial(modulus: u64) -> Self {
        let values = (0..modulus).map(|a| (a.gcd(&modulus) == 1).then_some(0)).collect();
        Self { modulus, order: 1, values }
    }

    /// The Legendre symbol modulo an odd prime.
    pub fn legendre(p: u64) -> Result<Self, CharacterError> {
        if p == 2 || !is_prime(p) {
            return Err(CharacterError::NotOddPrime(p));
        }
        let values = (0..p)
            .map(|a| (a != 0).then(|| if pow_mod(a, (p - 1) / 2, p) == 1 { 0 } else { 1 }))
            .collect();
        Ok(Self { modulus: p, order: 2, values })
    }

    /// The primitive quadratic character of `Q(√d)` (Kronecker symbol of the
    /// fundamental discriminant); trivial modulo 1 when `d` is a square.
    pub fn quadratic_of(d: i128) -> Self {
        assert!(d != 0, "quadratic character of zero");
        let disc = fundamental_discriminant(d);
        if disc == 1 {
            return Self::trivial(1);
        }
        let m = disc.unsigned_abs() as u64;
        let values = (0..m)
            .map(|a| (a.gcd(&m) == 1).then(|| if kronecker(disc, a as i128) == 1 { 0 } else { 1 }))
            .collect();
        Self { modulus: m, order: 2, values }
    }

    /// The character of a cyclic `(Z/f)^×` sending the least primitive root to `ζ_o^k`.
    pub fn from_generator(modulus: u64, order: u64, k: u32) -> Result<Self, CharacterError> {
        let g = primitive_root(modulus).ok_or(CharacterError::NotCyclic(modulus))?;
        let mut values = vec![None; modulus as usize];
        let mut x = 1 % modulus;
        let group_order = super::cyclo::totient(modulus);
        for j in 0..group_order {
            values[x as usize] = Some(((j * u64::from(k)) % order) as u32);
            x = x * g % modulus;
        }
        Self::from_values(modulus, order, values)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// Exponent table.
    pub fn values(&self) -> &[Option<u32>] {
        &self.values
    }

    /// Exponent `e` with `χ(a) = ζ_o^e`, or `None` when `χ(a) = 0`.
    pub fn exponent(&self, a: i128) -> Option<u32> {
        let m = i128::from(self.modulus);
        self.values[a.rem_euclid(m) as usize]
    }

    /// `χ(a)` as a cyclotomic number.
    pub fn eval(&self, a: i128) -> CycRational {
        match self.exponent(a) {
            Some(e) => CycRational::zeta(self.order, i64::from(e)),
            None => CycRational::zero(),
        }
    }

    /// `χ(a/b)` for a rational whose numerator and denominator are prime to the modulus.
    pub fn eval_ratio(&self, a: i128, b: i128) -> CycRational {
        match (self.exponent(a), self.exponent(b)) {
            (Some(x), Some(y)) => CycRational::zeta(self.order, i64::from(x) - i64::from(y)),
            _ => CycRational::zero(),
        }
    }

    /// True when `χ(a) = 1` for every unit `a`.
    pub fn is_trivial(&self) -> bool {
        self.values.iter().all(|v| v.map_or(true, |e| e == 0))
    }

    /// `χ(−1) = 1`.
    pub fn is_even(&self) -> bool {
        self.exponent(-1) == Some(0)
    }

    /// Smallest period `d | f` on units: `χ(a) = 1` whenever `a ≡ 1 mod d`.
    pub fn conductor(&self) -> u64 {
        let f = self.modulus;
        (1..=f)
            .filter(|d| f % d == 0)
            .find(|&d| {
                (0..f).all(|a| a.gcd(&f) != 1 || a % d != 1 % d || self.values[a as usize] == Some(0))
            })
            .unwrap_or(f)
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus
    }

    /// The primitive character inducing `χ`.
    pub fn primitive(&self) -> Self {
        let c = self.conductor();
        let f = self.modulus;
        let values = (0..c)
            .map(|a| {
                if a.gcd(&c) != 1 {
                    return None;
                }
                // Find a lift of a mod c that is a unit mod f.
                let lift = (0..f / c).map(|t| a + t * c).find(|x| x.gcd(&f) == 1).expect("unit lift exists");
                self.values[lift as usize]
            })
            .collect();
        Self { modulus: c, order: self.order, values }
    }

    /// `χ` viewed modulo a multiple `m` of its modulus.
    pub fn lift_to(&self, m: u64) -> Self {
        assert_eq!(m % self.modulus, 0);
        let values = (0..m)
            .map(|a| if a.gcd(&m) == 1 { self.values[(a % self.modulus) as usize] } else { None })
            .collect();
        Self { modulus: m, order: self.order, values }
    }

    /// Pointwise product (modulus and order are the lcms).
    pub fn product(&self, other: &Self) -> Self {
        let m = self.modulus.lcm(&other.modulus);
        let o = self.order.lcm(&other.order);
        let (sa, sb) = (o / self.order, o / other.order);
        let values = (0..m)
            .map(|a| {
                let x = self.values[(a % self.modulus) as usize]?;
                let y = other.values[(a % other.modulus) as usize]?;
                if a.gcd(&m) != 1 {
                    return None;
                }
                Some(((u64::from(x) * sa + u64::from(y) * sb) % o) as u32)
            })
            .collect();
        Self { modulus: m, order: o, values }.reduced_order()
    }

    /// Complex conjugate character.
    pub fn inverse(&self) -> Self {
        let o = self.order;
        let values = self.values.iter().map(|v| v.map(|e| ((o - u64::from(e)) % o) as u32)).collect();
        Self { modulus: self.modulus, order: o, values }
    }

    /// `χ^k`.
    pub fn power(&self, k: u32) -> Self {
        let o = self.order;
        let values = self.values.iter().map(|v| v.map(|e| ((u64::from(e) * u64::from(k)) % o) as u32)).collect();
        Self { modulus: self.modulus, order: o, values }.reduced_order()
    }

    /// Shrink the stored order to the exact order of the character.
    pub fn reduced_order(&self) -> Self {
        let g = self.values.iter().flatten().fold(self.order, |acc, &e| acc.gcd(&u64::from(e)));
        let g = g.max(1);
        let order = self.order / g;
        let values = self.values.iter().map(|v| v.map(|e| e / g as u32)).collect();
        Self { modulus: self.modulus, order, values }
    }
}

/// Least primitive root modulo `m` when `(Z/m)^×` is cyclic.
pub fn primitive_root(m: u64) -> Option<u64> {
    if m <= 2 {
        return Some(m - 1 + u64::from(m == 1));
    }
    let t = super::cyclo::totient(m);
    let qs = prime_divisors(t);
    (2..m).filter(|g| g.gcd(&m) == 1).find(|&g| qs.iter().all(|&q| pow_mod(g, t / q, m) != 1))
}

/// Fundamental discriminant of `Q(√d)` (1 when `d` is a square).
pub fn fundamental_discriminant(d: i128) -> i128 {
    let sign = d.signum();
    let mut x = d.unsigned_abs();
    let mut core: u128 = 1;
    let mut q: u128 = 2;
    while q * q <= x {
        let mut e = 0;
        while x % q == 0 {
            x /= q;
            e += 1;
        }
        if e % 2 == 1 {
            core *= q;
        }
        q += 1;
    }
    core *= x;
    let c = sign * core as i128;
    if c == 1 {
        1
    } else if c.rem_euclid(4) == 1 {
        c
    } else {
        4 * c
    }
}

/// Kronecker symbol `(d / a)` for `a ≥ 1`.
pub fn kronecker(d: i128, a: i128) -> i32 {
    assert!(a >= 1);
    let mut result = 1i32;
    let mut a = a;
    while a % 2 == 0 {
        a /= 2;
        result *= match d.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    for q in prime_divisors(a as u64) {
        while a % q as i128 == 0 {
            a /= q as i128;
            result *= legendre_symbol(d, q);
        }
    }
    result
}

/// Legendre symbol `(a / q)` for an odd prime `q`.
pub fn legendre_symbol(a: i128, q: u64) -> i32 {
    let r = a.rem_euclid(i128::from(q)) as u64;
    if r == 0 {
        0
    } else if pow_mod(r, (q - 1) / 2, q) == 1 {
        1
    } else {
        -1
    }
}
