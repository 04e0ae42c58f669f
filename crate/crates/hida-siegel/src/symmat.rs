//! Half-integral symmetric matrices: the index lattice of Siegel q-expansions.
//!
//! A Fourier index `β ∈ N^{-1} Sym(n, Z)*` is stored through the integer
//! matrix `S = 2Nβ`, which is symmetric with even diagonal. All predicates
//! (rank, radical, positivity) are integer linear algebra on `S`.
//!
//! Ordering convention: indices are ordered by `trace(Nβ) = trace(S)/2`, then
//! lexicographically by the row-major entries of `S`. This order is used by
//! [`enumerate`] and by every JSON serialization of collections of indices.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::intlin::{self, IMat};

/// Errors raised when constructing or combining indices.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymmatError {
    #[error("matrix is not square or has the wrong size: {0}")]
    Shape(String),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("diagonal entry {0} of 2Nβ is odd")]
    OddDiagonal(usize),
    #[error("level must be positive")]
    ZeroLevel,
    #[error("blocks have incompatible levels {0} and {1}")]
    LevelMismatch(u64, u64),
}

/// A half-integral symmetric index `β`, stored as `S = 2Nβ`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HalfIntMatrix {
    n: usize,
    level: u64,
    s: Vec<i64>,
}

impl HalfIntMatrix {
    /// Build from the rows of `2Nβ`.
    pub fn new(level: u64, rows: Vec<Vec<i64>>) -> Result<Self, SymmatError> {
        let n = rows.len();
        if level == 0 {
            return Err(SymmatError::ZeroLevel);
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(SymmatError::Shape(format!("expected {n} columns per row")));
        }
        for i in 0..n {
            if rows[i][i] % 2 != 0 {
                return Err(SymmatError::OddDiagonal(i));
            }
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(SymmatError::NotSymmetric);
                }
            }
        }
        Ok(Self { n, level, s: rows.into_iter().flatten().collect() })
    }

    /// Build from a row-major slice of `2Nβ`, panicking on malformed input.
    /// Intended for fixtures and tests.
    pub fn from_flat(level: u64, n: usize, s: &[i64]) -> Self {
        assert_eq!(s.len(), n * n);
        Self::new(level, s.chunks(n).map(|r| r.to_vec()).collect()).expect("valid index")
    }

    /// The zero index of size `n`.
    pub fn zero(n: usize, level: u64) -> Self {
        Self { n, level, s: vec![0; n * n] }
    }

    /// Diagonal index with `Nβ = diag(d)`.
    pub fn diag(level: u64, d: &[i64]) -> Self {
        let n = d.len();
        let mut s = vec![0; n * n];
        for (i, &x) in d.iter().enumerate() {
            s[i * n + i] = 2 * x;
        }
        Self { n, level, s }
    }

    /// Matrix size `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Tame level `N`.
    pub fn level(&self) -> u64 {
        self.level
    }

    /// Entry `(i, j)` of `2Nβ`.
    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.s[i * self.n + j]
    }

    /// Row-major entries of `2Nβ`.
    pub fn entries(&self) -> &[i64] {
        &self.s
    }

    /// Rows of `2Nβ`.
    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.s.chunks(self.n.max(1)).take(self.n).map(|r| r.to_vec()).collect()
    }

    pub(crate) fn imat(&self) -> IMat {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| i128::from(self.entry(i, j))).collect())
            .collect()
    }

    /// `trace(Nβ)`, an integer because the diagonal of `2Nβ` is even.
    pub fn trace(&self) -> i64 {
        (0..self.n).map(|i| self.entry(i, i)).sum::<i64>() / 2
    }

    /// True for the zero index.
    pub fn is_zero(&self) -> bool {
        self.s.iter().all(|&x| x == 0)
    }

    /// Rank over the rationals.
    pub fn rank(&self) -> usize {
        intlin::rank(&self.imat())
    }

    /// Determinant of `2Nβ`.
    pub fn det_twice_scaled(&self) -> i128 {
        intlin::det(&self.imat())
    }

    /// Saturated basis of the integer radical `{v ∈ Z^n : βv = 0}` in Hermite
    /// normal form; empty when `β` is nondegenerate.
    pub fn radical_basis(&self) -> Vec<Vec<i64>> {
        intlin::kernel_basis(&self.imat(), self.n)
            .into_iter()
            .map(|v| v.into_iter().map(|x| x as i64).collect())
            .collect()
    }

    /// True iff the radical contains a vector not divisible by `p` lying in
    /// `Z^{n'} ⊕ p^e Z^{n-n'}`.
    ///
    /// With a saturated radical basis `B` (columns `b_1..b_k`), a radical vector
    /// `Bc` is divisible by `p` exactly when `c` is, so the question is whether
    /// `B_low c ≡ 0 (mod p^e)` has a solution `c ≢ 0 (mod p)`, where `B_low` is
    /// the last `n - n'` rows of `B`. Over `Z_p` this holds iff `B_low` has
    /// rank `< k` or one of its elementary divisors is divisible by `p^e`.
    pub fn radical_has_primitive_in(&self, cond: &LatticeCondition) -> bool {
        assert_eq!(cond.n, self.n, "lattice condition has the wrong dimension");
        let basis = self.radical_basis();
        let k = basis.len();
        if k == 0 {
            return false;
        }
        let low_rows = self.n - cond.split;
        if low_rows == 0 {
            return true;
        }
        let b_low: IMat = (cond.split..self.n)
            .map(|i| basis.iter().map(|v| i128::from(v[i])).collect())
            .collect();
        let d = intlin::smith_diagonal(&b_low);
        let rk = d.iter().filter(|&&x| x != 0).count();
        if rk < k {
            return true;
        }
        let pe = i128::from(cond.p).pow(cond.e);
        d.iter().any(|&x| x % pe == 0)
    }

    /// `ᵗa β a` for an integer matrix `a` (rows given).
    pub fn transform(&self, a: &[Vec<i64>]) -> HalfIntMatrix {
        assert_eq!(a.len(), self.n);
        let am: IMat = a.iter().map(|r| r.iter().map(|&x| i128::from(x)).collect()).collect();
        let out = intlin::congruence(&self.imat(), &am);
        let m = out.len();
        HalfIntMatrix {
            n: m,
            level: self.level,
            s: out.into_iter().flatten().map(|x| x as i64).collect(),
        }
    }

    /// Positive semidefiniteness: every principal minor of `2Nβ` is `≥ 0`.
    pub fn is_psd(&self) -> bool {
        let m = self.imat();
        (1u32..(1u32 << self.n)).all(|mask| {
            let idx: Vec<usize> = (0..self.n).filter(|&i| mask & (1 << i) != 0).collect();
            let sub: IMat = idx.iter().map(|&i| idx.iter().map(|&j| m[i][j]).collect()).collect();
            intlin::det(&sub) >= 0
        })
    }

    /// Positive definiteness: every leading principal minor is `> 0`.
    pub fn is_pd(&self) -> bool {
        let m = self.imat();
        (1..=self.n).all(|k| {
            let sub: IMat = (0..k).map(|i| m[i][..k].to_vec()).collect();
            intlin::det(&sub) > 0
        })
    }

    /// Top-left `k × k` block, as an index of the same level.
    pub fn leading_block(&self, k: usize) -> HalfIntMatrix {
        let s = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| self.entry(i, j));
        HalfIntMatrix { n: k, level: self.level, s: s.collect() }
    }

    /// Split a size-`2n` index into `(β1, β0, β2)` with `β1, β2` of size `n`.
    pub fn split_blocks(&self) -> (HalfIntMatrix, OffDiagBlock, HalfIntMatrix) {
        assert_eq!(self.n % 2, 0, "block split needs even size");
        let h = self.n / 2;
        let pick = |r0: usize, c0: usize| -> Vec<i64> {
            (0..h).flat_map(|i| (0..h).map(move |j| (i, j))).map(|(i, j)| self.entry(r0 + i, c0 + j)).collect()
        };
        (
            HalfIntMatrix { n: h, level: self.level, s: pick(0, 0) },
            OffDiagBlock { n: h, level: self.level, s: pick(0, h) },
            HalfIntMatrix { n: h, level: self.level, s: pick(h, h) },
        )
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then(self.trace().cmp(&other.trace()))
            .then_with(|| self.s.cmp(&other.s))
            .then(self.level.cmp(&other.level))
    }
}

impl PartialOrd for HalfIntMatrix {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HalfIntMatrix {
    /// `(size, trace(Nβ), row-major entries of 2Nβ, level)`.
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

impl fmt::Debug for HalfIntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2·{}β={:?}", self.level, self.rows())
    }
}

impl fmt::Display for HalfIntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
struct HalfIntMatrixJson {
    n: usize,
    #[serde(rename = "N")]
    level: u64,
    twice_scaled: Vec<Vec<String>>,
}

impl Serialize for HalfIntMatrix {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        HalfIntMatrixJson {
            n: self.n,
            level: self.level,
            twice_scaled: self.rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for HalfIntMatrix {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let j = HalfIntMatrixJson::deserialize(de)?;
        let rows = j
            .twice_scaled
            .iter()
            .map(|r| r.iter().map(|x| x.trim().parse::<i64>().map_err(D::Error::custom)).collect())
            .collect::<Result<Vec<Vec<i64>>, _>>()?;
        if rows.len() != j.n {
            return Err(D::Error::custom("row count does not match n"));
        }
        HalfIntMatrix::new(j.level, rows).map_err(D::Error::custom)
    }
}

/// The sublattice `Z^{n'} ⊕ p^e Z^{n-n'}` of `Z^n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeCondition {
    pub n: usize,
    pub split: usize,
    pub p: u64,
    pub e: u32,
}

impl LatticeCondition {
    /// Condition with exponent `e = 1`.
    pub fn new(n: usize, split: usize, p: u64) -> Self {
        assert!(split <= n, "split must not exceed n");
        Self { n, split, p, e: 1 }
    }

    /// Membership of an integer vector.
    pub fn contains(&self, v: &[i64]) -> bool {
        let pe = (self.p as i64).pow(self.e);
        v[self.split..].iter().all(|x| x % pe == 0)
    }
}

/// An `n × n` block `β0` with entries in `(2N)^{-1}Z`, stored as `2Nβ0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OffDiagBlock {
    pub n: usize,
    #[serde(rename = "N")]
    pub level: u64,
    #[serde(rename = "twice_scaled")]
    pub s: Vec<i64>,
}

impl OffDiagBlock {
    /// Entry `(i, j)` of `2Nβ0`.
    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.s[i * self.n + j]
    }

    /// The zero block.
    pub fn zero(n: usize, level: u64) -> Self {
        Self { n, level, s: vec![0; n * n] }
    }

    /// Trace of `2Nβ0`.
    pub fn trace_twice_scaled(&self) -> i64 {
        (0..self.n).map(|i| self.entry(i, i)).sum()
    }
}

/// All PSD indices of size `n` and level `N` with `trace(Nβ) ≤ max_trace`,
/// in the canonical order.
pub fn enumerate(n: usize, level: u64, max_trace: u64) -> Vec<HalfIntMatrix> {
    let mut out = Vec::new();
    let mut diag = vec![0i64; n];
    enumerate_diag(n, level, max_trace as i64, 0, &mut diag, &mut out);
    out.sort();
    out
}

fn enumerate_diag(
    n: usize,
    level: u64,
    remaining: i64,
    pos: usize,
    diag: &mut Vec<i64>,
    out: &mut Vec<HalfIntMatrix>,
) {
    if pos == n {
        let mut s = vec![0i64; n * n];
        for i in 0..n {
            s[i * n + i] = 2 * diag[i];
        }
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        fill_offdiag(n, level, &pairs, 0, &mut s, out);
        return;
    }
    for a in 0..=remaining {
        diag[pos] = a;
        enumerate_diag(n, level, remaining - a, pos + 1, diag, out);
    }
}

fn fill_offdiag(
    n: usize,
    level: u64,
    pairs: &[(usize, usize)],
    k: usize,
    s: &mut Vec<i64>,
    out: &mut Vec<HalfIntMatrix>,
) {
    if k == pairs.len() {
        let m = HalfIntMatrix { n, level, s: s.clone() };
        if m.is_psd() {
            out.push(m);
        }
        return;
    }
    let (i, j) = pairs[k];
    let bound = isqrt(s[i * n + i] * s[j * n + j]);
    for x in -bound..=bound {
        s[i * n + j] = x;
        s[j * n + i] = x;
        fill_offdiag(n, level, pairs, k + 1, s, out);
    }
    s[i * n + j] = 0;
    s[j * n + i] = 0;
}

fn isqrt(x: i64) -> i64 {
    if x <= 0 {
        return 0;
    }
    let mut r = (x as f64).sqrt() as i64;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

/// Assemble `[[β1, β0], [ᵗβ0, β2]]` as a size-`2n` index.
pub fn block_embed(
    b1: &HalfIntMatrix,
    b0: &OffDiagBlock,
    b2: &HalfIntMatrix,
) -> Result<HalfIntMatrix, SymmatError> {
    let n = b1.n;
    if b2.n != n || b0.n != n {
        return Err(SymmatError::Shape("blocks of unequal size".into()));
    }
    if b1.level != b2.level || b0.level != b1.level {
        return Err(SymmatError::LevelMismatch(b1.level, if b2.level != b1.level { b2.level } else { b0.level }));
    }
    let m = 2 * n;
    let mut rows = vec![vec![0i64; m]; m];
    for i in 0..n {
        for j in 0..n {
            rows[i][j] = b1.entry(i, j);
            rows[n + i][n + j] = b2.entry(i, j);
            rows[i][n + j] = b0.entry(i, j);
            rows[n + j][i] = b0.entry(i, j);
        }
    }
    HalfIntMatrix::new(b1.level, rows)
}

/// Every `β0` making `[[β1, β0], [ᵗβ0, β2]]` positive semidefinite, ordered
/// lexicographically by the row-major entries of `2Nβ0`.
///
/// PSD forces `(2Nβ0)_{ij}² ≤ (2Nβ1)_{ii} (2Nβ2)_{jj}`, so the scan is finite.
pub fn completions(b1: &HalfIntMatrix, b2: &HalfIntMatrix) -> Vec<OffDiagBlock> {
    let n = b1.n;
    assert_eq!(b2.n, n);
    assert_eq!(b1.level, b2.level);
    let bounds: Vec<i64> = (0..n * n)
        .map(|k| isqrt(b1.entry(k / n, k / n) * b2.entry(k % n, k % n)))
        .collect();
    let mut out = Vec::new();
    let mut cur = OffDiagBlock { n, level: b1.level, s: vec![0; n * n] };
    fn rec(
        k: usize,
        bounds: &[i64],
        cur: &mut OffDiagBlock,
        b1: &HalfIntMatrix,
        b2: &HalfIntMatrix,
        out: &mut Vec<OffDiagBlock>,
    ) {
        if k == bounds.len() {
            if block_embed(b1, cur, b2).map(|m| m.is_psd()).unwrap_or(false) {
                out.push(cur.clone());
            }
            return;
        }
        for x in -bounds[k]..=bounds[k] {
            cur.s[k] = x;
            rec(k + 1, bounds, cur, b1, b2, out);
        }
        cur.s[k] = 0;
    }
    rec(0, &bounds, &mut cur, b1, b2, &mut out);
    out
}

/// `gcd` of all entries of `2Nβ` (the content).
pub fn content(b: &HalfIntMatrix) -> i64 {
    b.s.iter().fold(0i64, |a, &x| a.gcd(&x))
}
