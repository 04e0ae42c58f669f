//! Truncated q-expansions with coefficients in `Z/p^m`, the `U_{p,N_i}`
//! operators, stratum-vanishing predicates and the ordinary projector.
//!
//! An expansion knows its coefficients at every PSD index `β` with
//! `trace(Nβ) ≤ T` (the *dense* case) or, more generally, on an explicit
//! finite `domain` of such indices; absent entries inside the known region are
//! zero, entries outside it are unknown.
//!
//! `U_{p,N_i}` acts by
//! `(U f)(β) = Σ_{x ∈ M_{N_i, n−N_i}(Z/p)} f(ᵗA β A)`, `A = [[p I, N x], [0, I]]`,
//! with `x` lifted to `{0, …, p−1}`. Since `‖A‖ ≤ p + N(p−1)k` with
//! `k = ⌈√(N_i(n−N_i))⌉`, every source of a target of trace `≤ T′` has trace
//! `≤ T` when `T′ = ⌊T / (p + N(p−1)k)²⌋`; that is the bound of the output.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cosets::PartitionParabolic;
use crate::intlin;
use crate::symmat::{self, HalfIntMatrix, LatticeCondition};

/// Errors from q-expansion operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QexpError {
    #[error("block index {0} out of range 1..={1}")]
    BadBlock(usize, usize),
    #[error("index {0} is not a PSD index of level {1} and size {2}")]
    BadIndex(String, u64, usize),
    #[error("ordinary projection did not stabilize within {0} steps")]
    NotStabilized(usize),
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

/// A coefficient lookup result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coefficient {
    Known(u64),
    Unknown,
}

/// A truncated q-expansion with coefficients mod `p^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QExpansion {
    pub parabolic: PartitionParabolic,
    pub level: u64,
    pub p: u64,
    pub m: u32,
    pub trace_bound: u64,
    coeffs: BTreeMap<HalfIntMatrix, u64>,
    domain: Option<Arc<BTreeSet<HalfIntMatrix>>>,
}

impl QExpansion {
    /// The zero expansion known on all PSD indices of trace `≤ trace_bound`.
    pub fn zero(parabolic: PartitionParabolic, level: u64, p: u64, m: u32, trace_bound: u64) -> Self {
        Self { parabolic, level, p, m, trace_bound, coeffs: BTreeMap::new(), domain: None }
    }

    /// Build a dense expansion from `(β, value)` pairs (values reduced mod `p^m`).
    pub fn from_coeffs(
        parabolic: PartitionParabolic,
        level: u64,
        p: u64,
        m: u32,
        trace_bound: u64,
        entries: impl IntoIterator<Item = (HalfIntMatrix, u64)>,
    ) -> Result<Self, QexpError> {
        let mut f = Self::zero(parabolic, level, p, m, trace_bound);
        for (b, v) in entries {
            f.check_index(&b)?;
            f.set(b, v);
        }
        Ok(f)
    }

    /// `p^m`.
    pub fn modulus(&self) -> u64 {
        self.p.pow(self.m)
    }

    /// Size `n`.
    pub fn n(&self) -> usize {
        self.parabolic.n
    }

    fn check_index(&self, b: &HalfIntMatrix) -> Result<(), QexpError> {
        if b.n() != self.n() || b.level() != self.level || !b.is_psd() || b.trace() as u64 > self.trace_bound {
            return Err(QexpError::BadIndex(format!("{b}"), self.level, self.n()));
        }
        if let Some(d) = &self.domain {
            if !d.contains(b) {
                return Err(QexpError::BadIndex(format!("{b} (outside the known domain)"), self.level, self.n()));
            }
        }
        Ok(())
    }

    /// Set a coefficient (reduced mod `p^m`; zero removes the entry).
    pub fn set(&mut self, b: HalfIntMatrix, v: u64) {
        let v = v % self.modulus();
        if v == 0 {
            self.coeffs.remove(&b);
        } else {
            self.coeffs.insert(b, v);
        }
    }

    /// Restrict the known region to an explicit domain (entries outside are dropped).
    pub fn with_domain(mut self, domain: BTreeSet<HalfIntMatrix>) -> Self {
        let bound = self.trace_bound;
        let domain: BTreeSet<_> = domain.into_iter().filter(|b| b.trace() as u64 <= bound).collect();
        self.coeffs.retain(|b, _| domain.contains(b));
        self.domain = Some(Arc::new(domain));
        self
    }

    /// The explicit known domain (`None` when dense up to the trace bound).
    pub fn domain(&self) -> Option<&BTreeSet<HalfIntMatrix>> {
        self.domain.as_deref()
    }

    /// Whether `β` lies in the known region.
    pub fn is_known(&self, b: &HalfIntMatrix) -> bool {
        b.trace() as u64 <= self.trace_bound && self.domain.as_ref().map_or(true, |d| d.contains(b))
    }

    /// Coefficient at `β`: the stored value, `0` if absent inside the known
    /// region, `Unknown` outside it.
    pub fn coefficient(&self, b: &HalfIntMatrix) -> Coefficient {
        if !self.is_known(b) {
            return Coefficient::Unknown;
        }
        Coefficient::Known(self.coeffs.get(b).copied().unwrap_or(0))
    }

    /// Nonzero coefficients in the canonical index order.
    pub fn nonzero(&self) -> impl Iterator<Item = (&HalfIntMatrix, &u64)> {
        self.coeffs.iter()
    }

    /// Number of nonzero coefficients.
    pub fn support_size(&self) -> usize {
        self.coeffs.len()
    }

    /// True when only the constant term survives the truncation.
    pub fn is_constant_only(&self) -> bool {
        self.trace_bound == 0
    }

    /// All indices in the known region.
    pub fn known_indices(&self) -> Vec<HalfIntMatrix> {
        match &self.domain {
            Some(d) => d.iter().cloned().collect(),
            None => symmat::enumerate(self.n(), self.level, self.trace_bound),
        }
    }

    /// `a f + b g` coefficientwise on the common known region.
    pub fn linear_combination(&self, a: u64, other: &Self, b: u64) -> Self {
        assert_eq!((self.p, self.m, self.level), (other.p, other.m, other.level));
        let bound = self.trace_bound.min(other.trace_bound);
        let mut out = Self::zero(self.parabolic.clone(), self.level, self.p, self.m, bound);
        let q = self.modulus();
        let domain = match (&self.domain, &other.domain) {
            (None, None) => None,
            _ => {
                let idx: BTreeSet<_> = self
                    .known_indices()
                    .into_iter()
                    .filter(|x| x.trace() as u64 <= bound && other.is_known(x))
                    .collect();
                Some(idx)
            }
        };
        let keys: BTreeSet<&HalfIntMatrix> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        for k in keys {
            if k.trace() as u64 > bound || domain.as_ref().map_or(false, |d| !d.contains(k)) {
                continue;
            }
            let x = self.coeffs.get(k).copied().unwrap_or(0) % q;
            let y = other.coeffs.get(k).copied().unwrap_or(0) % q;
            let v = ((a % q) as u128 * x as u128 + (b % q) as u128 * y as u128) % q as u128;
            out.set(k.clone(), v as u64);
        }
        match domain {
            Some(d) => out.with_domain(d),
            None => out,
        }
    }

    /// Agreement on the common known region.
    pub fn agrees_on_common(&self, other: &Self) -> bool {
        let bound = self.trace_bound.min(other.trace_bound);
        let keys: BTreeSet<&HalfIntMatrix> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        keys.into_iter()
            .filter(|k| k.trace() as u64 <= bound && self.is_known(k) && other.is_known(k))
            .all(|k| self.coefficient(k) == other.coefficient(k))
    }

    /// Relabel indices by `a ∈ GL(n, Z)`: the result `g` has `g(ᵗaβa) = f(β)`
    /// and is known exactly on the image of the old known region.
    pub fn transform_indices(&self, a: &[Vec<i64>]) -> Self {
        let image: BTreeSet<HalfIntMatrix> = self.known_indices().iter().map(|b| b.transform(a)).collect();
        let bound = image.iter().map(|b| b.trace() as u64).max().unwrap_or(0);
        let mut out = Self::zero(self.parabolic.clone(), self.level, self.p, self.m, bound);
        for (b, &v) in &self.coeffs {
            out.set(b.transform(a), v);
        }
        out.with_domain(image)
    }
}

/// `⌈√x⌉`.
fn ceil_sqrt(x: usize) -> usize {
    let mut r = 0;
    while r * r < x {
        r += 1;
    }
    r
}

/// The trace bound after one application of `U_{p,N_i}`.
pub fn reduced_bound(parabolic: &PartitionParabolic, level: u64, p: u64, i: usize, t: u64) -> u64 {
    let ni = parabolic.cumulative(i);
    let k = ceil_sqrt(ni * (parabolic.n - ni)) as u64;
    let c = p + level * (p - 1) * k;
    t / (c * c)
}

/// Sources `ᵗA β A` of a target under `U_{p,N_i}`, one per `x` (lifts in `[0, p)`).
pub fn sources(beta: &HalfIntMatrix, p: u64, i_split: usize) -> Vec<HalfIntMatrix> {
    let n = beta.n();
    let level = beta.level() as i64;
    let cols = n - i_split;
    let count = (p as usize).pow((i_split * cols) as u32);
    let mut out = Vec::with_capacity(count);
    let mut a = vec![vec![0i64; n]; n];
    for code in 0..count {
        for row in a.iter_mut() {
            row.iter_mut().for_each(|v| *v = 0);
        }
        for k in 0..i_split {
            a[k][k] = p as i64;
        }
        for k in i_split..n {
            a[k][k] = 1;
        }
        let mut c = code;
        for r in 0..i_split {
            for s in 0..cols {
                a[r][i_split + s] = level * (c % p as usize) as i64;
                c /= p as usize;
            }
        }
        out.push(beta.transform(&a));
    }
    out
}

/// Apply `U_{p,N_i}` (`1 ≤ i ≤ d`).
pub fn up_ni(f: &QExpansion, i: usize) -> Result<QExpansion, QexpError> {
    let d = f.parabolic.d();
    if i == 0 || i > d {
        return Err(QexpError::BadBlock(i, d));
    }
    let split = f.parabolic.cumulative(i);
    let new_bound = reduced_bound(&f.parabolic, f.level, f.p, i, f.trace_bound);
    let q = f.modulus();
    let targets: Vec<HalfIntMatrix> = match &f.domain {
        None => symmat::enumerate(f.n(), f.level, new_bound),
        Some(dom) => {
            // Candidate targets are the images of known indices under the inverse
            // transform; keep those whose every source is known.
            let mut cands = BTreeSet::new();
            for s in dom.iter() {
                for t in preimages(s, f.p, split) {
                    if t.trace() as u64 <= new_bound {
                        cands.insert(t);
                    }
                }
            }
            cands.into_iter().filter(|t| sources(t, f.p, split).iter().all(|s| f.is_known(s))).collect()
        }
    };
    let mut out = QExpansion::zero(f.parabolic.clone(), f.level, f.p, f.m, new_bound);
    for t in &targets {
        let mut acc: u128 = 0;
        for s in sources(t, f.p, split) {
            acc += u128::from(f.coeffs.get(&s).copied().unwrap_or(0));
        }
        out.set(t.clone(), (acc % u128::from(q)) as u64);
    }
    if f.domain.is_some() {
        return Ok(out.with_domain(targets.into_iter().collect()));
    }
    Ok(out)
}

/// Targets `t` with `ᵗA t A = s` for some `x`: `t = ᵗB s B / p²`, `B = [[I, −Nx], [0, pI]]`,
/// kept when integral with even diagonal and PSD.
pub fn preimages(s: &HalfIntMatrix, p: u64, split: usize) -> Vec<HalfIntMatrix> {
    let n = s.n();
    let level = s.level() as i64;
    let cols = n - split;
    let count = (p as usize).pow((split * cols) as u32);
    let p2 = (p * p) as i64;
    let mut out = Vec::new();
    let mut b = vec![vec![0i64; n]; n];
    for code in 0..count {
        for row in b.iter_mut() {
            row.iter_mut().for_each(|v| *v = 0);
        }
        for k in 0..split {
            b[k][k] = 1;
        }
        for k in split..n {
            b[k][k] = p as i64;
        }
        let mut c = code;
        for r in 0..split {
            for t in 0..cols {
                b[r][split + t] = -level * (c % p as usize) as i64;
                c /= p as usize;
            }
        }
        let big = s.transform(&b);
        let e = big.entries();
        if e.iter().all(|x| x % p2 == 0) {
            let rows: Vec<Vec<i64>> = e.chunks(n).map(|r| r.iter().map(|x| x / p2).collect()).collect();
            if let Ok(t) = HalfIntMatrix::new(s.level(), rows) {
                out.push(t);
            }
        }
    }
    out
}

/// `U_p^P = U_{p,N_1} ∘ … ∘ U_{p,N_d}`, applied in the order `i = 1, …, d`.
pub fn up_composite(f: &QExpansion) -> Result<QExpansion, QexpError> {
    (1..=f.parabolic.d()).try_fold(f.clone(), |acc, i| up_ni(&acc, i))
}

/// No nonzero coefficient at an index of rank `≤ k` (`k < 0` is vacuous).
pub fn vanishes_rank_le(f: &QExpansion, k: i64) -> bool {
    f.coeffs.keys().all(|b| b.rank() as i64 > k)
}

/// The lattice condition `Z^{N_{d−1}} ⊕ p Z^{n_d}` of the parabolic.
pub fn flat_condition(f: &QExpansion) -> LatticeCondition {
    let d = f.parabolic.d();
    LatticeCondition::new(f.n(), f.parabolic.cumulative(d - 1), f.p)
}

/// Flatness: vanishing at rank `≤ n−r−1`, and at corank-`r` indices whose
/// radical contains a primitive vector of `Z^{N_{d−1}} ⊕ p Z^{n_d}`.
pub fn is_flat(f: &QExpansion, r: usize) -> bool {
    let n = f.n() as i64;
    if !vanishes_rank_le(f, n - r as i64 - 1) {
        return false;
    }
    let cond = flat_condition(f);
    f.coeffs
        .keys()
        .filter(|b| f.n() - b.rank() == r)
        .all(|b| !b.radical_has_primitive_in(&cond))
}

/// First index violating [`is_flat`], for diagnostics.
pub fn flatness_witness(f: &QExpansion, r: usize) -> Option<HalfIntMatrix> {
    let n = f.n();
    let cond = flat_condition(f);
    f.coeffs
        .keys()
        .find(|b| {
            let rk = b.rank();
            rk + r + 1 <= n || (n - rk == r && b.radical_has_primitive_in(&cond))
        })
        .cloned()
}

/// Result of the ordinary projector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projection {
    pub expansion: QExpansion,
    pub steps: usize,
}

/// `e_P f = lim_j (U_p^P)^{j!} f`: iterate `h_1 = U f`, `h_{j+1} = U^{j·j!} h_j`
/// until two consecutive iterates agree on their common known region.
pub fn ordinary_project(f: &QExpansion, max_steps: usize) -> Result<Projection, QexpError> {
    let mut h = up_composite(f)?;
    let mut fact: u64 = 1; // j!
    for j in 1..=max_steps {
        let reps = j as u64 * fact;
        let mut next = h.clone();
        for _ in 0..reps {
            next = up_composite(&next)?;
            if next.is_constant_only() && next.support_size() == 0 && h.support_size() == 0 {
                break;
            }
        }
        if next.agrees_on_common(&h) {
            return Ok(Projection { expansion: next, steps: j });
        }
        h = next;
        fact = fact.saturating_mul(j as u64 + 1);
    }
    Err(QexpError::NotStabilized(max_steps))
}

/// Parameters of a random fixture.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumParams {
    pub parabolic: PartitionParabolic,
    #[serde(rename = "N")]
    pub level: u64,
    pub p: u64,
    pub m: u32,
    /// Exponent `l` of the `SP(Z/p^l)` level structure the fixture is invariant under.
    pub l: u32,
    pub trace_bound: u64,
}

type GroupKey = (Vec<usize>, u64, u64, u32);

/// `H = {h ∈ GL(n, Z/M) : h ≡ I mod N, h mod p^l ∈ SP}` with `M = N p^l`, as row-major matrices.
fn level_group(params: &StratumParams) -> Arc<Vec<Vec<i64>>> {
    static CACHE: OnceLock<Mutex<HashMap<GroupKey, Arc<Vec<Vec<i64>>>>>> = OnceLock::new();
    let key = (params.parabolic.parts.clone(), params.level, params.p, params.l);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(g) = cache.lock().unwrap().get(&key) {
        return g.clone();
    }
    let n = params.parabolic.n;
    let pl = params.p.pow(params.l) as i64;
    let big_n = params.level as i64;
    let m = big_n * pl;
    let par = &params.parabolic;
    // Enumerate entry by entry, with the constraints applied per coordinate.
    let mut out = Vec::new();
    let mut cur = vec![0i64; n * n];
    fn rec(
        k: usize,
        n: usize,
        m: i64,
        big_n: i64,
        pl: i64,
        par: &PartitionParabolic,
        cur: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) {
        if k == n * n {
            // Diagonal blocks mod p^l must have determinant 1; h mod p^l is then invertible.
            for b in 0..par.d() {
                let (lo, sz) = (par.cumulative(b), par.parts[b]);
                let blk: Vec<Vec<i128>> = (0..sz)
                    .map(|i| (0..sz).map(|j| i128::from(cur[(lo + i) * n + lo + j])).collect())
                    .collect();
                if intlin::det(&blk).rem_euclid(i128::from(pl)) != 1 % i128::from(pl) {
                    return;
                }
            }
            out.push(cur.clone());
            return;
        }
        let (i, j) = (k / n, k % n);
        let below = par.block_of(i) > par.block_of(j);
        for v in 0..m {
            let id = i64::from(i == j);
            if (v - id).rem_euclid(big_n) != 0 {
                continue;
            }
            if below && v % pl != 0 {
                continue;
            }
            cur[k] = v;
            rec(k + 1, n, m, big_n, pl, par, cur, out);
        }
    }
    rec(0, n, m, big_n, pl, par, &mut cur, &mut out);
    let arc = Arc::new(out);
    cache.lock().unwrap().insert(key, arc.clone());
    arc
}

/// Invariant of `β` under `β ↦ ᵗgβg` for `g ∈ GL(n, Z)` with `g ≡ I mod N` and
/// `g mod p^l ∈ SP`: rank, elementary divisors and determinant of `2Nβ`,
/// and the least element of the `H`-orbit of `2Nβ mod N p^l`.
pub fn invariant_key(b: &HalfIntMatrix, params: &StratumParams) -> Vec<i64> {
    let n = b.n();
    let m = (params.level * params.p.pow(params.l)) as i64;
    let s: Vec<i64> = b.entries().iter().map(|x| x.rem_euclid(m)).collect();
    let mut best: Option<Vec<i64>> = None;
    for h in level_group(params).iter() {
        let mut img = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i64;
                for k in 0..n {
                    for l in 0..n {
                        acc += h[k * n + i] * s[k * n + l] * h[l * n + j];
                    }
                }
                img[i * n + j] = acc.rem_euclid(m);
            }
        }
        if best.as_ref().map_or(true, |bb| img < *bb) {
            best = Some(img);
        }
    }
    let mut key = vec![b.rank() as i64, b.det_twice_scaled() as i64];
    key.extend(intlin::smith_diagonal(&b.imat()).into_iter().map(|x| x as i64));
    key.extend(best.unwrap_or_default());
    key
}

fn fnv1a(words: &[i64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for byte in w.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn hashed_value(words: &[i64], seed: u64, modulus: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(words) ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.gen_range(0..modulus)
}

/// A pseudo-random expansion in the stratum `V^{SP,r}` (vanishing at rank
/// `≤ n−r−1`), invariant under the level group so that it is a genuine
/// q-expansion shadow. Known on `support` when given, else densely up to the
/// trace bound. Deterministic in `seed`.
pub fn random_in_stratum(
    params: &StratumParams,
    r: usize,
    seed: u64,
    support: Option<&BTreeSet<HalfIntMatrix>>,
) -> QExpansion {
    random_with(params, r, seed, support, |b| invariant_key(b, params))
}

/// Like [`random_in_stratum`] but with values hashed from the raw index, so
/// the fixture is *not* invariant under the level group (a negative control).
pub fn random_noninvariant(
    params: &StratumParams,
    r: usize,
    seed: u64,
    support: Option<&BTreeSet<HalfIntMatrix>>,
) -> QExpansion {
    random_with(params, r, seed, support, |b| b.entries().to_vec())
}

fn random_with(
    params: &StratumParams,
    r: usize,
    seed: u64,
    support: Option<&BTreeSet<HalfIntMatrix>>,
    key: impl Fn(&HalfIntMatrix) -> Vec<i64>,
) -> QExpansion {
    let n = params.parabolic.n;
    let modulus = params.p.pow(params.m);
    let mut f = QExpansion::zero(params.parabolic.clone(), params.level, params.p, params.m, params.trace_bound);
    let indices: Vec<HalfIntMatrix> = match support {
        Some(s) => s.iter().filter(|b| b.trace() as u64 <= params.trace_bound).cloned().collect(),
        None => symmat::enumerate(n, params.level, params.trace_bound),
    };
    for b in &indices {
        if (b.rank() as i64) <= n as i64 - r as i64 - 1 {
            continue;
        }
        let v = hashed_value(&key(b), seed, modulus);
        f.set(b.clone(), v);
    }
    match support {
        Some(s) => f.with_domain(s.clone()),
        None => f,
    }
}

/// Every index on which a sequence of `U_{p,N_i}` applications (applied in
/// the given order) reads its input, for targets of trace `≤ final_bound`.
pub fn dependency_cone(
    parabolic: &PartitionParabolic,
    level: u64,
    p: u64,
    blocks: &[usize],
    final_bound: u64,
) -> BTreeSet<HalfIntMatrix> {
    let mut layer: BTreeSet<HalfIntMatrix> = symmat::enumerate(parabolic.n, level, final_bound).into_iter().collect();
    for &i in blocks.iter().rev() {
        let split = parabolic.cumulative(i);
        layer = layer.iter().flat_map(|t| sources(t, p, split)).collect();
    }
    layer
}

/// Smallest input trace bound guaranteeing `final_bound` after the given applications.
pub fn required_bound(parabolic: &PartitionParabolic, level: u64, p: u64, blocks: &[usize], final_bound: u64) -> u64 {
    blocks.iter().fold(final_bound + 1, |t, &i| {
        let ni = parabolic.cumulative(i);
        let k = ceil_sqrt(ni * (parabolic.n - ni)) as u64;
        let c = p + level * (p - 1) * k;
        t * c * c
    }) - 1
}

#[derive(Serialize, Deserialize)]
struct CoeffJson {
    beta: HalfIntMatrix,
    value: String,
}

#[derive(Serialize, Deserialize)]
struct QExpansionJson {
    parabolic: PartitionParabolic,
    #[serde(rename = "N")]
    level: u64,
    p: u64,
    m: u32,
    trace_bound: u64,
    coeffs: Vec<CoeffJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<Vec<HalfIntMatrix>>,
}

impl Serialize for QExpansion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        QExpansionJson {
            parabolic: self.parabolic.clone(),
            level: self.level,
            p: self.p,
            m: self.m,
            trace_bound: self.trace_bound,
            coeffs: self.coeffs.iter().map(|(b, v)| CoeffJson { beta: b.clone(), value: v.to_string() }).collect(),
            domain: self.domain.as_ref().map(|d| d.iter().cloned().collect()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QExpansion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let j = QExpansionJson::deserialize(d)?;
        let entries = j
            .coeffs
            .into_iter()
            .map(|c| c.value.trim().parse::<u64>().map(|v| (c.beta, v)).map_err(D::Error::custom))
            .collect::<Result<Vec<_>, _>>()?;
        let parabolic = PartitionParabolic::new(j.parabolic.parts).map_err(D::Error::custom)?;
        let mut f = QExpansion::zero(parabolic, j.level, j.p, j.m, j.trace_bound);
        if let Some(dom) = j.domain {
            f = f.with_domain(dom.into_iter().collect());
        }
        for (b, v) in entries {
            f.check_index(&b).map_err(D::Error::custom)?;
            f.set(b, v);
        }
        Ok(f)
    }
}
