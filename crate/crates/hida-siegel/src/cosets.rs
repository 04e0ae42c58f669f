//! Brute-force boundary double cosets `P°_{n,r}(Z/p^l) \ GL(n, Z/p^l) / SP(Z/p^l)`.
//!
//! The whole group `GL(n, Z/p^l)` is enumerated and partitioned into orbits
//! of the two-sided action with a union–find over generators: on the left,
//! elementary transvections and unit diagonals of
//! `P°_{n,r} = [[SL(r), ∗], [0, GL(n−r)]]`; on the right, the transvections
//! generating `SP` (block upper triangular with `SL(n_i)` diagonal blocks).
//! Over the local ring `Z/p^l`, `SL` is generated by transvections, so these
//! generators give the full groups (a unit test checks this directly).
//!
//! The flat orbits are those meeting `P_{n,r} · w`, with
//! `P_{n,r} = diag(GL(r), GL(n−r))` and `w = [[0, I_r], [I_{n−r}, 0]]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intlin::is_prime;

/// Default limit on `|GL(n, Z/p^l)|`.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Errors from coset enumeration.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CosetError {
    #[error("|GL({n}, Z/{q})| = {size} exceeds the budget {budget}")]
    BudgetExceeded { n: usize, q: u64, size: u128, budget: u64 },
    #[error("invalid coset specification: {0}")]
    Invalid(String),
}

/// A standard parabolic of `GL(n)` given by a partition `n = n_1 + … + n_d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionParabolic {
    pub n: usize,
    pub parts: Vec<usize>,
}

impl PartitionParabolic {
    /// Validate `parts` (positive, summing to `n`).
    pub fn new(parts: Vec<usize>) -> Result<Self, CosetError> {
        if parts.is_empty() || parts.iter().any(|&x| x == 0) {
            return Err(CosetError::Invalid("parts must be positive".into()));
        }
        Ok(Self { n: parts.iter().sum(), parts })
    }

    /// Number of blocks `d`.
    pub fn d(&self) -> usize {
        self.parts.len()
    }

    /// `N_i = n_1 + … + n_i` for `0 ≤ i ≤ d` (`N_0 = 0`).
    pub fn cumulative(&self, i: usize) -> usize {
        self.parts[..i].iter().sum()
    }

    /// Size `n_d` of the last block.
    pub fn last(&self) -> usize {
        *self.parts.last().unwrap()
    }

    /// Block index (0-based) of coordinate `k`.
    pub fn block_of(&self, k: usize) -> usize {
        let mut acc = 0;
        for (b, &s) in self.parts.iter().enumerate() {
            acc += s;
            if k < acc {
                return b;
            }
        }
        panic!("coordinate {k} out of range");
    }
}

/// Data of one double-coset count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetSpec {
    pub parabolic: PartitionParabolic,
    pub r: usize,
    pub p: u64,
    pub l: u32,
}

impl CosetSpec {
    pub fn new(parts: Vec<usize>, r: usize, p: u64, l: u32) -> Result<Self, CosetError> {
        let parabolic = PartitionParabolic::new(parts)?;
        if r == 0 || r > parabolic.last() {
            return Err(CosetError::Invalid(format!("need 1 ≤ r ≤ n_d = {}", parabolic.last())));
        }
        if !is_prime(p) || l == 0 {
            return Err(CosetError::Invalid("p must be prime and l ≥ 1".into()));
        }
        Ok(Self { parabolic, r, p, l })
    }

    /// `q = p^l`.
    pub fn modulus(&self) -> u64 {
        self.p.pow(self.l)
    }

    /// `1` if `r < n_d`, else `|(Z/p^l)^×| = p^{l−1}(p−1)`.
    pub fn predicted_flat(&self) -> u64 {
        if self.r < self.parabolic.last() {
            1
        } else {
            self.p.pow(self.l - 1) * (self.p - 1)
        }
    }
}

/// `|GL(n, Z/p^l)| = p^{(l−1)n²} ∏_{i<n} (p^n − p^i)`.
pub fn gl_order(n: usize, p: u64, l: u32) -> u128 {
    let p = u128::from(p);
    let base: u128 = (0..n).map(|i| p.pow(n as u32) - p.pow(i as u32)).product();
    base * p.pow((l - 1) * (n * n) as u32)
}

/// Full orbit partition with flat marking.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CosetPartition {
    /// One representative per double coset (the least element in the base-`q`
    /// row-major encoding), as rows of residues in `[0, q)`.
    pub representatives: Vec<Vec<Vec<u64>>>,
    /// Number of group elements in each double coset.
    pub sizes: Vec<u64>,
    /// Whether each double coset meets `P_{n,r} · w`.
    pub flat: Vec<bool>,
    /// `|GL(n, Z/p^l)|`.
    pub group_order: u64,
}

/// Outcome of [`verify_index_formula`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexReport {
    pub total_cosets: u64,
    pub flat_count: u64,
    pub predicted_flat: u64,
    #[serde(rename = "match")]
    pub matches: bool,
}

#[derive(Clone, Copy, Debug)]
enum Gen {
    /// Left multiplication by `1 + E_ij`: row i += row j.
    RowAdd(usize, usize),
    /// Left multiplication by a unit diagonal: row i *= u.
    RowScale(usize, u64),
    /// Right multiplication by `1 + E_ij`: column j += column i.
    ColAdd(usize, usize),
}

fn left_generators(spec: &CosetSpec) -> Vec<Gen> {
    let n = spec.parabolic.n;
    let r = spec.r;
    let q = spec.modulus();
    let mut g = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let allowed = (i < r && j < r) || (i < r && j >= r) || (i >= r && j >= r);
            if allowed {
                g.push(Gen::RowAdd(i, j));
            }
        }
    }
    for i in r..n {
        for u in 2..q {
            if u % spec.p != 0 {
                g.push(Gen::RowScale(i, u));
            }
        }
    }
    g
}

fn right_generators(spec: &CosetSpec) -> Vec<Gen> {
    let par = &spec.parabolic;
    let n = par.n;
    let mut g = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && par.block_of(i) <= par.block_of(j) {
                g.push(Gen::ColAdd(i, j));
            }
        }
    }
    g
}

struct Group {
    /// Encoded code → compact id (u32::MAX when not invertible).
    id_of: Vec<u32>,
    /// Compact id → encoded code.
    codes: Vec<u64>,
}

impl Group {
    fn build(n: usize, p: u64, q: u64) -> Self {
        let total = q.pow((n * n) as u32);
        let mut id_of = vec![u32::MAX; total as usize];
        let mut codes = Vec::new();
        let mut m = vec![0u64; n * n];
        for code in 0..total {
            decode(code, q, &mut m);
            if det_mod(&m, n, p) != 0 {
                id_of[code as usize] = codes.len() as u32;
                codes.push(code);
            }
        }
        Self { id_of, codes }
    }
}

fn decode(mut code: u64, q: u64, out: &mut [u64]) {
    for x in out.iter_mut().rev() {
        *x = code % q;
        code /= q;
    }
}

fn encode(m: &[u64], q: u64) -> u64 {
    m.iter().fold(0, |acc, &x| acc * q + x)
}

/// Determinant modulo `p` (invertibility over `Z/p^l` is decided mod `p`).
fn det_mod(m: &[u64], n: usize, p: u64) -> u64 {
    let mut a: Vec<u64> = m.iter().map(|x| x % p).collect();
    let mut det = 1u64;
    for c in 0..n {
        let Some(piv) = (c..n).find(|&i| a[i * n + c] != 0) else { return 0 };
        if piv != c {
            for k in 0..n {
                a.swap(piv * n + k, c * n + k);
            }
            det = (p - det) % p;
        }
        let pv = a[c * n + c];
        det = det * pv % p;
        let inv = crate::intlin::pow_mod(pv, p - 2, p);
        for i in c + 1..n {
            let f = a[i * n + c] * inv % p;
            if f != 0 {
                for k in c..n {
                    a[i * n + k] = (a[i * n + k] + p * p - f * a[c * n + k] % p) % p;
                }
            }
        }
    }
    det
}

fn apply(gen: Gen, m: &mut [u64], n: usize, q: u64) {
    match gen {
        Gen::RowAdd(i, j) => {
            for k in 0..n {
                m[i * n + k] = (m[i * n + k] + m[j * n + k]) % q;
            }
        }
        Gen::RowScale(i, u) => {
            for k in 0..n {
                m[i * n + k] = m[i * n + k] * u % q;
            }
        }
        Gen::ColAdd(i, j) => {
            for k in 0..n {
                m[k * n + j] = (m[k * n + j] + m[k * n + i]) % q;
            }
        }
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let gp = parent[parent[x as usize] as usize];
        parent[x as usize] = gp;
        x = gp;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        // Keep the smaller id as root so representatives are the least codes.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

fn check_budget(spec: &CosetSpec, budget: u64) -> Result<(), CosetError> {
    let size = gl_order(spec.parabolic.n, spec.p, spec.l);
    if size > u128::from(budget) {
        return Err(CosetError::BudgetExceeded { n: spec.parabolic.n, q: spec.modulus(), size, budget });
    }
    Ok(())
}

/// Partition `GL(n, Z/p^l)` into double cosets and mark the flat ones.
pub fn partition(spec: &CosetSpec, budget: u64) -> Result<CosetPartition, CosetError> {
    check_budget(spec, budget)?;
    let n = spec.parabolic.n;
    let q = spec.modulus();
    let group = Group::build(n, spec.p, q);
    let size = group.codes.len();
    let mut parent: Vec<u32> = (0..size as u32).collect();
    let gens: Vec<Gen> = left_generators(spec).into_iter().chain(right_generators(spec)).collect();
    let mut m = vec![0u64; n * n];
    for id in 0..size as u32 {
        for &g in &gens {
            decode(group.codes[id as usize], q, &mut m);
            apply(g, &mut m, n, q);
            let other = group.id_of[encode(&m, q) as usize];
            debug_assert_ne!(other, u32::MAX);
            union(&mut parent, id, other);
        }
    }
    let mut root_index = std::collections::HashMap::new();
    let mut representatives = Vec::new();
    let mut sizes = Vec::new();
    for id in 0..size as u32 {
        let r = find(&mut parent, id);
        let k = *root_index.entry(r).or_insert_with(|| {
            decode(group.codes[r as usize], q, &mut m);
            representatives.push(m.chunks(n).map(|c| c.to_vec()).collect());
            sizes.push(0u64);
            sizes.len() - 1
        });
        sizes[k] += 1;
    }
    // Flat orbits: those containing m·w for block-diagonal m.
    let r = spec.r;
    let mut flat = vec![false; representatives.len()];
    let mut mw = vec![0u64; n * n];
    for id in 0..size {
        decode(group.codes[id], q, &mut m);
        let block_diag = (0..n).all(|i| (0..n).all(|j| (i < r) == (j < r) || m[i * n + j] == 0));
        if !block_diag {
            continue;
        }
        for row in 0..n {
            for j in 0..n - r {
                mw[row * n + j] = m[row * n + r + j];
            }
            for i in 0..r {
                mw[row * n + n - r + i] = m[row * n + i];
            }
        }
        let other = group.id_of[encode(&mw, q) as usize];
        let root = find(&mut parent, other);
        flat[root_index[&root]] = true;
    }
    Ok(CosetPartition { representatives, sizes, flat, group_order: size as u64 })
}

/// One representative per double coset.
pub fn enumerate_double_cosets(spec: &CosetSpec, budget: u64) -> Result<Vec<Vec<Vec<u64>>>, CosetError> {
    Ok(partition(spec, budget)?.representatives)
}

/// Representatives of the flat double cosets.
pub fn flat_subset(spec: &CosetSpec, budget: u64) -> Result<Vec<Vec<Vec<u64>>>, CosetError> {
    let part = partition(spec, budget)?;
    Ok(part
        .representatives
        .into_iter()
        .zip(part.flat)
        .filter_map(|(rep, f)| f.then_some(rep))
        .collect())
}

/// Compare the flat-coset count with `1` (`r < n_d`) or `p^{l−1}(p−1)` (`r = n_d`).
pub fn verify_index_formula(spec: &CosetSpec, budget: u64) -> Result<IndexReport, CosetError> {
    let part = partition(spec, budget)?;
    let flat_count = part.flat.iter().filter(|&&f| f).count() as u64;
    let predicted_flat = spec.predicted_flat();
    Ok(IndexReport {
        total_cosets: part.representatives.len() as u64,
        flat_count,
        predicted_flat,
        matches: flat_count == predicted_flat,
    })
}
