//! Small dense integer linear algebra over `i128`.
//!
//! Every routine here works on matrices of size at most a handful of rows
//! with modest entries (Fourier indices, coset representatives), so `i128`
//! with fraction-free elimination never comes close to overflowing. Matrices
//! are passed as row-major `Vec<Vec<i128>>`.

use num_integer::Integer;

/// Dense integer matrix, row-major.
pub type IMat = Vec<Vec<i128>>;

/// Extended gcd: returns `(g, x, y)` with `g = gcd(a, b) >= 0` and `a x + b y = g`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let e = a.extended_gcd(&b);
    if e.gcd < 0 {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

/// Determinant via Bareiss fraction-free elimination.
pub fn det(m: &IMat) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a = m.clone();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Rank over the rationals (fraction-free elimination).
pub fn rank(m: &IMat) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut a = m.clone();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(piv, r);
        for i in r + 1..rows {
            if a[i][c] != 0 {
                let (f, g) = (a[r][c], a[i][c]);
                for j in c..cols {
                    a[i][j] = a[i][j] * f - a[r][j] * g;
                }
                let content = a[i].iter().fold(0i128, |acc, &x| acc.gcd(&x));
                if content > 1 {
                    a[i].iter_mut().for_each(|x| *x /= content);
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Basis of the saturated integer kernel `{v in Z^cols : m v = 0}`.
///
/// Column operations are accumulated in a unimodular matrix `U`; the columns of
/// `U` that end up opposite zero columns of `m U` span the kernel, and because
/// `U` is unimodular that span is saturated. The basis is returned as row
/// vectors reduced to Hermite normal form (pivot positive, entries above each
/// pivot reduced into `[0, pivot)`), so the output is canonical.
pub fn kernel_basis(m: &IMat, cols: usize) -> Vec<Vec<i128>> {
    kernel_and_complement(m, cols).0
}

/// Saturated kernel basis (as in [`kernel_basis`]) together with vectors
/// completing it to a basis of `Z^cols`; the complement has `rank(m)` vectors.
pub fn kernel_and_complement(m: &IMat, cols: usize) -> (Vec<Vec<i128>>, Vec<Vec<i128>>) {
    let rows = m.len();
    let mut a: IMat = m.clone();
    let mut u: IMat = (0..cols)
        .map(|i| (0..cols).map(|j| i128::from(i == j)).collect())
        .collect();
    let mut pivot_col = 0;
    for r in 0..rows {
        if pivot_col == cols {
            break;
        }
        // Gather the gcd of row r over columns pivot_col.. into column pivot_col.
        for c in pivot_col + 1..cols {
            if a[r][c] == 0 {
                continue;
            }
            let (x, y) = (a[r][pivot_col], a[r][c]);
            let (g, s, t) = ext_gcd(x, y);
            let (xg, yg) = (x / g, y / g);
            // [col_p, col_c] <- [s col_p + t col_c, -yg col_p + xg col_c] (det 1)
            for row in a.iter_mut() {
                let (cp, cc) = (row[pivot_col], row[c]);
                row[pivot_col] = s * cp + t * cc;
                row[c] = -yg * cp + xg * cc;
            }
            for row in u.iter_mut() {
                let (cp, cc) = (row[pivot_col], row[c]);
                row[pivot_col] = s * cp + t * cc;
                row[c] = -yg * cp + xg * cc;
            }
        }
        if a[r][pivot_col] != 0 {
            pivot_col += 1;
        }
    }
    let basis: Vec<Vec<i128>> = (pivot_col..cols)
        .map(|c| (0..cols).map(|i| u[i][c]).collect())
        .collect();
    let complement: Vec<Vec<i128>> = (0..pivot_col)
        .map(|c| (0..cols).map(|i| u[i][c]).collect())
        .collect();
    (hermite_rows(basis), complement)
}

/// Row Hermite normal form of a list of linearly independent integer vectors.
pub fn hermite_rows(mut rows: Vec<Vec<i128>>) -> Vec<Vec<i128>> {
    if rows.is_empty() {
        return rows;
    }
    let cols = rows[0].len();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        // Euclid down column c among rows r..
        loop {
            let nz: Vec<usize> = (r..rows.len()).filter(|&i| rows[i][c] != 0).collect();
            if nz.is_empty() {
                break;
            }
            let best = *nz.iter().min_by_key(|&&i| rows[i][c].abs()).unwrap();
            rows.swap(r, best);
            let mut done = true;
            for i in r + 1..rows.len() {
                if rows[i][c] != 0 {
                    let q = rows[i][c].div_euclid(rows[r][c]);
                    let pr = rows[r].clone();
                    rows[i].iter_mut().zip(pr.iter()).for_each(|(x, y)| *x -= q * y);
                    if rows[i][c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if rows[r][c] == 0 {
            continue;
        }
        if rows[r][c] < 0 {
            rows[r].iter_mut().for_each(|x| *x = -*x);
        }
        for i in 0..r {
            let q = rows[i][c].div_euclid(rows[r][c]);
            if q != 0 {
                let pr = rows[r].clone();
                rows[i].iter_mut().zip(pr.iter()).for_each(|(x, y)| *x -= q * y);
            }
        }
        r += 1;
    }
    rows
}

/// Smith normal form diagonal (elementary divisors, all nonnegative, each
/// dividing the next; zeros at the end), of length `min(rows, cols)`.
pub fn smith_diagonal(m: &IMat) -> Vec<i128> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut a = m.clone();
    let k = rows.min(cols);
    for t in 0..k {
        // Find a nonzero pivot of minimal absolute value in the remaining block.
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if a[i][j] != 0
                        && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                let mut d: Vec<i128> = (0..t).map(|i| a[i][i].abs()).collect();
                d.resize(k, 0);
                return normalize_divisors(d);
            };
            a.swap(t, bi);
            for row in a.iter_mut() {
                row.swap(t, bj);
            }
            let piv = a[t][t];
            let mut clean = true;
            for i in t + 1..rows {
                let q = a[i][t].div_euclid(piv);
                if q != 0 {
                    let pr = a[t].clone();
                    a[i].iter_mut().zip(pr.iter()).for_each(|(x, y)| *x -= q * y);
                }
                if a[i][t] != 0 {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                let q = a[t][j].div_euclid(piv);
                if q != 0 {
                    for row in a.iter_mut() {
                        let v = row[t];
                        row[j] -= q * v;
                    }
                }
                if a[t][j] != 0 {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
    }
    normalize_divisors((0..k).map(|i| a[i][i].abs()).collect())
}

/// Turn any diagonal into the divisibility chain with the same gcd structure.
fn normalize_divisors(mut d: Vec<i128>) -> Vec<i128> {
    let k = d.len();
    for i in 0..k {
        for j in i + 1..k {
            let (g, l) = (d[i].gcd(&d[j]), d[i].lcm(&d[j]));
            d[i] = g;
            d[j] = l;
        }
    }
    // Zeros must sit last: gcd(0, x) = x moves them back already, except all-zero tails.
    let mut nz: Vec<i128> = d.iter().copied().filter(|&x| x != 0).collect();
    nz.sort_unstable();
    nz.resize(k, 0);
    nz
}

/// `a^T s a`.
pub fn congruence(s: &IMat, a: &IMat) -> IMat {
    let n = a.len();
    let m = a[0].len();
    let mut sa = vec![vec![0i128; m]; n];
    for i in 0..n {
        for j in 0..m {
            sa[i][j] = (0..n).map(|k| s[i][k] * a[k][j]).sum();
        }
    }
    (0..m)
        .map(|i| (0..m).map(|j| (0..n).map(|k| a[k][i] * sa[k][j]).sum()).collect())
        .collect()
}

/// Modular exponentiation for small moduli.
pub fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u128;
    let mut bb = u128::from(b % m);
    let mm = u128::from(m);
    while e > 0 {
        if e & 1 == 1 {
            r = r * bb % mm;
        }
        bb = bb * bb % mm;
        e >>= 1;
    }
    r as u64
}

/// Primality by trial division (inputs are small).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Distinct prime divisors in increasing order.
pub fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// p-adic valuation of a nonzero integer (`None` for zero).
pub fn val_p(x: i128, p: u64) -> Option<u32> {
    if x == 0 {
        return None;
    }
    let p = i128::from(p);
    let (mut x, mut v) = (x, 0);
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i128]]) -> IMat {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn det_small() {
        assert_eq!(det(&m(&[&[2, 1], &[1, 2]])), 3);
        assert_eq!(det(&m(&[&[0, 1], &[1, 0]])), -1);
        assert_eq!(det(&m(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 10]])), -3);
        assert_eq!(det(&m(&[&[1, 2], &[2, 4]])), 0);
    }

    #[test]
    fn rank_small() {
        assert_eq!(rank(&m(&[&[0, 0], &[0, 0]])), 0);
        assert_eq!(rank(&m(&[&[2, -2], &[-2, 2]])), 1);
        assert_eq!(rank(&m(&[&[0, 2, 4], &[0, 1, 2], &[1, 0, 0]])), 2);
    }

    #[test]
    fn kernel_is_saturated() {
        let k = kernel_basis(&m(&[&[2, -2], &[-2, 2]]), 2);
        assert_eq!(k, vec![vec![1, 1]]);
        let k = kernel_basis(&m(&[&[2, 4, 6]]), 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert_eq!(2 * v[0] + 4 * v[1] + 6 * v[2], 0);
        }
        // Saturation: the 2x2 minors of the basis have gcd 1.
        let g = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(i, j)| k[0][i] * k[1][j] - k[0][j] * k[1][i])
            .fold(0i128, |a, b| a.gcd(&b));
        assert_eq!(g, 1);
    }

    #[test]
    fn smith_examples() {
        assert_eq!(smith_diagonal(&m(&[&[2, 4], &[6, 8]])), vec![2, 4]);
        assert_eq!(smith_diagonal(&m(&[&[3], &[6]])), vec![3]);
        assert_eq!(smith_diagonal(&m(&[&[0, 0], &[0, 5]])), vec![5, 0]);
        assert_eq!(smith_diagonal(&m(&[&[2, 0], &[0, 3]])), vec![1, 6]);
    }

    #[test]
    fn pow_mod_and_primes() {
        assert_eq!(pow_mod(3, 4, 7), 4);
        assert!(is_prime(7) && !is_prime(9));
        assert_eq!(prime_divisors(60), vec![2, 3, 5]);
        assert_eq!(val_p(-72, 2), Some(3));
    }
}
