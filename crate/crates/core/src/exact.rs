//! Exact rational and integer linear algebra for small dense systems.

use num_traits::{One, Signed, Zero};

use crate::lattice::Rational;

/// Row-reduces a copy of `rows` and returns (reduced rows, pivot columns).
fn row_echelon(rows: &[Vec<Rational>]) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let mut a: Vec<Vec<Rational>> = rows.to_vec();
    let n_rows = a.len();
    let n_cols = a.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n_cols {
        if r == n_rows {
            break;
        }
        let Some(p) = (r..n_rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = Rational::one() / a[r][c];
        for x in a[r].iter_mut() {
            *x *= inv;
        }
        for i in 0..n_rows {
            if i != r && !a[i][c].is_zero() {
                let factor = a[i][c];
                for j in 0..n_cols {
                    let delta = factor * a[r][j];
                    a[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

pub fn rank(rows: &[Vec<Rational>]) -> usize {
    row_echelon(rows).1.len()
}

pub fn rank_int(rows: &[Vec<i64>]) -> usize {
    rank(&to_rational_rows(rows))
}

pub fn to_rational_rows(rows: &[Vec<i64>]) -> Vec<Vec<Rational>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| Rational::from_integer(x)).collect())
        .collect()
}

/// Solves `a x = b` for a square nonsingular `a`; `None` when singular.
pub fn solve_square(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let aug: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let (red, pivots) = row_echelon(&aug);
    if pivots.len() != n || pivots.iter().any(|&c| c >= n) {
        return None;
    }
    Some((0..n).map(|i| red[i][n]).collect())
}

/// Coordinates `y` with `sum_j y_j basis_j = target`, if `target` lies in the span.
///
/// `basis` holds linearly independent vectors of a common length.
pub fn coordinates_in_basis(basis: &[Vec<i64>], target: &[Rational]) -> Option<Vec<Rational>> {
    let k = basis.len();
    if k == 0 {
        return target.iter().all(|t| t.is_zero()).then(Vec::new);
    }
    let m = target.len();
    // augmented system: rows are coordinates, columns are basis vectors + target
    let aug: Vec<Vec<Rational>> = (0..m)
        .map(|i| {
            let mut row: Vec<Rational> =
                basis.iter().map(|b| Rational::from_integer(b[i])).collect();
            row.push(target[i]);
            row
        })
        .collect();
    let (red, pivots) = row_echelon(&aug);
    if pivots.contains(&k) || pivots.len() != k {
        return None;
    }
    Some((0..k).map(|i| red[i][k]).collect())
}

/// Basis of the saturated integer kernel `{x in Z^m : rows . x = 0}`.
///
/// Column-style unimodular reduction: the trailing columns of the accumulated
/// unimodular transform span the kernel lattice.
pub fn integer_kernel(rows: &[Vec<i64>], m: usize) -> Vec<Vec<i64>> {
    // work on the transpose: column operations on A == row operations on A^T
    let mut a: Vec<Vec<i128>> = (0..m)
        .map(|j| rows.iter().map(|r| r[j] as i128).collect())
        .collect();
    let mut u: Vec<Vec<i128>> = (0..m)
        .map(|i| (0..m).map(|j| i128::from(i == j)).collect())
        .collect();
    let n_rows = rows.len();
    let mut pivot_row = 0;
    for c in 0..n_rows {
        if pivot_row == m {
            break;
        }
        // Euclid on column c among rows pivot_row..m
        loop {
            let nonzero: Vec<usize> = (pivot_row..m).filter(|&i| a[i][c] != 0).collect();
            if nonzero.len() <= 1 {
                if let Some(&i) = nonzero.first() {
                    a.swap(pivot_row, i);
                    u.swap(pivot_row, i);
                    pivot_row += 1;
                }
                break;
            }
            let &imin = nonzero.iter().min_by_key(|&&i| a[i][c].abs()).unwrap();
            for &i in &nonzero {
                if i == imin {
                    continue;
                }
                let q = a[i][c].div_euclid(a[imin][c]);
                for j in 0..n_rows {
                    a[i][j] -= q * a[imin][j];
                }
                for j in 0..m {
                    u[i][j] -= q * u[imin][j];
                }
            }
        }
    }
    u[pivot_row..]
        .iter()
        .map(|r| r.iter().map(|&x| x as i64).collect())
        .collect()
}

/// Determinant of a small rational matrix.
pub fn determinant(a: &[Vec<Rational>]) -> Rational {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for i in c + 1..n {
            let f = m[i][c] / m[c][c];
            for j in c..n {
                let d = f * m[c][j];
                m[i][j] -= d;
            }
        }
    }
    det
}

/// Absolute determinant of a square integer matrix.
pub fn abs_det_int(a: &[Vec<i64>]) -> Rational {
    determinant(&to_rational_rows(a)).abs()
}

/// All `k`-element index subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}
