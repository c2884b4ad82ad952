//! Small exact linear algebra over `Q` and `Z` for desk-scale ranks.

use num_traits::Zero;

use crate::rational::{Point, Rational};

/// Row-reduces `rows` in place and returns the pivot columns.
fn row_reduce(rows: &mut [Point]) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut top = 0;
    for col in 0..ncols {
        let Some(p) = (top..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(top, p);
        let inv = Rational::from_integer(1.into()) / &rows[top][col];
        for v in rows[top].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows.len() {
            if i != top && !rows[i][col].is_zero() {
                let factor = rows[i][col].clone();
                for c in 0..ncols {
                    let delta = &factor * &rows[top][c];
                    rows[i][c] -= delta;
                }
            }
        }
        pivots.push(col);
        top += 1;
        if top == rows.len() {
            break;
        }
    }
    pivots
}

/// Rank over `Q` of the given vectors.
pub fn rank(vectors: &[Point]) -> usize {
    let mut rows = vectors.to_vec();
    row_reduce(&mut rows).len()
}

/// Solves the square system `A x = b`; `None` when `A` is singular.
pub fn solve(a: &[Point], b: &[Rational]) -> Option<Point> {
    let n = a.len();
    let mut rows: Vec<Point> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = row_reduce(&mut rows);
    if pivots.len() < n || pivots.iter().any(|&c| c >= n) {
        return None;
    }
    Some(rows.into_iter().map(|r| r[n].clone()).collect())
}

/// Determinant of a small square integer matrix (Bareiss elimination).
pub fn det_i128(m: &[Vec<i128>]) -> Option<i128> {
    let n = m.len();
    if n == 0 {
        return Some(1);
    }
    let mut a = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| a[i][k] != 0) else {
                return Some(0);
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = a[i][j]
                    .checked_mul(a[k][k])?
                    .checked_sub(a[i][k].checked_mul(a[k][j])?)?;
                a[i][j] = v / prev;
            }
        }
        prev = a[k][k];
    }
    Some(sign * a[n - 1][n - 1])
}

/// Adjugate of a square integer matrix, so that `adj · m = det · I`.
pub fn adjugate_i128(m: &[Vec<i128>]) -> Option<Vec<Vec<i128>>> {
    let n = m.len();
    if n == 1 {
        return Some(vec![vec![1]]);
    }
    let mut adj = vec![vec![0i128; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<i128>> = (0..n)
                .filter(|&r| r != i)
                .map(|r| (0..n).filter(|&c| c != j).map(|c| m[r][c]).collect())
                .collect();
            let d = det_i128(&minor)?;
            // adj[j][i] = (-1)^{i+j} M_{ij}
            adj[j][i] = if (i + j) % 2 == 0 { d } else { -d };
        }
    }
    Some(adj)
}
