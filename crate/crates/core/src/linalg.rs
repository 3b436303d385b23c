//! Small dense helpers over `&[f64]` coefficient vectors.
//!
//! Dimensions in this crate stay in the single digits, so everything here is
//! plain loops; `nalgebra` is only pulled in for eigen and singular value
//! decompositions.

use nalgebra::{DMatrix, DVector};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn scaled(a: &[f64], t: f64) -> Vec<f64> {
    a.iter().map(|v| v * t).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Row-major `rows x cols` matrix times vector.
pub fn mat_vec(m: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|i| dot(&m[i * cols..(i + 1) * cols], x))
        .collect()
}

/// Transpose-times-vector for a row-major `rows x cols` matrix.
pub fn mat_t_vec(m: &[f64], rows: usize, cols: usize, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j] += m[i * cols + j] * y[i];
        }
    }
    out
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot falls below `1e-12` relative to the
/// largest entry.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    let scale = a.iter().map(|r| max_abs(r)).fold(0.0, f64::max).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Numerical rank of a set of row vectors.
pub fn rank(rows: &[Vec<f64>], n: usize, tol: f64) -> usize {
    if rows.is_empty() || n == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top.max(1.0)).count()
}

/// Orthonormal basis of `{x : <x, r> = 0 for every row r}`.
pub fn null_space(rows: &[Vec<f64>], n: usize, tol: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return (0..n).map(|i| unit(n, i)).collect();
    }
    // Pad to a square-or-taller matrix so the SVD exposes all right singular vectors.
    let m_rows = rows.len().max(n);
    let m = DMatrix::from_fn(m_rows, n, |i, j| if i < rows.len() { rows[i][j] } else { 0.0 });
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max).max(1.0);
    let mut basis = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= tol * top {
            basis.push(v_t.row(k).iter().cloned().collect::<Vec<f64>>());
        }
    }
    basis
}

/// Orthonormal basis of the span of `vectors`.
pub fn span_basis(vectors: &[Vec<f64>], n: usize, tol: f64) -> Vec<Vec<f64>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let perp = null_space(vectors, n, tol);
    if perp.is_empty() {
        return (0..n).map(|i| unit(n, i)).collect();
    }
    null_space(&perp, n, tol)
}

/// Orthogonal projection of `x` onto the orthogonal complement of the span of
/// an orthonormal family.
pub fn project_out(x: &[f64], orthonormal: &[Vec<f64>]) -> Vec<f64> {
    let mut out = x.to_vec();
    for q in orthonormal {
        let c = dot(&out, q);
        for (o, qi) in out.iter_mut().zip(q) {
            *o -= c * qi;
        }
    }
    out
}

/// Symmetric eigen-decomposition: eigenvalues with their eigenvectors.
pub fn sym_eigen(m: &[Vec<f64>]) -> Vec<(f64, Vec<f64>)> {
    let n = m.len();
    let mat = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let eig = mat.symmetric_eigen();
    (0..n)
        .map(|k| {
            let v: DVector<f64> = eig.eigenvectors.column(k).into();
            (eig.eigenvalues[k], v.iter().cloned().collect())
        })
        .collect()
}

/// Iterates over every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    'outer: loop {
        f(&idx);
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                continue 'outer;
            }
        }
        return;
    }
}

/// Binomial coefficient, saturating.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Key for deduplicating vectors up to `1e-9`.
pub fn round_key(v: &[f64]) -> Vec<i64> {
    v.iter().map(|x| (x * 1e9).round() as i64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_enumerated_in_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| seen.push(s.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![0, 1]);
        assert_eq!(seen[5], vec![2, 3]);
        let mut count = 0;
        for_each_subset(3, 0, |_| count += 1);
        assert_eq!(count, 1);
        for_each_subset(3, 3, |s| assert_eq!(s, &[0, 1, 2]));
    }

    #[test]
    fn solve_and_null_space() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(solve(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 1.0]).is_none());
        let ns = null_space(&[vec![1.0, 1.0, 0.0]], 3, 1e-10);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(dot(v, &[1.0, 1.0, 0.0]).abs() < 1e-12);
        }
        assert_eq!(rank(&[vec![1.0, 2.0], vec![2.0, 4.0]], 2, 1e-10), 1);
    }
}
