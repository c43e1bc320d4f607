//! Dense symmetric eigensolves with a deterministic ordering and sign
//! convention, plus Sturm-sequence bisection for tridiagonal spectra.

use nalgebra::{DMatrix, DVector};

use crate::error::SolveError;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Eigenpairs sorted by ascending eigenvalue. Column `k` of `vectors`
/// belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Full eigendecomposition of a real symmetric matrix.
///
/// Each eigenvector is flipped so that its largest-magnitude component is
/// positive. Components within a relative 1e-9 of the maximum count as tied and
/// the lowest index wins, which pins down parity eigenstates whose two largest
/// entries are equal in magnitude.
pub fn symmetric_eigen(m: DMatrix<f64>) -> Result<EigenPairs, SolveError> {
    let n = m.nrows();
    let (values, vectors) = raw_eigen(m)?;
    Ok(finish((0..n).map(|k| (values[k], vectors.column(k).into_owned())).collect()))
}

/// Eigendecomposition of a symmetric matrix that is block diagonal under the
/// index partition `blocks`; entries coupling different blocks are ignored.
///
/// Each block is diagonalized in full. Ordering and sign convention match
/// [`symmetric_eigen`], with exact ties between blocks ordered by block.
pub fn block_symmetric_eigen(m: &DMatrix<f64>, blocks: &[Vec<usize>]) -> Result<EigenPairs, SolveError> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(SolveError::Dimension(format!("{}x{} matrix is not square", n, m.ncols())));
    }
    let mut seen = vec![false; n];
    for &i in blocks.iter().flatten() {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(SolveError::Dimension(format!("blocks do not partition 0..{n}")));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(SolveError::Dimension(format!("blocks do not partition 0..{n}")));
    }
    let mut pairs = Vec::with_capacity(n);
    for block in blocks.iter().filter(|b| !b.is_empty()) {
        let sub = DMatrix::from_fn(block.len(), block.len(), |r, c| m[(block[r], block[c])]);
        let (values, vectors) = raw_eigen(sub)?;
        for k in 0..block.len() {
            let mut col = DVector::zeros(n);
            for (r, &i) in block.iter().enumerate() {
                col[i] = vectors[(r, k)];
            }
            pairs.push((values[k], col));
        }
    }
    Ok(finish(pairs))
}

fn raw_eigen(m: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>), SolveError> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(SolveError::Dimension(format!("{}x{} matrix is not square", n, m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::Convergence("matrix has non-finite entries".into()));
    }
    let eig = m
        .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| SolveError::Convergence(format!("no convergence for dimension {n}")))?;
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// Sort ascending (stable) and apply the sign convention.
fn finish(mut pairs: Vec<(f64, DVector<f64>)>) -> EigenPairs {
    let n = pairs.len();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values = DVector::from_iterator(n, pairs.iter().map(|p| p.0));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, (_, mut col)) in pairs.into_iter().enumerate() {
        fix_sign(&mut col);
        vectors.set_column(dst, &col);
    }
    EigenPairs { values, vectors }
}

/// Flip `col` so its first largest-magnitude component is positive.
pub fn fix_sign(col: &mut DVector<f64>) {
    let max = col.amax();
    let pivot = col.iter().position(|v| v.abs() >= max * (1.0 - 1e-9)).unwrap_or(0);
    if col[pivot] < 0.0 {
        col.neg_mut();
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix (`diag`, `off`)
/// strictly below `x`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * (off[i - 1].abs() + 1.0) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `k` eigenvalues of a symmetric tridiagonal matrix by bisection.
///
/// `off[i]` couples rows `i` and `i + 1`.
pub fn tridiagonal_lowest_eigenvalues(diag: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n, "off-diagonal length must be n - 1");
    let k = k.min(n);
    // Gershgorin interval
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);
    (0..k)
        .map(|j| {
            let (mut a, mut b) = (lo, hi);
            while b - a > 4.0 * f64::EPSILON * scale {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if sturm_count(diag, off, mid) > j {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_sign_fixed() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let e = symmetric_eigen(m.clone()).unwrap();
        let s2 = 2f64.sqrt();
        let expected = [2.0 - s2, 2.0, 2.0 + s2];
        for (v, x) in e.values.iter().zip(expected) {
            assert!((v - x).abs() < 1e-12);
        }
        for k in 0..3 {
            let col = e.vectors.column(k);
            let r = &m * col - col * e.values[k];
            assert!(r.norm() < 1e-12);
            let max = col.amax();
            let first = col.iter().find(|v| v.abs() >= max * (1.0 - 1e-9)).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(symmetric_eigen(DMatrix::zeros(2, 3)), Err(SolveError::Dimension(_))));
    }

    #[test]
    fn rejects_nan() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(1, 1)] = f64::NAN;
        assert!(matches!(symmetric_eigen(m), Err(SolveError::Convergence(_))));
    }

    #[test]
    fn bisection_matches_dense() {
        let diag: Vec<f64> = (0..21).map(|i| 0.3 * (i as f64 - 10.0).powi(2)).collect();
        let off = vec![-2.5; 20];
        let mut m = DMatrix::from_diagonal(&DVector::from_vec(diag.clone()));
        for i in 0..20 {
            m[(i, i + 1)] = off[i];
            m[(i + 1, i)] = off[i];
        }
        let dense = symmetric_eigen(m).unwrap();
        let low = tridiagonal_lowest_eigenvalues(&diag, &off, 8);
        for (k, v) in low.iter().enumerate() {
            assert!((v - dense.values[k]).abs() < 1e-11, "{k}: {v} vs {}", dense.values[k]);
        }
    }

    #[test]
    fn blocks_match_full_solve() {
        // two decoupled blocks interleaved in index order
        let mut m = DMatrix::<f64>::zeros(5, 5);
        let a = [0usize, 2, 4];
        let b = [1usize, 3];
        let va = [[1.0, 0.3, -0.2], [0.3, 2.0, 0.5], [-0.2, 0.5, 3.5]];
        let vb = [[0.5, 0.7], [0.7, 2.5]];
        for r in 0..3 {
            for c in 0..3 {
                m[(a[r], a[c])] = va[r][c];
            }
        }
        for r in 0..2 {
            for c in 0..2 {
                m[(b[r], b[c])] = vb[r][c];
            }
        }
        let full = symmetric_eigen(m.clone()).unwrap();
        let blk = block_symmetric_eigen(&m, &[a.to_vec(), b.to_vec()]).unwrap();
        assert!((&full.values - &blk.values).amax() < 1e-12);
        assert!((&full.vectors - &blk.vectors).amax() < 1e-12);
    }

    #[test]
    fn blocks_must_partition() {
        let m = DMatrix::<f64>::identity(3, 3);
        assert!(block_symmetric_eigen(&m, &[vec![0, 1]]).is_err());
        assert!(block_symmetric_eigen(&m, &[vec![0, 1], vec![1, 2]]).is_err());
    }
}
