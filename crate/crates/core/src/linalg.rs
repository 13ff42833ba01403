//! Small dense matrices and a cyclic Jacobi eigensolver.
//!
//! Every matrix in this toolkit is tiny (metric tensors on 2- or 3-dimensional
//! input spaces, layer blocks a few units wide), so the representation favours
//! determinism and clarity over scale: row-major `Vec<f64>` storage, no
//! blocking, and an eigensolver that performs the same rotations in the same
//! order on every run.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from a row-major nested list. Rejects ragged or empty input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Parse("matrix must have at least one row and one column".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Parse(format!(
                    "ragged matrix: row of length {} where {} expected",
                    r.len(),
                    cols
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// Column `c` as an owned vector.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch {
                context: "matmul",
                expected: self.cols,
                actual: rhs.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::ShapeMismatch {
                context: "matvec",
                expected: self.cols,
                actual: x.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = 0.0;
            for c in 0..self.cols {
                acc += row[c] * x[c];
            }
            out[r] = acc;
        }
        Ok(out)
    }

    /// (M + Mᵀ)/2. Only meaningful for square matrices.
    pub fn symmetrized(&self) -> Matrix {
        debug_assert!(self.is_square());
        let mut s = self.clone();
        for r in 0..self.rows {
            for c in (r + 1)..self.cols {
                let v = 0.5 * (self[(r, c)] + self[(c, r)]);
                s[(r, c)] = v;
                s[(c, r)] = v;
            }
        }
        s
    }

    /// Largest |M_ij − M_ji| over all pairs.
    pub fn max_asymmetry(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in (r + 1)..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Unit vector in the direction of `a`, or `None` for the zero vector.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(a.iter().map(|v| v / n).collect())
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn axpy(y: &[f64], alpha: f64, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(y.len(), x.len());
    y.iter().zip(x).map(|(y, x)| y + alpha * x).collect()
}

/// Eigenpairs of a symmetric matrix, values ascending, vectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const JACOBI_REL_TOL: f64 = 1e-14;

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Rotations are applied in a fixed (p, q) order and skipped once an entry
/// drops below `JACOBI_REL_TOL` times the largest input entry, which makes the
/// result bit-reproducible across runs. Fails if the off-diagonal mass has not
/// vanished after [`JACOBI_MAX_SWEEPS`] sweeps; in practice matrices up to
/// 16×16 converge in fewer than ten.
pub fn jacobi_eigen(m: &Matrix) -> Result<SymmetricEigen> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch {
            context: "jacobi_eigen",
            expected: m.rows,
            actual: m.cols,
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("jacobi_eigen input"));
    }
    let n = m.rows;
    let mut a = m.clone();
    let mut v = Matrix::identity(n);

    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(SymmetricEigen {
            values: vec![0.0; n],
            vectors: v,
        });
    }
    let tol = JACOBI_REL_TOL * scale;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= tol {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                // Smaller-angle root of t² + 2tθ − 1 = 0; large θ needs the
                // series form to avoid overflow in θ².
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    let nip = aip - s * (aiq + tau * aip);
                    let niq = aiq + s * (aip - tau * aiq);
                    a[(i, p)] = nip;
                    a[(p, i)] = nip;
                    a[(i, q)] = niq;
                    a[(q, i)] = niq;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip - s * (viq + tau * vip);
                    v[(i, q)] = viq + s * (vip - tau * viq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    // Sort ascending; ties keep the original rotation order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .partial_cmp(&a[(j, j)])
            .expect("eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Singular values of an arbitrary rectangular matrix, descending.
///
/// Computed as square roots of the eigenvalues of the smaller Gram matrix;
/// plenty accurate for rank reporting on the matrix sizes used here.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    let gram = if m.rows >= m.cols {
        m.transpose().matmul(m)?
    } else {
        m.matmul(&m.transpose())?
    };
    let eig = jacobi_eigen(&gram.symmetrized())?;
    let mut sv: Vec<f64> = eig.values.iter().map(|l| l.max(0.0).sqrt()).collect();
    sv.reverse();
    Ok(sv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn matmul_matvec_basics() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab.to_rows(), vec![vec![2.0, 1.0], vec![4.0, 3.0]]);
        assert_eq!(a.matvec(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert!(a.matvec(&[1.0]).is_err());
    }

    #[test]
    fn from_rows_rejects_ragged() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(Matrix::from_rows(&[]).is_err());
    }

    #[test]
    fn jacobi_known_3x3() {
        // Pullback of the identity through [[1,2,2],[3,1,5]]; eigenvalues are
        // 0 and 22 ± √394 with kernel spanned by (8,1,−5).
        let g = Matrix::from_rows(&[
            vec![10.0, 5.0, 17.0],
            vec![5.0, 5.0, 9.0],
            vec![17.0, 9.0, 29.0],
        ])
        .unwrap();
        let eig = jacobi_eigen(&g).unwrap();
        let s = 394f64.sqrt();
        assert_close(eig.values[0], 0.0, 1e-12);
        assert_close(eig.values[1], 22.0 - s, 1e-9);
        assert_close(eig.values[2], 22.0 + s, 1e-9);

        let kernel = eig.vectors.column(0);
        let expected = normalized(&[8.0, 1.0, -5.0]).unwrap();
        let cosine = dot(&kernel, &expected).abs();
        assert!((1.0 - cosine * cosine).sqrt() <= 1e-9);
    }

    #[test]
    fn jacobi_identity_and_zero() {
        let eig = jacobi_eigen(&Matrix::identity(3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
        let eig = jacobi_eigen(&Matrix::zeros(4, 4)).unwrap();
        assert_eq!(eig.values, vec![0.0; 4]);
    }

    #[test]
    fn jacobi_reconstructs_input() {
        let g = Matrix::from_rows(&[
            vec![2.0, -1.0, 0.3],
            vec![-1.0, 4.0, 0.9],
            vec![0.3, 0.9, 1.5],
        ])
        .unwrap();
        let eig = jacobi_eigen(&g).unwrap();
        let n = 3;
        for r in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += eig.values[k] * eig.vectors[(r, k)] * eig.vectors[(c, k)];
                }
                assert_close(acc, g[(r, c)], 1e-12);
            }
        }
        // Orthonormal columns.
        for i in 0..n {
            for j in 0..n {
                let d = dot(&eig.vectors.column(i), &eig.vectors.column(j));
                assert_close(d, if i == j { 1.0 } else { 0.0 }, 1e-12);
            }
        }
    }

    #[test]
    fn singular_values_rank_deficient() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let sv = singular_values(&m).unwrap();
        assert_close(sv[0], 2.0, 1e-12);
        assert_close(sv[1], 0.0, 1e-7);
    }

    #[test]
    fn jacobi_rejects_nonsquare_and_nonfinite() {
        assert!(jacobi_eigen(&Matrix::zeros(2, 3)).is_err());
        let mut m = Matrix::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(jacobi_eigen(&m).is_err());
    }
}
