//! Dense matrix kernels shared by every other module.
//!
//! Matrix functions (square root, inverse square root, spectral absolute
//! value) go through a symmetric eigendecomposition. The dimensions met in
//! practice are tiny (d <= ~10, d²m <= ~100), so O(n³) eigensolves are both
//! the cheapest and the most robust option.
//!
//! Storage is column-major, which is what makes [`vec`] the usual column
//! stacking operator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative asymmetry tolerated by the symmetric routines.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues above `-CLAMP_TOL * ||a||` are clamped to zero before rooting.
pub const CLAMP_TOL: f64 = 1e-10;
/// Smallest relative eigenvalue accepted by [`pd_inv_sqrt`].
pub const SINGULAR_TOL: f64 = 1e-12;

/// Maximum absolute row sum.
pub fn inf_norm(a: &Matrix) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn symmetrize(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

pub fn check_symmetric(a: &Matrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = inf_norm(a);
    let asymmetry = inf_norm(&(a - a.transpose()));
    if asymmetry > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry, scale });
    }
    Ok(())
}

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
///
/// The input is symmetrized first, so tiny roundoff asymmetries are harmless.
pub fn sym_eigen(a: &Matrix) -> (Vector, Matrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vector::zeros(0), Matrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Rebuilds `V diag(f(λ)) Vᵀ`.
fn spectral_rebuild(values: &Vector, vectors: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let fl = f(lambda);
        scaled.column_mut(j).scale_mut(fl);
    }
    symmetrize(&(scaled * vectors.transpose()))
}

/// Applies a scalar function to the spectrum of a symmetric matrix.
pub fn spectral_apply(a: &Matrix, f: impl Fn(f64) -> f64) -> Result<Matrix> {
    check_symmetric(a)?;
    let (values, vectors) = sym_eigen(a);
    Ok(spectral_rebuild(&values, &vectors, f))
}

fn spectral_norm_of(values: &Vector) -> f64 {
    values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Eigenvalues of a symmetric matrix, descending.
pub fn eigvals_sym(a: &Matrix) -> Result<Vector> {
    check_symmetric(a)?;
    Ok(sym_eigen(a).0)
}

/// Symmetric PSD square root. Slightly negative eigenvalues (sampling noise)
/// are clamped to zero.
pub fn pd_sqrt(a: &Matrix) -> Result<Matrix> {
    check_symmetric(a)?;
    let (values, vectors) = sym_eigen(a);
    let scale = spectral_norm_of(&values);
    if let Some(&min) = values.as_slice().last() {
        if min < -CLAMP_TOL * scale {
            return Err(Error::IndefiniteMatrix { min_eigenvalue: min });
        }
    }
    Ok(spectral_rebuild(&values, &vectors, |l| l.max(0.0).sqrt()))
}

/// Inverse of the symmetric square root of a positive definite matrix.
pub fn pd_inv_sqrt(a: &Matrix) -> Result<Matrix> {
    check_symmetric(a)?;
    let (values, vectors) = sym_eigen(a);
    let scale = spectral_norm_of(&values);
    let min = values.as_slice().last().copied().unwrap_or(0.0);
    if scale == 0.0 || min <= SINGULAR_TOL * scale {
        return Err(Error::SingularMatrix { min_eigenvalue: min });
    }
    Ok(spectral_rebuild(&values, &vectors, |l| 1.0 / l.sqrt()))
}

/// Square root and inverse square root from a single eigendecomposition.
pub fn pd_sqrt_and_inv(a: &Matrix) -> Result<(Matrix, Matrix)> {
    check_symmetric(a)?;
    let (values, vectors) = sym_eigen(a);
    let scale = spectral_norm_of(&values);
    let min = values.as_slice().last().copied().unwrap_or(0.0);
    if scale == 0.0 || min <= SINGULAR_TOL * scale {
        return Err(Error::SingularMatrix { min_eigenvalue: min });
    }
    Ok((
        spectral_rebuild(&values, &vectors, f64::sqrt),
        spectral_rebuild(&values, &vectors, |l| 1.0 / l.sqrt()),
    ))
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn inv_spd(a: &Matrix) -> Result<Matrix> {
    let chol = nalgebra::Cholesky::new(symmetrize(a)).ok_or_else(|| Error::SingularMatrix {
        min_eigenvalue: sym_eigen(a).0.as_slice().last().copied().unwrap_or(0.0),
    })?;
    Ok(symmetrize(&chol.inverse()))
}

/// Ratio of the largest to the smallest absolute eigenvalue (infinite when
/// the matrix is exactly singular).
pub fn condition_number_sym(a: &Matrix) -> f64 {
    let (values, _) = sym_eigen(a);
    let max = spectral_norm_of(&values);
    let min = values.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec(a: &Matrix) -> Vector {
    Vector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &[f64], nrows: usize, ncols: usize) -> Matrix {
    assert_eq!(v.len(), nrows * ncols, "unvec length mismatch");
    Matrix::from_column_slice(nrows, ncols, v)
}

/// True iff the smallest eigenvalue is at least `-tol * ||a||`.
pub fn is_psd(a: &Matrix, tol: f64) -> bool {
    if a.nrows() == 0 {
        return true;
    }
    let (values, _) = sym_eigen(a);
    let scale = spectral_norm_of(&values);
    values.iter().all(|&v| v >= -tol * scale)
}

/// Relative Frobenius distance `||a - b|| / max(||b||, tiny)`.
pub fn rel_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> Matrix {
        Matrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn sqrt_identity_and_diagonal() {
        let i2 = Matrix::identity(2, 2);
        assert!(rel_frobenius(&pd_sqrt(&i2).unwrap(), &i2) < 1e-14);
        let s = pd_sqrt(&Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 9.0]))).unwrap();
        assert!((s - Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 3.0]))).norm() < 1e-14);
    }

    #[test]
    fn sqrt_two_by_two_closed_form() {
        // eigenvalues 3, 1 on (1,1)/√2, (1,-1)/√2
        let a = m2(2.0, 1.0, 1.0, 2.0);
        let r3 = 3f64.sqrt();
        let expected = m2((r3 + 1.0) / 2.0, (r3 - 1.0) / 2.0, (r3 - 1.0) / 2.0, (r3 + 1.0) / 2.0);
        let s = pd_sqrt(&a).unwrap();
        assert!(rel_frobenius(&s, &expected) < 1e-14);
        assert!(rel_frobenius(&(&s * &s), &a) < 1e-12);
        let r = pd_inv_sqrt(&a).unwrap();
        assert!((&r * &a * &r - Matrix::identity(2, 2)).norm() < 1e-7);
        assert!((&s * &r - Matrix::identity(2, 2)).norm() < 1e-7);
    }

    #[test]
    fn inv_sqrt_simple() {
        let i3 = Matrix::identity(3, 3);
        assert!((pd_inv_sqrt(&i3).unwrap() - &i3).norm() < 1e-14);
        let r = pd_inv_sqrt(&Matrix::from_element(1, 1, 4.0)).unwrap();
        assert!((r[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sqrt_errors() {
        let asym = m2(1.0, 0.5, 0.0, 1.0);
        assert!(matches!(pd_sqrt(&asym), Err(Error::NotSymmetric { .. })));
        let indef = m2(1.0, 0.0, 0.0, -1.0);
        assert!(matches!(pd_sqrt(&indef), Err(Error::IndefiniteMatrix { .. })));
        let sing = m2(1.0, 0.0, 0.0, 0.0);
        assert!(matches!(pd_inv_sqrt(&sing), Err(Error::SingularMatrix { .. })));
        // tiny negative eigenvalue gets clamped
        let near = m2(1.0, 0.0, 0.0, -1e-13);
        let s = pd_sqrt(&near).unwrap();
        assert_eq!(s[(1, 1)], 0.0);
    }

    #[test]
    fn kron_examples() {
        let i2 = Matrix::identity(2, 2);
        assert_eq!(kron(&i2, &i2), Matrix::identity(4, 4));
        let k = kron(&m2(1.0, 0.0, 0.0, 2.0), &Matrix::from_element(1, 1, 3.0));
        assert_eq!(k, m2(3.0, 0.0, 0.0, 6.0));
        // block layout: (a ⊗ b)[(i*p + k, j*q + l)] = a[i,j] b[k,l]
        let a = m2(1.0, 2.0, 3.0, 4.0);
        let b = m2(5.0, 6.0, 7.0, 8.0);
        let k = kron(&a, &b);
        assert_eq!(k[(0, 3)], 2.0 * 6.0);
        assert_eq!(k[(3, 0)], 3.0 * 7.0);
    }

    #[test]
    fn vec_examples() {
        let a = m2(1.0, 2.0, 3.0, 4.0);
        assert_eq!(vec(&a).as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(vec(&Matrix::identity(2, 2)).as_slice(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(unvec(vec(&a).as_slice(), 2, 2), a);
    }

    #[test]
    fn eigvals_examples() {
        let v = eigvals_sym(&Matrix::identity(4, 4)).unwrap();
        assert!(v.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let v = eigvals_sym(&Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 1.0, 2.0]))).unwrap();
        assert_eq!(v.as_slice(), &[3.0, 2.0, 1.0]);
        let v = eigvals_sym(&m2(2.0, 1.0, 1.0, 2.0)).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-14 && (v[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn psd_examples() {
        assert!(is_psd(&Matrix::identity(2, 2), 1e-8));
        assert!(!is_psd(&m2(1.0, 0.0, 0.0, -1.0), 1e-8));
        let m = Matrix::from_row_slice(3, 2, &[1.0, -2.0, 0.5, 3.0, -1.5, 0.25]);
        assert!(is_psd(&(m.transpose() * &m), 1e-8));
        let m = Matrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, -1.5, 0.25]);
        assert!(is_psd(&(m.transpose() * &m), 1e-8));
    }

    fn small_matrix(n: usize, m: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-2.0f64..2.0, n * m).prop_map(move |v| Matrix::from_vec(n, m, v))
    }

    /// SPD matrix with condition number at most 1e6.
    fn spd(n: usize) -> impl Strategy<Value = Matrix> {
        (small_matrix(n, n), proptest::collection::vec(0.0f64..6.0, n)).prop_map(move |(m, logs)| {
            let q = m.qr().q();
            let d = Vector::from_iterator(n, logs.iter().map(|l| 10f64.powf(*l - 3.0)));
            symmetrize(&(&q * Matrix::from_diagonal(&d) * q.transpose()))
        })
    }

    proptest! {
        #[test]
        fn sqrt_squares_back(a in spd(4)) {
            let s = pd_sqrt(&a).unwrap();
            prop_assert!(rel_frobenius(&(&s * &s), &a) < 1e-7);
            let r = pd_inv_sqrt(&a).unwrap();
            let id = &r * &a * &r;
            prop_assert!((id - Matrix::identity(4, 4)).norm() < 1e-7);
        }

        #[test]
        fn eigvals_sum_to_trace(m in small_matrix(5, 5)) {
            let a = symmetrize(&m);
            let ev = eigvals_sym(&a).unwrap();
            let tr = a.trace();
            prop_assert!((ev.sum() - tr).abs() <= 1e-9 * tr.abs().max(1.0));
            for w in ev.as_slice().windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }

        #[test]
        fn vec_kron_identity(a in small_matrix(2, 3), b in small_matrix(3, 2), c in small_matrix(2, 2)) {
            let lhs = vec(&(&a * &b * &c));
            let rhs = kron(&c.transpose(), &a) * vec(&b);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn kron_mixed_product(a in small_matrix(2, 2), b in small_matrix(2, 2), c in small_matrix(2, 2), d in small_matrix(2, 2)) {
            let lhs = kron(&a, &b) * kron(&c, &d);
            let rhs = kron(&(&a * &c), &(&b * &d));
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
