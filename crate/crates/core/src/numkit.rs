//! Dense complex linear algebra for 2x2 and 4x4 matrices.
//!
//! Everything downstream works with two-qubit operators, so this kernel only
//! supports the two sizes that actually occur. The eigensolver is a cyclic
//! complex Jacobi iteration: at 4x4 it is simple, dependency-free, and
//! accurate to near machine precision.

use num_complex::Complex64;
use thiserror::Error;

pub type Complex = Complex64;

/// Hermiticity acceptance threshold for eigensolver inputs (Frobenius norm
/// of `H - H^dag`).
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Jacobi convergence threshold on the off-diagonal Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-12;

/// Hard cap on Jacobi sweeps; exceeding it is an error.
pub const MAX_SWEEPS: usize = 100;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("unsupported matrix dimension {0} (only 2 and 4 are handled)")]
    BadDimension(usize),
    #[error("expected {expected} entries for a {dim}x{dim} matrix, got {found}")]
    BadEntryCount {
        dim: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian: |H - H^dag|_F = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("matrix function undefined at eigenvalue {0}")]
    UndefinedAtEigenvalue(f64),
    #[error("Kronecker product expects 2x2 factors, got {left}x{left} and {right}x{right}")]
    KronDimension { left: usize, right: usize },
}

/// Dense row-major complex matrix of dimension 2 or 4.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 4, "unsupported dimension {dim}");
        Self {
            dim,
            data: vec![Complex64::ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    /// Builds a matrix entry by entry. Panics on an unsupported dimension.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Validating constructor from row-major entries; rejects wrong counts,
    /// unsupported dimensions, and non-finite values.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self, MatrixError> {
        if dim != 2 && dim != 4 {
            return Err(MatrixError::BadDimension(dim));
        }
        if entries.len() != dim * dim {
            return Err(MatrixError::BadEntryCount {
                dim,
                expected: dim * dim,
                found: entries.len(),
            });
        }
        for (k, z) in entries.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(MatrixError::NonFinite {
                    row: k / dim,
                    col: k % dim,
                });
            }
        }
        Ok(Self { dim, data: entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scaled_re(&self, factor: f64) -> Self {
        self.scaled(Complex64::new(factor, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `H - H^dag`; zero exactly when Hermitian.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                sum += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        sum.sqrt()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    /// Rank-one matrix `u v^dag`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim, other.dim);
        let mut sum = Complex64::ZERO;
        for i in 0..self.dim {
            for j in 0..self.dim {
                sum += self[(i, j)] * other[(j, i)];
            }
        }
        sum
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl std::ops::Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl std::ops::Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl std::ops::Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        ComplexMatrix::from_fn(n, |i, j| (0..n).map(|k| self[(i, k)] * rhs[(k, j)]).sum())
    }
}

/// Kronecker product of two 2x2 matrices, subsystem 1 on the left:
/// `out[2*i1 + i2, 2*j1 + j2] = a[i1, j1] * b[i2, j2]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, MatrixError> {
    if a.dim != 2 || b.dim != 2 {
        return Err(MatrixError::KronDimension {
            left: a.dim,
            right: b.dim,
        });
    }
    Ok(ComplexMatrix::from_fn(4, |r, c| {
        a[(r / 2, c / 2)] * b[(r % 2, c % 2)]
    }))
}

/// Inner product `<a|b>` (conjugate-linear in the first argument).
pub fn vec_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues in ascending
/// order, matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `V diag(values) V^dag`, for reconstruction checks.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.vectors.dim();
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)].conj())
                .sum()
        })
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Converged when the off-diagonal Frobenius norm drops below
/// [`JACOBI_TOL`]; more than [`MAX_SWEEPS`] sweeps is an error.
///
/// Degenerate eigenspaces come back in whatever orthonormal basis the
/// rotations produce; callers needing a canonical basis re-orthogonalize.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<EigenDecomposition, MatrixError> {
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(MatrixError::NotHermitian { deviation });
    }
    let n = h.dim();
    // Work on the Hermitian average so roundoff asymmetry cannot drift.
    let mut a = ComplexMatrix::from_fn(n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)].conj()));
    let mut v = ComplexMatrix::identity(n);

    let mut converged = false;
    for _ in 0..=MAX_SWEEPS {
        if off_diagonal_norm(&a) < JACOBI_TOL {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let abs = apq.norm();
                if abs == 0.0 {
                    continue;
                }
                // Unitary plane rotation U zeroing a[p][q]: factor out the
                // phase of the pivot, then apply the real Jacobi rotation
                // with the smaller of the two candidate angles.
                let phase = apq / abs;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- A U  (columns p and q)
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * phase.conj() * aiq;
                    a[(i, q)] = s * aip + c * phase.conj() * aiq;
                }
                // A <- U^dag A  (rows p and q)
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c * apj - s * phase * aqj;
                    a[(q, j)] = s * apj + c * phase * aqj;
                }
                // The pivot is zero by construction; pin it and keep the
                // diagonal exactly real.
                a[(p, q)] = Complex64::ZERO;
                a[(q, p)] = Complex64::ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                // V <- V U
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * phase.conj() * viq;
                    v[(i, q)] = s * vip + c * phase.conj() * viq;
                }
            }
        }
    }
    if !converged {
        return Err(MatrixError::NoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(EigenDecomposition { values, vectors })
}

/// Spectral matrix function `V diag(f(lambda_i)) V^dag` of a Hermitian matrix.
/// Errors if `f` is not finite at some eigenvalue.
pub fn matrix_function(
    h: &ComplexMatrix,
    f: impl Fn(f64) -> f64,
) -> Result<ComplexMatrix, MatrixError> {
    let eig = hermitian_eigen(h)?;
    let mapped: Vec<f64> = eig.values.iter().map(|&x| f(x)).collect();
    for (&x, &y) in eig.values.iter().zip(&mapped) {
        if !y.is_finite() {
            return Err(MatrixError::UndefinedAtEigenvalue(x));
        }
    }
    let n = h.dim();
    Ok(ComplexMatrix::from_fn(n, |i, j| {
        (0..n)
            .map(|k| eig.vectors[(i, k)] * mapped[k] * eig.vectors[(j, k)].conj())
            .sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_entries(2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap()
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_entries(2, vec![c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]).unwrap()
    }

    fn random_hermitian(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
        let mut h = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            h[(i, i)] = c(rng.random_range(-1.0..1.0), 0.0);
            for j in i + 1..dim {
                let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        h
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2).unwrap(), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_of_pauli_z_pair_is_diagonal_signs() {
        let zz = kron(&pauli_z(), &pauli_z()).unwrap();
        let expected = [1.0, -1.0, -1.0, 1.0];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { expected[i] } else { 0.0 };
                assert!((zz[(i, j)] - c(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn kron_pauli_x_with_identity_swaps_blocks() {
        let xi = kron(&pauli_x(), &ComplexMatrix::identity(2)).unwrap();
        // Anti-diagonal 2x2 identity blocks.
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((xi[(i, j + 2)] - c(want, 0.0)).norm() < 1e-15);
                assert!((xi[(i + 2, j)] - c(want, 0.0)).norm() < 1e-15);
                assert!(xi[(i, j)].norm() < 1e-15);
                assert!(xi[(i + 2, j + 2)].norm() < 1e-15);
            }
        }
    }

    #[test]
    fn kron_rejects_wrong_dimensions() {
        let i4 = ComplexMatrix::identity(4);
        let i2 = ComplexMatrix::identity(2);
        assert!(matches!(
            kron(&i4, &i2),
            Err(MatrixError::KronDimension { .. })
        ));
    }

    #[test]
    fn kron_trace_factorizes() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a = ComplexMatrix::from_fn(2, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let b = ComplexMatrix::from_fn(2, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let lhs = kron(&a, &b).unwrap().trace();
            let rhs = a.trace() * b.trace();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn eigen_of_diagonal_matrix() {
        let h = ComplexMatrix::from_fn(4, |i, j| {
            if i == j {
                c(0.1 * (i as f64 + 1.0), 0.0)
            } else {
                Complex64::ZERO
            }
        });
        let eig = hermitian_eigen(&h).unwrap();
        let expected = [0.1, 0.2, 0.3, 0.4];
        for (got, want) in eig.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-14);
        }
        // Eigenvectors of a diagonal matrix are (phased) identity columns.
        for j in 0..4 {
            let col = eig.vectors.column(j);
            for (i, z) in col.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((z.norm() - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_of_bell_combination_matches_closed_form() {
        // sqrt(2) (sx sx + sz sz) has spectrum {-2 sqrt(2), 0, 0, 2 sqrt(2)}.
        let xx = kron(&pauli_x(), &pauli_x()).unwrap();
        let zz = kron(&pauli_z(), &pauli_z()).unwrap();
        let b = (&xx + &zz).scaled_re(2.0_f64.sqrt());
        let eig = hermitian_eigen(&b).unwrap();
        let s = 8.0_f64.sqrt();
        let expected = [-s, 0.0, 0.0, s];
        for (got, want) in eig.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
    }

    #[test]
    fn eigen_reconstruction_and_orthonormality_over_random_matrices() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for trial in 0..1000 {
            let dim = if trial % 3 == 0 { 2 } else { 4 };
            let h = random_hermitian(&mut rng, dim);
            let eig = hermitian_eigen(&h).unwrap();

            let recon = eig.reconstruct();
            assert!((&recon - &h).frobenius_norm() <= 1e-11);

            let gram = &eig.vectors.adjoint() * &eig.vectors;
            assert!((&gram - &ComplexMatrix::identity(dim)).frobenius_norm() <= 1e-11);

            let value_sum: f64 = eig.values.iter().sum();
            assert!((value_sum - h.trace().re).abs() <= 1e-11);
            let sq_sum: f64 = eig.values.iter().map(|x| x * x).sum();
            assert!((sq_sum - (&h * &h).trace().re).abs() <= 1e-10);

            for w in eig.values.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(4);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(
            hermitian_eigen(&m),
            Err(MatrixError::NotHermitian { .. })
        ));
    }

    #[test]
    fn matrix_exp_of_zero_is_identity() {
        let z = ComplexMatrix::zeros(4);
        let e = matrix_function(&z, f64::exp).unwrap();
        assert!((&e - &ComplexMatrix::identity(4)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn matrix_exp_of_diagonal_signs() {
        let zz = kron(&pauli_z(), &pauli_z()).unwrap();
        let e = matrix_function(&zz, f64::exp).unwrap();
        let expected = [
            1.0_f64.exp(),
            (-1.0_f64).exp(),
            (-1.0_f64).exp(),
            1.0_f64.exp(),
        ];
        for i in 0..4 {
            assert!((e[(i, i)] - c(expected[i], 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn matrix_function_identity_reproduces_input() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..50 {
            let h = random_hermitian(&mut rng, 4);
            let same = matrix_function(&h, |x| x).unwrap();
            assert!((&same - &h).frobenius_norm() <= 1e-11);
        }
    }

    #[test]
    fn matrix_log_of_indefinite_matrix_fails() {
        let z = pauli_z();
        assert!(matches!(
            matrix_function(&z, f64::ln),
            Err(MatrixError::UndefinedAtEigenvalue(_))
        ));
    }

    #[test]
    fn from_entries_rejects_non_finite() {
        let mut entries = vec![Complex64::ZERO; 4];
        entries[2] = c(f64::NAN, 0.0);
        assert!(matches!(
            ComplexMatrix::from_entries(2, entries),
            Err(MatrixError::NonFinite { row: 1, col: 0 })
        ));
    }
}
