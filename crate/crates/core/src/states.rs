//! Two-qubit density matrices: validation, reduction, and random sampling.
//!
//! Sampling uses the Ginibre construction `G G^dag / Tr(G G^dag)`: simple,
//! full support, and reproducible from an explicit RNG state. Parallel
//! callers derive independent streams with [`stream_rng`].

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{hermitian_eigen, kron, ComplexMatrix, MatrixError};

/// Tolerance for Hermiticity, unit trace, and positivity of states.
/// Eigenvalues in `[-STATE_TOL, 0)` are treated as eigensolver round-off:
/// clamped to zero and the state renormalized.
pub const STATE_TOL: f64 = 1e-10;

/// Default number of product terms in a separable sample: enough mixing to
/// explore the interior of the separable set.
pub const DEFAULT_SEPARABLE_TERMS: usize = 4;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("density matrix must be 4x4, got {0}x{0}")]
    WrongSize(usize),
    #[error("not Hermitian: |m - m^dag|_F = {0:.3e}")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    TraceNotOne(f64),
    #[error("negative eigenvalue {0:.3e}")]
    NegativeEigenvalue(f64),
    #[error("zero state vector")]
    ZeroVector,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("state JSON: {0}")]
    Format(String),
}

/// Which subsystem a partial trace keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// A validated two-qubit state: Hermitian, unit trace, positive semidefinite
/// (all within [`STATE_TOL`]).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

/// A validated single-qubit reduced state.
#[derive(Debug, Clone)]
pub struct ReducedDensity {
    mat: ComplexMatrix,
}

/// An explicit separable decomposition: positive weights summing to one and
/// the product-state factors they multiply.
#[derive(Debug, Clone)]
pub struct SeparableSample {
    pub weights: Vec<f64>,
    pub factors: Vec<(ReducedDensity, ReducedDensity)>,
}

impl DensityMatrix {
    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    /// Projector onto a (normalized copy of a) four-component state vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self, StateError> {
        if amplitudes.len() != 4 {
            return Err(StateError::WrongSize(amplitudes.len()));
        }
        let norm = crate::numkit::vec_norm(amplitudes);
        if norm < 1e-300 {
            return Err(StateError::ZeroVector);
        }
        let v: Vec<Complex64> = amplitudes.iter().map(|z| z / norm).collect();
        validate_density(&ComplexMatrix::outer(&v, &v))
    }

    /// `Tr(rho^2)`, in `[1/4, 1]` for a valid state.
    pub fn purity(&self) -> f64 {
        self.mat.entries().iter().map(|z| z.norm_sqr()).sum()
    }
}

impl ReducedDensity {
    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn new(mat: ComplexMatrix) -> Result<Self, StateError> {
        if mat.dim() != 2 {
            return Err(StateError::WrongSize(mat.dim()));
        }
        let dev = mat.hermitian_deviation();
        if dev > STATE_TOL {
            return Err(StateError::NotHermitian(dev));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(StateError::TraceNotOne(tr.re));
        }
        let eig = hermitian_eigen(&mat)?;
        if eig.values[0] < -STATE_TOL {
            return Err(StateError::NegativeEigenvalue(eig.values[0]));
        }
        Ok(Self { mat })
    }

    pub fn purity(&self) -> f64 {
        self.mat.entries().iter().map(|z| z.norm_sqr()).sum()
    }
}

impl SeparableSample {
    /// Assembles `sum_k w_k rho_1k (x) rho_2k`.
    pub fn assemble(&self) -> DensityMatrix {
        let mut acc = ComplexMatrix::zeros(4);
        for (w, (f1, f2)) in self.weights.iter().zip(&self.factors) {
            let prod = kron(f1.mat(), f2.mat()).expect("factors are 2x2");
            acc = &acc + &prod.scaled_re(*w);
        }
        validate_density(&acc).expect("convex mixture of product states is a state")
    }
}

/// Validates a 4x4 matrix as a two-qubit state. Eigenvalues in
/// `[-STATE_TOL, 0)` are clamped to zero and the matrix renormalized to unit
/// trace; anything below `-STATE_TOL` is rejected.
pub fn validate_density(m: &ComplexMatrix) -> Result<DensityMatrix, StateError> {
    if m.dim() != 4 {
        return Err(StateError::WrongSize(m.dim()));
    }
    let dev = m.hermitian_deviation();
    if dev > STATE_TOL {
        return Err(StateError::NotHermitian(dev));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(StateError::TraceNotOne(tr.re));
    }
    let eig = hermitian_eigen(m)?;
    if eig.values[0] < -STATE_TOL {
        return Err(StateError::NegativeEigenvalue(eig.values[0]));
    }
    if eig.values[0] < 0.0 {
        let clamped: Vec<f64> = eig.values.iter().map(|&x| x.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        let mat = ComplexMatrix::from_fn(4, |i, j| {
            (0..4)
                .map(|k| eig.vectors[(i, k)] * (clamped[k] / total) * eig.vectors[(j, k)].conj())
                .sum()
        });
        return Ok(DensityMatrix { mat });
    }
    Ok(DensityMatrix { mat: m.clone() })
}

/// Reduced state of the kept subsystem, under the `index = 2*i1 + i2`
/// ordering convention of [`kron`].
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> ReducedDensity {
    let m = rho.mat();
    let mat = match keep {
        Subsystem::First => {
            ComplexMatrix::from_fn(2, |i, j| (0..2).map(|k| m[(2 * i + k, 2 * j + k)]).sum())
        }
        Subsystem::Second => {
            ComplexMatrix::from_fn(2, |i, j| (0..2).map(|k| m[(2 * k + i, 2 * k + j)]).sum())
        }
    };
    ReducedDensity { mat }
}

fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn ginibre_state(rng: &mut impl Rng, dim: usize, rank: usize) -> ComplexMatrix {
    loop {
        let g: Vec<Vec<Complex64>> = (0..dim)
            .map(|_| (0..rank).map(|_| complex_gaussian(rng)).collect())
            .collect();
        let mut m = ComplexMatrix::from_fn(dim, |i, j| {
            (0..rank).map(|k| g[i][k] * g[j][k].conj()).sum()
        });
        let tr = m.trace().re;
        // A zero trace has probability zero; guard and redraw anyway.
        if tr > 1e-12 {
            m = m.scaled_re(1.0 / tr);
            return m;
        }
    }
}

/// Random two-qubit state of the given rank from the Ginibre ensemble:
/// `G G^dag / Tr(G G^dag)` with `G` a 4 x rank matrix of independent
/// standard complex Gaussians. Deterministic for a given RNG state.
pub fn sample_density(rng: &mut impl Rng, rank: usize) -> DensityMatrix {
    assert!((1..=4).contains(&rank), "rank must be in 1..=4");
    validate_density(&ginibre_state(rng, 4, rank)).expect("Ginibre matrix is a state")
}

/// Random single-qubit state of the given rank from the Ginibre ensemble.
pub fn sample_reduced(rng: &mut impl Rng, rank: usize) -> ReducedDensity {
    assert!((1..=2).contains(&rank), "rank must be 1 or 2");
    ReducedDensity::new(ginibre_state(rng, 2, rank)).expect("Ginibre matrix is a state")
}

/// Random convex combination of `terms` random product states. Weights are
/// uniform on the simplex; each factor is a single-qubit Ginibre draw of
/// random rank. Returns the decomposition together with the assembled state.
pub fn sample_separable(rng: &mut impl Rng, terms: usize) -> (SeparableSample, DensityMatrix) {
    assert!(terms >= 1, "need at least one term");
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let factors: Vec<(ReducedDensity, ReducedDensity)> = (0..terms)
        .map(|_| {
            let r1 = rng.random_range(1..=2);
            let r2 = rng.random_range(1..=2);
            (sample_reduced(rng, r1), sample_reduced(rng, r2))
        })
        .collect();
    let sample = SeparableSample { weights, factors };
    let rho = sample.assemble();
    (sample, rho)
}

/// Independent, deterministically derived RNG stream: stream `k` of a master
/// seed. Used to keep parallel sample loops reproducible regardless of
/// scheduling.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha12Rng {
    // splitmix64 over (master, stream), expanded to a 32-byte seed
    let mut state = master_seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut next = || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&next().to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Parses the density-matrix JSON format: `{"matrix": [[..4 entries..] x 4]}`
/// with each entry `[re, im]`, then validates the state.
pub fn density_from_json(text: &str) -> Result<DensityMatrix, StateError> {
    let parsed: StateJson =
        serde_json::from_str(text).map_err(|e| StateError::Format(e.to_string()))?;
    if parsed.matrix.len() != 4 || parsed.matrix.iter().any(|row| row.len() != 4) {
        return Err(StateError::Format(
            "matrix must be 4 rows of 4 [re, im] entries".into(),
        ));
    }
    let entries: Vec<Complex64> = parsed
        .matrix
        .iter()
        .flatten()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect();
    let m = ComplexMatrix::from_entries(4, entries)?;
    validate_density(&m)
}

/// Serializes a state in the same JSON format accepted by
/// [`density_from_json`].
pub fn density_to_json(rho: &DensityMatrix) -> String {
    let m = rho.mat();
    let matrix: Vec<Vec<[f64; 2]>> = (0..4)
        .map(|i| (0..4).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    serde_json::to_string_pretty(&StateJson { matrix }).expect("serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::vec_inner;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn maximally_mixed() -> DensityMatrix {
        validate_density(&ComplexMatrix::identity(4).scaled_re(0.25)).unwrap()
    }

    fn singlet() -> DensityMatrix {
        let s = 0.5_f64.sqrt();
        DensityMatrix::pure(&[c(0., 0.), c(s, 0.), c(-s, 0.), c(0., 0.)]).unwrap()
    }

    #[test]
    fn accepts_maximally_mixed() {
        let rho = maximally_mixed();
        assert!((rho.purity() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        let m = ComplexMatrix::from_fn(4, |i, j| {
            if i != j {
                Complex64::ZERO
            } else if i < 3 {
                c(0.5, 0.0)
            } else {
                c(-0.5, 0.0)
            }
        });
        assert!(matches!(
            validate_density(&m),
            Err(StateError::NegativeEigenvalue(_))
        ));
    }

    #[test]
    fn rejects_bad_trace_and_non_hermitian() {
        let m = ComplexMatrix::identity(4);
        assert!(matches!(
            validate_density(&m),
            Err(StateError::TraceNotOne(_))
        ));

        let mut m = ComplexMatrix::identity(4).scaled_re(0.25);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(
            validate_density(&m),
            Err(StateError::NotHermitian(_))
        ));
    }

    #[test]
    fn accepts_singlet_projector_as_rank_one() {
        let rho = singlet();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let eig = hermitian_eigen(rho.mat()).unwrap();
        let big = eig.values.iter().filter(|&&x| x > 1e-10).count();
        assert_eq!(big, 1);
    }

    #[test]
    fn clamps_marginally_negative_eigenvalues() {
        let eps = 5e-11;
        let m = ComplexMatrix::from_fn(4, |i, j| {
            if i != j {
                Complex64::ZERO
            } else {
                c([0.5, 0.5, eps, -eps][i], 0.0)
            }
        });
        let rho = validate_density(&m).unwrap();
        let eig = hermitian_eigen(rho.mat()).unwrap();
        assert!(eig.values[0] >= 0.0);
        assert!((rho.mat().trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn partial_trace_of_maximally_mixed() {
        let rho = maximally_mixed();
        for keep in [Subsystem::First, Subsystem::Second] {
            let red = partial_trace(&rho, keep);
            assert!(
                (red.mat() - &ComplexMatrix::identity(2).scaled_re(0.5)).frobenius_norm() < 1e-14
            );
        }
    }

    #[test]
    fn singlet_marginals_are_maximally_mixed() {
        let rho = singlet();
        for keep in [Subsystem::First, Subsystem::Second] {
            let red = partial_trace(&rho, keep);
            assert!(
                (red.mat() - &ComplexMatrix::identity(2).scaled_re(0.5)).frobenius_norm() < 1e-12
            );
        }
    }

    #[test]
    fn partial_trace_recovers_product_factors() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..50 {
            let f1 = sample_reduced(&mut rng, 2);
            let f2 = sample_reduced(&mut rng, 2);
            let rho = validate_density(&kron(f1.mat(), f2.mat()).unwrap()).unwrap();
            let r1 = partial_trace(&rho, Subsystem::First);
            let r2 = partial_trace(&rho, Subsystem::Second);
            assert!((r1.mat() - f1.mat()).frobenius_norm() < 1e-12);
            assert!((r2.mat() - f2.mat()).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_preserves_trace_and_is_linear() {
        let mut rng = stream_rng(12, 0);
        for _ in 0..100 {
            let a = sample_density(&mut rng, 4);
            let b = sample_density(&mut rng, 2);
            let alpha = 0.37;
            let mixed =
                validate_density(&(&a.mat().scaled_re(alpha) + &b.mat().scaled_re(1.0 - alpha)))
                    .unwrap();
            for keep in [Subsystem::First, Subsystem::Second] {
                let ra = partial_trace(&a, keep);
                let rb = partial_trace(&b, keep);
                let rm = partial_trace(&mixed, keep);
                assert!((rm.mat().trace().re - 1.0).abs() < 1e-12);
                let lin = &ra.mat().scaled_re(alpha) + &rb.mat().scaled_re(1.0 - alpha);
                assert!((rm.mat() - &lin).frobenius_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_one_sample_is_pure() {
        let mut rng = stream_rng(13, 0);
        for _ in 0..100 {
            let rho = sample_density(&mut rng, 1);
            assert!((1.0 - rho.purity()).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_rank_matches_request() {
        let mut rng = stream_rng(14, 0);
        for rank in 1..=4 {
            for _ in 0..100 {
                let rho = sample_density(&mut rng, rank);
                let eig = hermitian_eigen(rho.mat()).unwrap();
                let above = eig.values.iter().filter(|&&x| x > 1e-10).count();
                assert!(above <= rank);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_for_a_seed() {
        let a = sample_density(&mut ChaCha12Rng::seed_from_u64(42), 4);
        let b = sample_density(&mut ChaCha12Rng::seed_from_u64(42), 4);
        assert_eq!(a.mat().entries(), b.mat().entries());
    }

    #[test]
    fn bulk_rank_four_samples_all_validate() {
        let mut rng = stream_rng(15, 0);
        for _ in 0..10_000 {
            let m = ginibre_state(&mut rng, 4, 4);
            assert!(validate_density(&m).is_ok());
        }
    }

    #[test]
    fn single_term_with_pure_factors_assembles_to_pure_product() {
        let mut rng = stream_rng(16, 0);
        let f1 = sample_reduced(&mut rng, 1);
        let f2 = sample_reduced(&mut rng, 1);
        let sample = SeparableSample {
            weights: vec![1.0],
            factors: vec![(f1, f2)],
        };
        let rho = sample.assemble();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separable_samples_validate_and_weights_sum_to_one() {
        let mut rng = stream_rng(17, 0);
        for _ in 0..200 {
            let (sample, rho) = sample_separable(&mut rng, 4);
            let total: f64 = sample.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(sample.weights.iter().all(|&w| w > 0.0));
            assert!((rho.mat().trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stream_rng_streams_are_stable_and_distinct() {
        let mut a = stream_rng(99, 0);
        let mut b = stream_rng(99, 0);
        let mut c = stream_rng(99, 1);
        let (xa, xb, xc): (u64, u64, u64) = (a.random(), b.random(), c.random());
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let mut rng = stream_rng(18, 0);
        let rho = sample_density(&mut rng, 3);
        let text = density_to_json(&rho);
        let back = density_from_json(&text).unwrap();
        for (x, y) in rho.mat().entries().iter().zip(back.mat().entries()) {
            assert!((x - y).norm() < 1e-15);
        }

        assert!(matches!(
            density_from_json("{\"matrix\": [[0]]}"),
            Err(StateError::Format(_))
        ));
        // Structurally valid JSON that is not a state.
        let bad = "{\"matrix\": [
            [[1.0,0],[0,0],[0,0],[0,0]],
            [[0,0],[1.0,0],[0,0],[0,0]],
            [[0,0],[0,0],[1.0,0],[0,0]],
            [[0,0],[0,0],[0,0],[1.0,0]]]}";
        assert!(matches!(
            density_from_json(bad),
            Err(StateError::TraceNotOne(_))
        ));
    }

    #[test]
    fn pure_constructor_normalizes() {
        let v = [c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let rho = DensityMatrix::pure(&v).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        assert!((vec_inner(&rho.mat().column(0), &rho.mat().column(0)).re - 1.0).abs() < 1e-12);
    }
}
