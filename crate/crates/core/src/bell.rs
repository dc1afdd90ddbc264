//! Bell operators built from measurement settings.
//!
//! A Bell operator is `a1 (x) a2 + a1 (x) b2 + b1 (x) a2 - b1 (x) b2` with
//! each factor a Bloch-vector observable `v . sigma`. Its spectrum has the
//! closed form `{+e1, +e2, -e2, -e1}` with
//! `e1^2 = 4 + 4 |a1 x b1| |a2 x b2|` and `e2^2 = 8 - e1^2`, so settings are
//! kept alongside the assembled matrix.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{hermitian_eigen, kron, vec_inner, vec_norm, ComplexMatrix, MatrixError};
use crate::states::{stream_rng, DensityMatrix};

/// Unit-norm acceptance tolerance for Bloch vectors.
pub const UNIT_TOL: f64 = 1e-12;

/// Eigenvalues closer than this are treated as one degenerate group when
/// building the Bell eigenbasis.
const DEGENERACY_TOL: f64 = 1e-8;

/// Default restart count for [`maximize_beta`]; enough for the shallow
/// 12-parameter landscape at desk scale.
pub const DEFAULT_RESTARTS: usize = 32;

/// Quantum ceiling `2 sqrt(2)` on the CHSH parameter.
pub fn tsirelson_bound() -> f64 {
    8.0_f64.sqrt()
}

#[derive(Debug, Error)]
pub enum BellError {
    #[error("Bloch vector norm is {0}, expected 1")]
    NonUnitVector(f64),
    #[error("direction too close to zero to normalize")]
    ZeroVector,
    #[error("top eigenvalue {0} outside [2, 2*sqrt(2)]")]
    TopEigenvalueOutOfRange(f64),
    #[error("observable is not a projector: |P^2 - P|_F = {0:.3e}")]
    NotProjector(f64),
    #[error("settings JSON: {0}")]
    Format(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Unit vector on the Bloch sphere; `v.observable()` is the +-1-valued
/// qubit observable `v . sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    x: f64,
    y: f64,
    z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, BellError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(BellError::NonUnitVector(norm));
        }
        Ok(Self { x, y, z })
    }

    /// Normalizes an arbitrary direction onto the sphere.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self, BellError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if norm < 1e-14 {
            return Err(BellError::ZeroVector);
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Uniform direction on the sphere.
    pub fn random(rng: &mut impl Rng) -> Self {
        loop {
            let (x, y, z): (f64, f64, f64) = (
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            );
            if let Ok(v) = Self::normalized(x, y, z) {
                return v;
            }
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross_norm(&self, other: &Self) -> f64 {
        let cx = self.y * other.z - self.z * other.y;
        let cy = self.z * other.x - self.x * other.z;
        let cz = self.x * other.y - self.y * other.x;
        (cx * cx + cy * cy + cz * cz).sqrt()
    }

    /// The observable `v . sigma` as a 2x2 matrix.
    pub fn observable(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(2);
        m[(0, 0)] = Complex64::new(self.z, 0.0);
        m[(0, 1)] = Complex64::new(self.x, -self.y);
        m[(1, 0)] = Complex64::new(self.x, self.y);
        m[(1, 1)] = Complex64::new(-self.z, 0.0);
        m
    }
}

/// The Pauli matrices `[sigma_x, sigma_y, sigma_z]`.
pub fn paulis() -> [ComplexMatrix; 3] {
    let c = Complex64::new;
    let mut sx = ComplexMatrix::zeros(2);
    sx[(0, 1)] = c(1.0, 0.0);
    sx[(1, 0)] = c(1.0, 0.0);
    let mut sy = ComplexMatrix::zeros(2);
    sy[(0, 1)] = c(0.0, -1.0);
    sy[(1, 0)] = c(0.0, 1.0);
    let mut sz = ComplexMatrix::zeros(2);
    sz[(0, 0)] = c(1.0, 0.0);
    sz[(1, 1)] = c(-1.0, 0.0);
    [sx, sy, sz]
}

/// The four measurement directions of a CHSH experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSettings {
    pub a1: BlochVector,
    pub b1: BlochVector,
    pub a2: BlochVector,
    pub b2: BlochVector,
}

/// A Bell operator: the settings, the assembled 4x4 matrix, and the two
/// non-negative eigenvalues of its `{+e1, +e2, -e2, -e1}` spectrum.
#[derive(Debug, Clone)]
pub struct BellOperator {
    settings: MeasurementSettings,
    mat: ComplexMatrix,
    eig_top: f64,
    eig_inner: f64,
}

impl BellOperator {
    pub fn new(settings: MeasurementSettings) -> Self {
        let a1 = settings.a1.observable();
        let b1 = settings.b1.observable();
        let a2 = settings.a2.observable();
        let b2 = settings.b2.observable();
        let mat = &(&(&kron(&a1, &a2).unwrap() + &kron(&a1, &b2).unwrap())
            + &kron(&b1, &a2).unwrap())
            - &kron(&b1, &b2).unwrap();
        let product = (settings.a1.cross_norm(&settings.b1) * settings.a2.cross_norm(&settings.b2))
            .clamp(0.0, 1.0);
        Self {
            settings,
            mat,
            eig_top: (4.0 + 4.0 * product).sqrt(),
            eig_inner: (4.0 - 4.0 * product).sqrt(),
        }
    }

    pub fn from_vectors(
        a1: BlochVector,
        b1: BlochVector,
        a2: BlochVector,
        b2: BlochVector,
    ) -> Self {
        Self::new(MeasurementSettings { a1, b1, a2, b2 })
    }

    /// A canonical operator with the prescribed top eigenvalue in
    /// `[2, 2 sqrt(2)]`: first-qubit settings separated so that
    /// `|a1 x b1| = (e1^2 - 4) / 4`, second-qubit settings at right angles.
    pub fn with_top_eigenvalue(eig_top: f64) -> Result<Self, BellError> {
        let span = (eig_top * eig_top - 4.0) / 4.0;
        if !(-1e-9..=1.0 + 1e-9).contains(&span) {
            return Err(BellError::TopEigenvalueOutOfRange(eig_top));
        }
        let theta = span.clamp(0.0, 1.0).asin();
        let s = 0.5_f64.sqrt();
        Ok(Self::from_vectors(
            BlochVector::new(1.0, 0.0, 0.0)?,
            BlochVector::normalized(theta.cos(), 0.0, theta.sin())?,
            BlochVector::new(s, 0.0, s)?,
            BlochVector::new(s, 0.0, -s)?,
        ))
    }

    pub fn settings(&self) -> &MeasurementSettings {
        &self.settings
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    /// Largest eigenvalue, in `[2, 2 sqrt(2)]`.
    pub fn top_eigenvalue(&self) -> f64 {
        self.eig_top
    }

    /// Second non-negative eigenvalue, `sqrt(8 - e1^2)`.
    pub fn inner_eigenvalue(&self) -> f64 {
        self.eig_inner
    }

    /// Closed-form spectrum in descending order.
    pub fn spectrum(&self) -> [f64; 4] {
        [self.eig_top, self.eig_inner, -self.eig_inner, -self.eig_top]
    }
}

/// Orthonormal eigenvectors of a Bell operator, ordered by descending
/// eigenvalue, with a deterministic choice inside degenerate eigenspaces.
#[derive(Debug, Clone)]
pub struct BellBasis {
    /// Eigenvector columns, descending eigenvalue order.
    pub vectors: ComplexMatrix,
    /// The matching closed-form eigenvalues `{+e1, +e2, -e2, -e1}`.
    pub values: [f64; 4],
}

impl BellBasis {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }
}

/// Eigenbasis of a Bell operator. Within each (nearly) degenerate group the
/// basis is fixed by Gram-Schmidt over the projections of the reference
/// vectors e1..e4 taken in index order, which makes the output independent
/// of the eigensolver's internal choices, global phases included.
pub fn bell_basis(b: &BellOperator) -> BellBasis {
    let eig = hermitian_eigen(b.mat()).expect("Bell operators are Hermitian by construction");
    // Descending order.
    let values_num: Vec<f64> = eig.values.iter().rev().copied().collect();
    let cols: Vec<Vec<Complex64>> = (0..4).map(|j| eig.vectors.column(3 - j)).collect();

    let mut vectors = ComplexMatrix::zeros(4);
    let mut start = 0;
    while start < 4 {
        let mut end = start + 1;
        while end < 4 && (values_num[end - 1] - values_num[end]).abs() <= DEGENERACY_TOL {
            end += 1;
        }
        // Projector onto the eigenspace; basis-independent.
        let mut proj = ComplexMatrix::zeros(4);
        for col in cols.iter().take(end).skip(start) {
            proj = &proj + &ComplexMatrix::outer(col, col);
        }
        let mut chosen: Vec<Vec<Complex64>> = Vec::with_capacity(end - start);
        for j in 0..4 {
            if chosen.len() == end - start {
                break;
            }
            let e_j: Vec<Complex64> = (0..4)
                .map(|i| {
                    if i == j {
                        Complex64::ONE
                    } else {
                        Complex64::ZERO
                    }
                })
                .collect();
            let mut w = proj.apply(&e_j);
            for u in &chosen {
                let overlap = vec_inner(u, &w);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= overlap * ui;
                }
            }
            let norm = vec_norm(&w);
            // Some reference vector always projects with norm >= 1/2, so a
            // generous cutoff avoids normalizing noise-dominated residuals.
            if norm > 0.05 {
                chosen.push(w.iter().map(|z| z / norm).collect());
            }
        }
        debug_assert_eq!(chosen.len(), end - start);
        for (offset, u) in chosen.iter().enumerate() {
            for i in 0..4 {
                vectors[(i, start + offset)] = u[i];
            }
        }
        start = end;
    }
    BellBasis {
        vectors,
        values: b.spectrum(),
    }
}

/// The CHSH parameter `Tr(rho B)`.
pub fn beta(rho: &DensityMatrix, b: &BellOperator) -> f64 {
    rho.mat().trace_product(b.mat()).re
}

/// Largest CHSH parameter reachable for a state, maximized over all Bell
/// operators by coordinate ascent: the parameter is linear in each Bloch
/// vector with the other three fixed, so each update jumps straight to the
/// normalized coefficient direction. Restarts are seeded independently from
/// `seed` and merged by max.
pub fn maximize_beta(rho: &DensityMatrix, restarts: usize, seed: u64) -> (f64, BellOperator) {
    assert!(restarts >= 1);
    let sigma = paulis();

    // Coefficient of one side's Bloch vector: g_k = Tr(rho (sigma_k (x) m))
    // or Tr(rho (m (x) sigma_k)) depending on which qubit it measures.
    let coefficient = |partner: &ComplexMatrix, first_qubit: bool| -> [f64; 3] {
        let mut g = [0.0; 3];
        for (k, s) in sigma.iter().enumerate() {
            let op = if first_qubit {
                kron(s, partner).unwrap()
            } else {
                kron(partner, s).unwrap()
            };
            g[k] = rho.mat().trace_product(&op).re;
        }
        g
    };

    let mut best: Option<(f64, MeasurementSettings)> = None;
    for restart in 0..restarts {
        let mut rng = stream_rng(seed, restart as u64);
        let mut a1 = BlochVector::random(&mut rng);
        let mut b1 = BlochVector::random(&mut rng);
        let mut a2 = BlochVector::random(&mut rng);
        let mut b2 = BlochVector::random(&mut rng);

        let eval = |a1: &BlochVector, b1: &BlochVector, a2: &BlochVector, b2: &BlochVector| {
            beta(rho, &BellOperator::from_vectors(*a1, *b1, *a2, *b2))
        };
        let mut current = eval(&a1, &b1, &a2, &b2);
        for _ in 0..500 {
            let sum2 = &a2.observable() + &b2.observable();
            let diff2 = &a2.observable() - &b2.observable();
            a1 = ascend(a1, coefficient(&sum2, true));
            b1 = ascend(b1, coefficient(&diff2, true));
            let sum1 = &a1.observable() + &b1.observable();
            let diff1 = &a1.observable() - &b1.observable();
            a2 = ascend(a2, coefficient(&sum1, false));
            b2 = ascend(b2, coefficient(&diff1, false));
            let next = eval(&a1, &b1, &a2, &b2);
            if next - current < 1e-12 {
                current = current.max(next);
                break;
            }
            current = next;
        }
        if best.as_ref().is_none_or(|(b, _)| current > *b) {
            best = Some((current, MeasurementSettings { a1, b1, a2, b2 }));
        }
    }
    let (value, settings) = best.expect("at least one restart");
    (value, BellOperator::new(settings))
}

fn ascend(previous: BlochVector, g: [f64; 3]) -> BlochVector {
    // A vanishing coefficient leaves the direction unconstrained; keep the
    // previous vector.
    BlochVector::normalized(g[0], g[1], g[2]).unwrap_or(previous)
}

/// The four 0/1-valued observables of a Clauser-Horne experiment, as 2x2
/// projectors (idempotent Hermitian).
#[derive(Debug, Clone)]
pub struct ChObservables {
    pub a1: ComplexMatrix,
    pub b1: ComplexMatrix,
    pub a2: ComplexMatrix,
    pub b2: ComplexMatrix,
}

impl ChObservables {
    pub fn new(
        a1: ComplexMatrix,
        b1: ComplexMatrix,
        a2: ComplexMatrix,
        b2: ComplexMatrix,
    ) -> Result<Self, BellError> {
        for p in [&a1, &b1, &a2, &b2] {
            let dev = p.hermitian_deviation();
            if dev > 1e-10 {
                return Err(BellError::NotProjector(dev));
            }
            let idem = (&(p * p) - p).frobenius_norm();
            if idem > 1e-10 {
                return Err(BellError::NotProjector(idem));
            }
        }
        Ok(Self { a1, b1, a2, b2 })
    }

    /// Rank-one projector `(I + n . sigma) / 2` onto the +1 eigenspace of a
    /// Bloch observable.
    pub fn projector(n: &BlochVector) -> ComplexMatrix {
        (&ComplexMatrix::identity(2) + &n.observable()).scaled_re(0.5)
    }
}

/// Both sides of the Clauser-Horne inequality together with the CHSH
/// parameter of the induced dichotomic observables `2P - 1`.
#[derive(Debug, Clone, Copy)]
pub struct ChTranslation {
    pub chsh_beta: f64,
    pub ch_left: f64,
    pub ch_right: f64,
}

/// Evaluates the CH probabilities against a state and translates them to the
/// CHSH parameter. `chsh_beta <= 2` holds exactly when
/// `ch_right <= ch_left`.
pub fn ch_translate(rho: &DensityMatrix, ch: &ChObservables) -> ChTranslation {
    let i2 = ComplexMatrix::identity(2);
    let prob = |m: &ComplexMatrix| rho.mat().trace_product(m).re;

    let p_a1 = prob(&kron(&ch.a1, &i2).unwrap());
    let p_a2 = prob(&kron(&i2, &ch.a2).unwrap());
    let p_a1a2 = prob(&kron(&ch.a1, &ch.a2).unwrap());
    let p_a1b2 = prob(&kron(&ch.a1, &ch.b2).unwrap());
    let p_b1a2 = prob(&kron(&ch.b1, &ch.a2).unwrap());
    let p_b1b2 = prob(&kron(&ch.b1, &ch.b2).unwrap());

    let dichotomic = |p: &ComplexMatrix| &p.scaled_re(2.0) - &i2;
    let a1 = dichotomic(&ch.a1);
    let b1 = dichotomic(&ch.b1);
    let a2 = dichotomic(&ch.a2);
    let b2 = dichotomic(&ch.b2);
    let combo = &(&(&kron(&a1, &a2).unwrap() + &kron(&a1, &b2).unwrap())
        + &kron(&b1, &a2).unwrap())
        - &kron(&b1, &b2).unwrap();

    ChTranslation {
        chsh_beta: rho.mat().trace_product(&combo).re,
        ch_left: p_a1 + p_a2,
        ch_right: p_a1a2 + p_a1b2 + p_b1a2 - p_b1b2,
    }
}

#[derive(Serialize, Deserialize)]
struct SettingsJson {
    a1: [f64; 3],
    b1: [f64; 3],
    a2: [f64; 3],
    b2: [f64; 3],
}

/// Parses the settings JSON format
/// `{"a1": [x,y,z], "b1": ..., "a2": ..., "b2": ...}` (unit vectors).
pub fn settings_from_json(text: &str) -> Result<MeasurementSettings, BellError> {
    let parsed: SettingsJson =
        serde_json::from_str(text).map_err(|e| BellError::Format(e.to_string()))?;
    let v = |t: [f64; 3]| BlochVector::new(t[0], t[1], t[2]);
    Ok(MeasurementSettings {
        a1: v(parsed.a1)?,
        b1: v(parsed.b1)?,
        a2: v(parsed.a2)?,
        b2: v(parsed.b2)?,
    })
}

pub fn settings_to_json(settings: &MeasurementSettings) -> String {
    let t = |v: &BlochVector| [v.x(), v.y(), v.z()];
    serde_json::to_string_pretty(&SettingsJson {
        a1: t(&settings.a1),
        b1: t(&settings.b1),
        a2: t(&settings.a2),
        b2: t(&settings.b2),
    })
    .expect("serialization cannot fail")
}
