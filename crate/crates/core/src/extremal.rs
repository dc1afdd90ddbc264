//! Constructive state families that trace out the region boundaries:
//! Bell-diagonal mixtures, the Gibbs family `exp(lambda B) / Z`, the
//! parametric boundary curves, and the marginal-recentered auxiliary matrix.

use std::f64::consts::LN_2;
use thiserror::Error;

use crate::bell::{bell_basis, tsirelson_bound, BellOperator};
use crate::numkit::ComplexMatrix;
use crate::states::{partial_trace, validate_density, DensityMatrix, StateError, Subsystem};

/// `|lambda| * e1` beyond this overflows `exp` in the partition function.
pub const GIBBS_LAMBDA_GUARD: f64 = 700.0;

#[derive(Debug, Error)]
pub enum ExtremalError {
    #[error("{name} = {value} outside its domain")]
    ParamOutOfRange { name: &'static str, value: f64 },
    #[error("lambda = {0} overflows the partition function for this operator")]
    Overflow(f64),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Scalar data of a Gibbs state `exp(lambda B) / Z`: the rate `lambda`, the
/// half-sum and half-difference of the two non-negative eigenvalues, and the
/// partition function `4 cosh(lambda mu) cosh(lambda nu)`.
#[derive(Debug, Clone, Copy)]
pub struct GibbsParams {
    pub lambda: f64,
    pub half_sum: f64,
    pub half_diff: f64,
    pub partition: f64,
}

/// One point of a parametric boundary curve.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub beta_val: f64,
    pub entropy_val: f64,
    pub lambda: f64,
}

/// State diagonal in the Bell eigenbasis of `b` (descending eigenvalue
/// order) with the given weights.
pub fn bell_diagonal(weights: [f64; 4], b: &BellOperator) -> Result<DensityMatrix, ExtremalError> {
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < -1e-12) || (total - 1.0).abs() > 1e-9 {
        return Err(ExtremalError::ParamOutOfRange {
            name: "weights",
            value: total,
        });
    }
    let basis = bell_basis(b);
    let mut acc = ComplexMatrix::zeros(4);
    for (k, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            let v = basis.vector(k);
            acc = &acc + &ComplexMatrix::outer(&v, &v).scaled_re(w.max(0.0));
        }
    }
    Ok(validate_density(&acc)?)
}

/// Bell-diagonal state with paired weights `(1 + alpha)/4` on the two
/// largest eigenvalues and `(1 - alpha)/4` on the two smallest. Its linear
/// entropy is `3/4 - alpha^2/4` and its CHSH value `alpha (e1 + e2) / 2`.
pub fn paired_bell_mixture(alpha: f64, b: &BellOperator) -> Result<DensityMatrix, ExtremalError> {
    if !(-1.0..=1.0).contains(&alpha) {
        return Err(ExtremalError::ParamOutOfRange {
            name: "alpha",
            value: alpha,
        });
    }
    let hi = 0.25 * (1.0 + alpha);
    let lo = 0.25 * (1.0 - alpha);
    bell_diagonal([hi, hi, lo, lo], b)
}

/// Mixture of two Bell eigenstates with weights `r` and `1 - r`. `levels`
/// selects which eigenvalues (indices into the descending spectrum) carry
/// the weight, which is how negative CHSH values are reached. Its linear
/// entropy is `2 r (1 - r)`.
pub fn two_level_bell_mixture(
    r: f64,
    levels: (usize, usize),
    b: &BellOperator,
) -> Result<DensityMatrix, ExtremalError> {
    if !(0.0..=1.0).contains(&r) {
        return Err(ExtremalError::ParamOutOfRange {
            name: "r",
            value: r,
        });
    }
    if levels.0 >= 4 || levels.1 >= 4 || levels.0 == levels.1 {
        return Err(ExtremalError::ParamOutOfRange {
            name: "levels",
            value: levels.0 as f64,
        });
    }
    let mut weights = [0.0; 4];
    weights[levels.0] = r;
    weights[levels.1] = 1.0 - r;
    bell_diagonal(weights, b)
}

/// The Gibbs state `exp(lambda B) / Tr exp(lambda B)`, built spectrally with
/// exponent shifting so the usable `lambda` range is limited only by the
/// partition function itself.
pub fn gibbs_state(
    lambda: f64,
    b: &BellOperator,
) -> Result<(DensityMatrix, GibbsParams), ExtremalError> {
    let top = b.top_eigenvalue();
    if lambda.abs() * top > GIBBS_LAMBDA_GUARD {
        return Err(ExtremalError::Overflow(lambda));
    }
    let spectrum = b.spectrum();
    let shift = lambda.abs() * top;
    let shifted: Vec<f64> = spectrum
        .iter()
        .map(|&e| (lambda * e - shift).exp())
        .collect();
    let total: f64 = shifted.iter().sum();
    let weights = [
        shifted[0] / total,
        shifted[1] / total,
        shifted[2] / total,
        shifted[3] / total,
    ];
    let half_sum = 0.5 * (b.top_eigenvalue() + b.inner_eigenvalue());
    let half_diff = 0.5 * (b.top_eigenvalue() - b.inner_eigenvalue());
    let params = GibbsParams {
        lambda,
        half_sum,
        half_diff,
        partition: 4.0 * (lambda * half_sum).cosh() * (lambda * half_diff).cosh(),
    };
    Ok((bell_diagonal(weights, b)?, params))
}

/// `ln cosh x` without overflow.
fn ln_cosh(x: f64) -> f64 {
    x.abs() + (-2.0 * x.abs()).exp().ln_1p() - LN_2
}

/// The parametric `(CHSH, von Neumann entropy)` curve of the Gibbs family
/// of a Bell operator with top eigenvalue `top_eig`, evaluated analytically:
/// `beta = mu tanh(lambda mu) + nu tanh(lambda nu)` and
/// `S = 2 ln 2 + ln cosh(lambda mu) + ln cosh(lambda nu) - lambda beta`.
pub fn gibbs_curve(top_eig: f64, lambdas: &[f64]) -> Result<Vec<CurvePoint>, ExtremalError> {
    if !(2.0 - 1e-12..=tsirelson_bound() + 1e-12).contains(&top_eig) {
        return Err(ExtremalError::ParamOutOfRange {
            name: "top_eig",
            value: top_eig,
        });
    }
    let inner = (8.0 - top_eig * top_eig).max(0.0).sqrt();
    let mu = 0.5 * (top_eig + inner);
    let nu = 0.5 * (top_eig - inner);
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let beta_val = mu * (lambda * mu).tanh() + nu * (lambda * nu).tanh();
            let entropy_val =
                2.0 * LN_2 + ln_cosh(lambda * mu) + ln_cosh(lambda * nu) - lambda * beta_val;
            CurvePoint {
                beta_val,
                entropy_val,
                lambda,
            }
        })
        .collect())
}

/// `rho - I (x) rho_2 / 2 - rho_1 (x) I / 2 + I / 2`: Hermitian with unit
/// trace and the same Bell-basis diagonal as `rho`, but not necessarily
/// positive, so it comes back as a plain matrix.
pub fn marginal_recentered(rho: &DensityMatrix) -> ComplexMatrix {
    let r1 = partial_trace(rho, Subsystem::First);
    let r2 = partial_trace(rho, Subsystem::Second);
    let i2 = ComplexMatrix::identity(2);
    let term1 = crate::numkit::kron(&i2, r2.mat()).unwrap().scaled_re(0.5);
    let term2 = crate::numkit::kron(r1.mat(), &i2).unwrap().scaled_re(0.5);
    let half_id = ComplexMatrix::identity(4).scaled_re(0.5);
    &(&(rho.mat() - &term1) - &term2) + &half_id
}
