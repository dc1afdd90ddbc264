//! Linear and von Neumann entropies of two-qubit states: total, marginal,
//! and conditional, all in one report.
//!
//! Von Neumann entropies are in nats throughout; [`nats_to_bits`] converts
//! for display.

use serde::{Deserialize, Serialize};

use crate::numkit::hermitian_eigen;
use crate::states::{partial_trace, DensityMatrix, ReducedDensity, Subsystem};

/// Eigenvalues below this are treated as exact zeros in `x ln x` (eigensolver
/// noise floor).
pub const LOG_CLAMP: f64 = 1e-12;

/// Tolerance for the entropy inequality flags: a violation must exceed it to
/// be reported.
pub const INEQUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EntropyKind {
    Linear,
    VonNeumann,
}

/// All six entropy scalars of a state under one convention:
/// total `s12`, marginals `s1`/`s2`, the conditionals
/// `cond21 = s12 - s1`, `cond12 = s12 - s2`, and their sum.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntropyReport {
    pub kind: EntropyKind,
    pub s12: f64,
    pub s1: f64,
    pub s2: f64,
    pub cond21: f64,
    pub cond12: f64,
    pub cond_sum: f64,
}

impl EntropyReport {
    fn assemble(kind: EntropyKind, s12: f64, s1: f64, s2: f64) -> Self {
        let cond21 = s12 - s1;
        let cond12 = s12 - s2;
        Self {
            kind,
            s12,
            s1,
            s2,
            cond21,
            cond12,
            cond_sum: cond21 + cond12,
        }
    }
}

/// Converts a von Neumann entropy from nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

fn reduced_purity(r: &ReducedDensity) -> f64 {
    r.purity()
}

/// Linear entropies `1 - Tr(rho^2)` of the state and its marginals.
pub fn linear_entropy(rho: &DensityMatrix) -> EntropyReport {
    let s12 = 1.0 - rho.purity();
    let s1 = 1.0 - reduced_purity(&partial_trace(rho, Subsystem::First));
    let s2 = 1.0 - reduced_purity(&partial_trace(rho, Subsystem::Second));
    EntropyReport::assemble(EntropyKind::Linear, s12, s1, s2)
}

fn spectrum_entropy(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|&x| if x > LOG_CLAMP { -x * x.ln() } else { 0.0 })
        .sum()
}

/// Von Neumann entropies `-Tr(rho ln rho)` in nats, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> EntropyReport {
    let eig = hermitian_eigen(rho.mat()).expect("validated states are Hermitian");
    let s12 = spectrum_entropy(&eig.values);
    let marginal = |keep| {
        let red = partial_trace(rho, keep);
        let eig = hermitian_eigen(red.mat()).expect("reduced states are Hermitian");
        spectrum_entropy(&eig.values)
    };
    EntropyReport::assemble(
        EntropyKind::VonNeumann,
        s12,
        marginal(Subsystem::First),
        marginal(Subsystem::Second),
    )
}

/// Whether the whole-vs-part inequalities `s12 >= s1` and `s12 >= s2` hold,
/// up to [`INEQUALITY_TOL`].
pub fn entropy_inequality_check(report: &EntropyReport) -> (bool, bool) {
    (
        report.s1 - report.s12 <= INEQUALITY_TOL,
        report.s2 - report.s12 <= INEQUALITY_TOL,
    )
}
