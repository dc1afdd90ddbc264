//! The compatibility regions between the CHSH parameter and each entropy
//! measure, as evaluable bounds, membership verdicts, and the threshold
//! constants below which violation becomes possible.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use thiserror::Error;

use crate::bell::{beta, tsirelson_bound, BellOperator};
use crate::entropy::{linear_entropy, von_neumann_entropy};
use crate::states::DensityMatrix;

/// Membership tolerance: looser than raw arithmetic because the CHSH value
/// and the entropy each carry eigensolver noise.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("CHSH parameter {0} outside [-2*sqrt(2), 2*sqrt(2)]")]
    BetaOutOfRange(f64),
}

/// The four (CHSH parameter, entropy) compatibility regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RegionId {
    /// Total linear entropy vs the CHSH parameter.
    LinearTotal,
    /// Sum of conditional linear entropies vs the CHSH parameter.
    LinearCondSum,
    /// Total von Neumann entropy vs the CHSH parameter.
    VnTotal,
    /// Sum of conditional von Neumann entropies vs the CHSH parameter.
    VnCondSum,
}

impl RegionId {
    pub const ALL: [RegionId; 4] = [
        RegionId::LinearTotal,
        RegionId::LinearCondSum,
        RegionId::VnTotal,
        RegionId::VnCondSum,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            RegionId::LinearTotal => "linear-total",
            RegionId::LinearCondSum => "linear-cond",
            RegionId::VnTotal => "vn-total",
            RegionId::VnCondSum => "vn-cond",
        }
    }
}

/// Membership of one `(CHSH, entropy)` point in one region. `margin` is the
/// signed entropy distance to the nearest bound; negative means outside.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegionVerdict {
    pub region: RegionId,
    pub beta_val: f64,
    pub entropy_val: f64,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub inside: bool,
    pub margin: f64,
}

/// Thresholds from the region corners: entropy levels above which no CHSH
/// violation is possible, plus the largest CHSH value compatible with a
/// non-negative von Neumann conditional-entropy sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdId {
    LinearEntropy,
    LinearCondSum,
    VnEntropy,
    VnCondSum,
    VnCondZeroBeta,
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

fn vn_total_bound(beta_val: f64) -> f64 {
    let bp = (beta_val / tsirelson_bound()).clamp(-1.0, 1.0);
    2.0 * LN_2 - xlnx(1.0 + bp) - xlnx(1.0 - bp)
}

/// Largest entropy value compatible with the given CHSH parameter.
pub fn upper_bound(region: RegionId, beta_val: f64) -> Result<f64, RegionError> {
    if beta_val.abs() > tsirelson_bound() + 1e-12 {
        return Err(RegionError::BetaOutOfRange(beta_val));
    }
    let b2 = beta_val * beta_val;
    Ok(match region {
        RegionId::LinearTotal => (0.75 - b2 / 16.0).min(1.0 - b2 / 8.0),
        RegionId::LinearCondSum => (0.5 - b2 / 8.0).min(1.0 - b2 / 4.0),
        RegionId::VnTotal => vn_total_bound(beta_val),
        RegionId::VnCondSum => 2.0 * vn_total_bound(beta_val) - 2.0 * LN_2,
    })
}

/// Smallest entropy value in the region (independent of the CHSH parameter).
pub fn lower_bound(region: RegionId) -> f64 {
    match region {
        RegionId::LinearTotal | RegionId::VnTotal => 0.0,
        RegionId::LinearCondSum => -1.0,
        RegionId::VnCondSum => -2.0 * LN_2,
    }
}

/// Evaluates the CHSH parameter and both entropy reports once, then emits a
/// membership verdict for each region.
pub fn classify(rho: &DensityMatrix, b: &BellOperator) -> [RegionVerdict; 4] {
    let beta_val = beta(rho, b);
    let clamped = beta_val.clamp(-tsirelson_bound(), tsirelson_bound());
    let lin = linear_entropy(rho);
    let vn = von_neumann_entropy(rho);
    RegionId::ALL.map(|region| {
        let entropy_val = match region {
            RegionId::LinearTotal => lin.s12,
            RegionId::LinearCondSum => lin.cond_sum,
            RegionId::VnTotal => vn.s12,
            RegionId::VnCondSum => vn.cond_sum,
        };
        let upper = upper_bound(region, clamped).expect("clamped into range");
        let lower = lower_bound(region);
        let margin = (upper - entropy_val).min(entropy_val - lower);
        RegionVerdict {
            region,
            beta_val,
            entropy_val,
            upper_bound: upper,
            lower_bound: lower,
            inside: margin >= -MEMBERSHIP_TOL,
            margin,
        }
    })
}

/// Threshold constants, evaluated in closed form (the zero-crossing one by
/// bisection to 1e-10).
pub fn threshold(which: ThresholdId) -> f64 {
    let sqrt2 = 2.0_f64.sqrt();
    match which {
        ThresholdId::LinearEntropy => 0.5,
        ThresholdId::LinearCondSum => 0.0,
        ThresholdId::VnEntropy => 3.0 * LN_2 - sqrt2 * (1.0 + sqrt2).ln(),
        ThresholdId::VnCondSum => 4.0 * LN_2 - 2.0 * sqrt2 * (1.0 + sqrt2).ln(),
        ThresholdId::VnCondZeroBeta => {
            // Root of the conditional von Neumann bound on [2, 2*sqrt(2)].
            let f = |b: f64| upper_bound(RegionId::VnCondSum, b).expect("in range");
            let (mut lo, mut hi) = (2.0, tsirelson_bound());
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    }
}

/// Uniform sampling of an upper boundary over the full CHSH range, endpoints
/// included exactly.
pub fn boundary_curve(region: RegionId, n_points: usize) -> Vec<(f64, f64)> {
    assert!(n_points >= 2, "need at least two points");
    let t = tsirelson_bound();
    let step = 2.0 * t / (n_points - 1) as f64;
    (0..n_points)
        .map(|i| {
            let beta_val = if i == n_points - 1 {
                t
            } else {
                -t + i as f64 * step
            };
            (
                beta_val,
                upper_bound(region, beta_val).expect("grid stays in range"),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{BellOperator, BlochVector, MeasurementSettings};
    use crate::numkit::ComplexMatrix;
    use crate::states::{sample_density, stream_rng, validate_density};
    use num_complex::Complex64;

    fn canonical() -> BellOperator {
        BellOperator::with_top_eigenvalue(tsirelson_bound()).unwrap()
    }

    #[test]
    fn linear_total_corner_value() {
        assert!((upper_bound(RegionId::LinearTotal, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((upper_bound(RegionId::LinearTotal, 0.0).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn vn_total_endpoints_and_corner() {
        let t = tsirelson_bound();
        assert!(
            (upper_bound(RegionId::VnTotal, 0.0).unwrap() - 2.0 * std::f64::consts::LN_2).abs()
                < 1e-15
        );
        assert!(upper_bound(RegionId::VnTotal, t).unwrap().abs() < 1e-15);
        let corner = upper_bound(RegionId::VnTotal, 2.0).unwrap();
        assert!((corner - 0.833).abs() < 5e-4, "corner {corner}");
    }

    #[test]
    fn lower_bounds() {
        assert_eq!(lower_bound(RegionId::LinearTotal), 0.0);
        assert_eq!(lower_bound(RegionId::LinearCondSum), -1.0);
        assert_eq!(lower_bound(RegionId::VnTotal), 0.0);
        assert!((lower_bound(RegionId::VnCondSum) + 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_beta_outside_range() {
        assert!(matches!(
            upper_bound(RegionId::LinearTotal, 2.9),
            Err(RegionError::BetaOutOfRange(_))
        ));
    }

    #[test]
    fn parabola_branches_cross_at_two() {
        let b2 = 4.0_f64;
        assert!(((0.75 - b2 / 16.0) - (1.0 - b2 / 8.0)).abs() < 1e-15);
        assert!(((0.5 - b2 / 8.0) - (1.0 - b2 / 4.0)).abs() < 1e-15);
        // min switches branches across the crossing: the shallow parabola
        // binds inside |beta| = 2, the steep one outside.
        assert!(
            (upper_bound(RegionId::LinearTotal, 1.9).unwrap() - (0.75 - 1.9 * 1.9 / 16.0)).abs()
                < 1e-15
        );
        assert!(
            (upper_bound(RegionId::LinearTotal, 2.1).unwrap() - (1.0 - 2.1 * 2.1 / 8.0)).abs()
                < 1e-15
        );
        assert!(
            (upper_bound(RegionId::LinearCondSum, 1.9).unwrap() - (0.5 - 1.9 * 1.9 / 8.0)).abs()
                < 1e-15
        );
        assert!(
            (upper_bound(RegionId::LinearCondSum, 2.1).unwrap() - (1.0 - 2.1 * 2.1 / 4.0)).abs()
                < 1e-15
        );
    }

    #[test]
    fn vn_cond_bound_is_affine_in_vn_total_bound() {
        for i in 0..=1000 {
            let b = -tsirelson_bound() + i as f64 * (2.0 * tsirelson_bound() / 1000.0);
            let total = upper_bound(RegionId::VnTotal, b).unwrap();
            let cond = upper_bound(RegionId::VnCondSum, b).unwrap();
            assert!((cond - (2.0 * total - 2.0 * std::f64::consts::LN_2)).abs() < 1e-14);
        }
    }

    #[test]
    fn bounds_decrease_in_absolute_beta_and_are_symmetric() {
        let t = tsirelson_bound();
        for region in RegionId::ALL {
            let mut prev = upper_bound(region, 0.0).unwrap();
            for i in 1..=500 {
                let b = i as f64 * t / 500.0;
                let here = upper_bound(region, b).unwrap();
                assert!(here < prev, "{region:?} not decreasing at beta {b}");
                let mirrored = upper_bound(region, -b).unwrap();
                assert!((here - mirrored).abs() < 1e-15);
                prev = here;
            }
        }
    }

    #[test]
    fn thresholds_match_region_corners() {
        assert_eq!(
            threshold(ThresholdId::LinearEntropy),
            upper_bound(RegionId::LinearTotal, 2.0).unwrap()
        );
        assert!(
            (threshold(ThresholdId::VnEntropy) - upper_bound(RegionId::VnTotal, 2.0).unwrap())
                .abs()
                < 1e-14
        );
        assert!((threshold(ThresholdId::LinearCondSum)).abs() < 1e-15);
        assert!((threshold(ThresholdId::VnEntropy) - 0.833).abs() < 5e-4);
        assert!((threshold(ThresholdId::VnCondSum) - 0.280).abs() < 5e-4);
    }

    #[test]
    fn zero_crossing_of_conditional_vn_bound() {
        let root = threshold(ThresholdId::VnCondZeroBeta);
        assert!((root - 2.206).abs() < 1e-3, "root {root}");
        let residual = upper_bound(RegionId::VnCondSum, root).unwrap();
        assert!(residual.abs() < 1e-9, "residual {residual}");
    }

    #[test]
    fn boundary_curve_endpoints_and_apex() {
        let t = tsirelson_bound();
        let lin = boundary_curve(RegionId::LinearTotal, 3);
        assert_eq!(lin.len(), 3);
        assert_eq!(lin[0].0, -t);
        assert_eq!(lin[2].0, t);
        assert!(lin[0].1.abs() < 1e-15);
        assert!((lin[1].1 - 0.75).abs() < 1e-15);
        assert!(lin[2].1.abs() < 1e-15);

        let vn = boundary_curve(RegionId::VnTotal, 3);
        assert!((vn[1].1 - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!(vn[0].1.abs() < 1e-15 && vn[2].1.abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_sits_at_the_apex_of_every_region() {
        let rho = validate_density(&ComplexMatrix::identity(4).scaled_re(0.25)).unwrap();
        let verdicts = classify(&rho, &canonical());
        for v in verdicts {
            assert!(v.inside);
            assert!(v.beta_val.abs() < 1e-12);
            // The maximally mixed state is the entropy maximizer at zero
            // CHSH value, so it touches every upper bound exactly.
            assert!(v.margin.abs() <= MEMBERSHIP_TOL);
            assert!((v.entropy_val - v.upper_bound).abs() <= MEMBERSHIP_TOL);
        }
    }

    #[test]
    fn singlet_touches_the_linear_total_boundary() {
        let s = 0.5_f64.sqrt();
        let c = Complex64::new;
        let singlet = DensityMatrix::pure(&[c(0., 0.), c(s, 0.), c(-s, 0.), c(0., 0.)]).unwrap();
        let verdicts = classify(&singlet, &canonical());
        let lin = verdicts
            .iter()
            .find(|v| v.region == RegionId::LinearTotal)
            .unwrap();
        assert!(lin.inside);
        assert!(lin.margin.abs() <= MEMBERSHIP_TOL, "margin {}", lin.margin);
    }

    #[test]
    fn random_pairs_never_leave_the_regions() {
        let mut rng = stream_rng(31, 0);
        for _ in 0..2000 {
            use rand::Rng;
            let rank = 1 + rng.random_range(0..4);
            let rho = sample_density(&mut rng, rank);
            let b = BellOperator::new(MeasurementSettings {
                a1: BlochVector::random(&mut rng),
                b1: BlochVector::random(&mut rng),
                a2: BlochVector::random(&mut rng),
                b2: BlochVector::random(&mut rng),
            });
            for v in classify(&rho, &b) {
                assert!(v.inside, "{v:?}");
            }
        }
    }
}
