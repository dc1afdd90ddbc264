//! Empirical verification harness: Monte Carlo region containment, boundary
//! attainability sweeps, Gibbs extremality perturbation tests, and the
//! separability / entropy / CHSH implication chain.
//!
//! Sample loops run in parallel; sample `k` always draws from the derived
//! stream `stream_rng(seed, k)` and results merge by count/min, so thread
//! scheduling cannot change a report.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

use crate::bell::{
    bell_basis, beta, maximize_beta, tsirelson_bound, BellOperator, BlochVector,
    MeasurementSettings, DEFAULT_RESTARTS,
};
use crate::entropy::{linear_entropy, von_neumann_entropy};
use crate::extremal::{gibbs_state, two_level_bell_mixture};
use crate::numkit::{matrix_function, ComplexMatrix};
use crate::regions::{classify, lower_bound, threshold, upper_bound, RegionId, ThresholdId};
use crate::states::{
    sample_density, sample_separable, stream_rng, validate_density, DensityMatrix,
    DEFAULT_SEPARABLE_TERMS,
};

/// Grid points must sit at least this deep inside a region (in the entropy
/// coordinate) before the sweep tries to reach them.
pub const INTERIOR_DEPTH: f64 = 1e-3;

/// Attainability acceptance: both coordinates of a target must be hit this
/// closely.
pub const TARGET_TOL: f64 = 1e-4;

/// Third-order slack coefficient for the extremality assertions: a
/// perturbation may raise the entropy by at most `EXTREMALITY_SLACK * eps^3`.
pub const EXTREMALITY_SLACK: f64 = 10.0;

const MAX_LISTED_FAILURES: usize = 16;

/// Outcome of one verification suite. `violations == 0` on a passing run;
/// `worst_margin` is recorded even then (`None` only for vacuous runs).
/// Reports are bit-reproducible from `(suite, seed, samples)`, so the
/// wall-clock time stays out of the serialized form.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub suite: String,
    pub samples: u64,
    pub violations: u64,
    pub worst_margin: Option<f64>,
    pub seed: u64,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// One sample outcome: violation count, margin (positive = healthy,
/// `INFINITY` = not applicable), optional failure description.
type SampleOutcome = (u64, f64, Option<String>);

fn run_samples<F>(n: u64, f: F) -> (u64, Option<f64>, Vec<String>)
where
    F: Fn(u64) -> SampleOutcome + Sync + Send,
{
    let rows: Vec<SampleOutcome> = (0..n).into_par_iter().map(f).collect();
    fold_outcomes(rows)
}

fn fold_outcomes(rows: Vec<SampleOutcome>) -> (u64, Option<f64>, Vec<String>) {
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (v, margin, failure) in rows {
        violations += v;
        worst = worst.min(margin);
        if let Some(text) = failure {
            if failures.len() < MAX_LISTED_FAILURES {
                failures.push(text);
            }
        }
    }
    let worst = worst.is_finite().then_some(worst);
    (violations, worst, failures)
}

/// Uniform mix over state ranks 1..=4.
pub fn default_rank_mix() -> [f64; 4] {
    [0.25; 4]
}

fn pick_rank(rng: &mut impl Rng, mix: &[f64; 4]) -> usize {
    let total: f64 = mix.iter().sum();
    let mut draw = rng.random::<f64>() * total;
    for (i, &w) in mix.iter().enumerate() {
        draw -= w;
        if draw <= 0.0 {
            return i + 1;
        }
    }
    4
}

fn random_operator(rng: &mut impl Rng) -> BellOperator {
    BellOperator::new(MeasurementSettings {
        a1: BlochVector::random(rng),
        b1: BlochVector::random(rng),
        a2: BlochVector::random(rng),
        b2: BlochVector::random(rng),
    })
}

/// Draws `n` independent `(state, operator)` pairs and checks every region
/// verdict. Any verdict outside its region beyond tolerance counts as a
/// violation; the bounds say there are none.
pub fn mc_region_containment(n: u64, seed: u64, rank_mix: [f64; 4]) -> VerificationReport {
    assert!(
        rank_mix.iter().sum::<f64>() > 0.0,
        "rank mix must have mass"
    );
    let start = Instant::now();
    let (violations, worst_margin, failures) = run_samples(n, |k| {
        let mut rng = stream_rng(seed, k);
        let rank = pick_rank(&mut rng, &rank_mix);
        let rho = sample_density(&mut rng, rank);
        let b = random_operator(&mut rng);
        let verdicts = classify(&rho, &b);
        let margin = verdicts
            .iter()
            .map(|v| v.margin)
            .fold(f64::INFINITY, f64::min);
        let bad = verdicts.iter().filter(|v| !v.inside).count() as u64;
        let failure = (bad > 0).then(|| {
            let v = verdicts
                .iter()
                .find(|v| !v.inside)
                .expect("bad > 0 means one exists");
            format!(
                "sample {k}: {} outside: beta {:.9}, value {:.9}, bounds [{:.9}, {:.9}]",
                v.region.label(),
                v.beta_val,
                v.entropy_val,
                v.lower_bound,
                v.upper_bound
            )
        });
        (bad, margin, failure)
    });
    VerificationReport {
        suite: "regions".into(),
        samples: n,
        violations,
        worst_margin,
        seed,
        failures,
        notes: Vec::new(),
        elapsed: start.elapsed(),
    }
}

fn bisect_monotone(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    let increasing = f(hi) >= f(lo);
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if (f(mid) < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bell-diagonal state hitting a target `(beta, linear entropy)` point of
/// the linear-total region. High-entropy targets use the paired-weight
/// family, low-entropy targets a two-eigenstate mixture; the weight
/// placement among the signed eigenvalues selects the reachable CHSH
/// window.
fn linear_target_state(beta0: f64, s0: f64) -> (DensityMatrix, BellOperator) {
    let t = tsirelson_bound();
    let sqrt2 = 2.0_f64.sqrt();
    let bmag = beta0.abs();
    let negative = beta0 < 0.0;

    if s0 >= 0.5 {
        let alpha = (3.0 - 4.0 * s0).max(0.0).sqrt();
        let reach = bmag / alpha;
        let top = (reach + (4.0 - reach * reach).max(0.0).sqrt()).clamp(2.0, t);
        let b = BellOperator::with_top_eigenvalue(top).expect("in range");
        let hi = 0.25 * (1.0 + alpha);
        let lo = 0.25 * (1.0 - alpha);
        // reach >= sqrt(2): pair the weights across the half-sum; below it,
        // across the half-difference.
        let mut weights = if reach >= sqrt2 {
            [hi, hi, lo, lo]
        } else {
            [hi, lo, hi, lo]
        };
        if negative {
            weights.reverse();
        }
        let rho = crate::extremal::bell_diagonal(weights, &b).expect("valid weights");
        (rho, b)
    } else {
        let r = 0.5 * (1.0 + (1.0 - 2.0 * s0).max(0.0).sqrt());
        let edge_flat = 2.0 * (2.0 * r - 1.0);
        let edge_top = 2.0 * sqrt2 * r;
        let (top, levels) = if bmag <= edge_flat {
            let inner = if 2.0 * r - 1.0 > 1e-12 {
                (bmag / (2.0 * r - 1.0)).clamp(0.0, 2.0)
            } else {
                0.0
            };
            ((8.0 - inner * inner).sqrt().clamp(2.0, t), (1, 2))
        } else if bmag <= edge_top {
            let f = |x: f64| r * x - (1.0 - r) * (8.0 - x * x).max(0.0).sqrt();
            (bisect_monotone(2.0, t, bmag, f), (0, 2))
        } else {
            let g = |x: f64| r * x + (1.0 - r) * (8.0 - x * x).max(0.0).sqrt();
            let peak = (2.0 * sqrt2 * r / (r * r + (1.0 - r) * (1.0 - r)).sqrt()).clamp(2.0, t);
            (bisect_monotone(peak, t, bmag, g), (0, 1))
        };
        let b = BellOperator::with_top_eigenvalue(top).expect("in range");
        let levels = if negative {
            (3 - levels.0, 3 - levels.1)
        } else {
            levels
        };
        let rho = two_level_bell_mixture(r, levels, &b).expect("valid parameters");
        (rho, b)
    }
}

/// State hitting a target point of a von Neumann region: a maximally
/// entangled pure state and the Gibbs state of the extremal operator, both
/// matched to the target CHSH value, mixed with a weight found by bisection.
fn vn_target_state(region: RegionId, beta0: f64, val0: f64) -> (DensityMatrix, BellOperator) {
    let t = tsirelson_bound();
    let b = BellOperator::with_top_eigenvalue(t).expect("in range");
    let basis = bell_basis(&b);
    let fraction = (beta0 / t).clamp(-1.0, 1.0);

    // cos(phi) v_top + sin(phi) v_bottom is maximally entangled with CHSH
    // value `t cos(2 phi)`.
    let phi = 0.5 * fraction.acos();
    let v_top = basis.vector(0);
    let v_bottom = basis.vector(3);
    let chi: Vec<Complex64> = v_top
        .iter()
        .zip(&v_bottom)
        .map(|(a, c)| a * phi.cos() + c * phi.sin())
        .collect();
    let pure = DensityMatrix::pure(&chi).expect("unit vector");

    let lambda = fraction.atanh() / 2.0_f64.sqrt();
    let (gibbs, _) = gibbs_state(lambda, &b).expect("within overflow guard");

    let measure = |rho: &DensityMatrix| {
        let vn = von_neumann_entropy(rho);
        match region {
            RegionId::VnTotal => vn.s12,
            RegionId::VnCondSum => vn.cond_sum,
            _ => unreachable!("linear regions use linear_target_state"),
        }
    };
    let mix = |w: f64| {
        validate_density(&(&pure.mat().scaled_re(1.0 - w) + &gibbs.mat().scaled_re(w)))
            .expect("convex mixture of states")
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if measure(&mix(mid)) < val0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (mix(0.5 * (lo + hi)), b)
}

/// Sweeps a uniform grid over a region's bounding box, keeps the points at
/// least [`INTERIOR_DEPTH`] inside, and tries to construct a state within
/// [`TARGET_TOL`] of each one. Unreachable points are listed.
pub fn attainability_sweep(region: RegionId, grid_n: usize) -> VerificationReport {
    assert!(grid_n >= 2, "need a grid of at least 2x2");
    let start = Instant::now();
    let t = tsirelson_bound();
    let low = lower_bound(region);
    let apex = upper_bound(region, 0.0).expect("zero is in range");

    let mut targets = Vec::new();
    for i in 0..grid_n {
        let beta0 = -t + (i as f64 + 0.5) * 2.0 * t / grid_n as f64;
        let cap = upper_bound(region, beta0).expect("grid stays in range");
        for j in 0..grid_n {
            let val0 = low + (j as f64 + 0.5) * (apex - low) / grid_n as f64;
            if val0 >= low + INTERIOR_DEPTH && val0 <= cap - INTERIOR_DEPTH {
                targets.push((beta0, val0));
            }
        }
    }

    let rows: Vec<SampleOutcome> = targets
        .par_iter()
        .map(|&(beta0, val0)| {
            let (rho, b) = match region {
                RegionId::LinearTotal => linear_target_state(beta0, val0),
                RegionId::LinearCondSum => linear_target_state(beta0, 0.5 * (val0 + 1.0)),
                RegionId::VnTotal | RegionId::VnCondSum => vn_target_state(region, beta0, val0),
            };
            let achieved_beta = beta(&rho, &b);
            let achieved_val = match region {
                RegionId::LinearTotal => linear_entropy(&rho).s12,
                RegionId::LinearCondSum => linear_entropy(&rho).cond_sum,
                RegionId::VnTotal => von_neumann_entropy(&rho).s12,
                RegionId::VnCondSum => von_neumann_entropy(&rho).cond_sum,
            };
            let err = (achieved_beta - beta0)
                .abs()
                .max((achieved_val - val0).abs());
            let failure = (err > TARGET_TOL).then(|| {
                format!(
                    "target (beta {beta0:.6}, value {val0:.6}) unreachable: \
                     achieved (beta {achieved_beta:.6}, value {achieved_val:.6})"
                )
            });
            (u64::from(err > TARGET_TOL), TARGET_TOL - err, failure)
        })
        .collect();
    let samples = rows.len() as u64;
    let (violations, worst_margin, failures) = fold_outcomes(rows);
    VerificationReport {
        suite: format!("attain:{}", region.label()),
        samples,
        violations,
        worst_margin,
        seed: 0,
        failures,
        notes: Vec::new(),
        elapsed: start.elapsed(),
    }
}

fn random_hermitian(rng: &mut impl Rng) -> ComplexMatrix {
    let mut g = ComplexMatrix::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            g[(i, j)] = Complex64::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            );
        }
    }
    (&g + &g.adjoint()).scaled_re(0.5)
}

/// Random Hermitian direction with `Tr d = 0` and `Tr(B d) = 0`, normalized
/// to unit Frobenius norm. The subtraction is an exact orthogonal projection
/// because `Tr B = 0` and `Tr B^2 = 16`.
fn constrained_direction(rng: &mut impl Rng, b: &BellOperator) -> Option<ComplexMatrix> {
    let h = random_hermitian(rng);
    let trace_part = ComplexMatrix::identity(4).scaled_re(h.trace().re / 4.0);
    let bell_part = b.mat().scaled_re(b.mat().trace_product(&h).re / 16.0);
    let projected = &(&h - &trace_part) - &bell_part;
    let norm = projected.frobenius_norm();
    (norm > 1e-12).then(|| projected.scaled_re(1.0 / norm))
}

/// Perturbs a Gibbs state within the fixed-CHSH constraint surface and
/// checks that neither the total entropy nor the conditional sum rises by
/// more than `EXTREMALITY_SLACK * eps^3`. Also checks the measured second
/// variation of the entropy against `-Tr(rho^-1 d^2)` along one direction.
pub fn gibbs_extremality_test(
    b: &BellOperator,
    lambda: f64,
    n_perturbations: u64,
    eps: f64,
    seed: u64,
) -> VerificationReport {
    assert!(
        eps <= 1e-3,
        "perturbations must stay in the quadratic regime"
    );
    let start = Instant::now();
    let (rho, _) = gibbs_state(lambda, b).expect("within overflow guard");
    let base = von_neumann_entropy(&rho);
    let slack = EXTREMALITY_SLACK * eps * eps * eps;

    let (mut violations, worst_margin, mut failures) = run_samples(n_perturbations, |k| {
        let mut rng = stream_rng(seed, k);
        let Some(direction) = constrained_direction(&mut rng, b) else {
            return (0, f64::INFINITY, None);
        };
        let candidate = rho.mat() + &direction.scaled_re(eps);
        let Ok(state) = validate_density(&candidate) else {
            // Perturbation left the state space; nothing to assert.
            return (0, f64::INFINITY, None);
        };
        let vn = von_neumann_entropy(&state);
        let rise_total = vn.s12 - base.s12;
        let rise_cond = vn.cond_sum - base.cond_sum;
        let bad = u64::from(rise_total > slack) + u64::from(rise_cond > slack);
        let failure = (bad > 0).then(|| {
            format!(
                "perturbation {k}: entropy rose by {:.3e} / cond sum by {:.3e} (allowed {slack:.3e})",
                rise_total, rise_cond
            )
        });
        (bad, slack - rise_total.max(rise_cond), failure)
    });

    // Second variation along one fixed direction, against the closed form.
    // The closed form is exact when the direction commutes with the state,
    // so the comparison runs along the Bell-diagonal weight pattern
    // (1, -1, -1, 1)/2, which satisfies both constraints for free: it is
    // orthogonal to the flat weight vector and to the +-paired spectrum.
    let mut notes = Vec::new();
    {
        let basis = bell_basis(b);
        let pattern = [0.5, -0.5, -0.5, 0.5];
        let mut direction = ComplexMatrix::zeros(4);
        for (k, &w) in pattern.iter().enumerate() {
            let v = basis.vector(k);
            direction = &direction + &ComplexMatrix::outer(&v, &v).scaled_re(w);
        }
        let h = eps;
        let shifted = |sign: f64| {
            validate_density(&(rho.mat() + &direction.scaled_re(sign * h)))
                .map(|s| von_neumann_entropy(&s).s12)
        };
        if let (Ok(plus), Ok(minus)) = (shifted(1.0), shifted(-1.0)) {
            let measured = (plus - 2.0 * base.s12 + minus) / (h * h);
            let inverse = matrix_function(rho.mat(), |x| 1.0 / x)
                .expect("Gibbs spectrum is strictly positive");
            let expected = -inverse.trace_product(&(&direction * &direction)).re;
            let relative = ((measured - expected) / expected).abs();
            notes.push(format!(
                "second variation: measured {measured:.6e}, expected {expected:.6e}, relative error {relative:.2e}"
            ));
            if relative > 0.05 {
                violations += 1;
                failures.push(format!(
                    "second variation off by {relative:.2e} relative (allowed 5e-2)"
                ));
            }
        }
    }

    VerificationReport {
        suite: format!("extremal:lambda={lambda},top={:.6}", b.top_eigenvalue()),
        samples: n_perturbations,
        violations,
        worst_margin,
        seed,
        failures,
        notes,
        elapsed: start.elapsed(),
    }
}

/// The ten `(lambda, top eigenvalue)` combinations exercised by the
/// extremality suite.
pub fn extremality_combos() -> Vec<(f64, f64)> {
    let t = tsirelson_bound();
    let lambdas = [0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.7, -0.8, 0.9, 1.0];
    lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| (lambda, 2.0 + (t - 2.0) * i as f64 / 9.0))
        .collect()
}

/// Runs [`gibbs_extremality_test`] over [`extremality_combos`], splitting
/// `samples` evenly.
pub fn extremal_suite(samples: u64, eps: f64, seed: u64) -> Vec<VerificationReport> {
    let combos = extremality_combos();
    let per_combo = samples / combos.len() as u64;
    combos
        .iter()
        .map(|&(lambda, top)| {
            let b = BellOperator::with_top_eigenvalue(top).expect("in range");
            gibbs_extremality_test(&b, lambda, per_combo, eps, seed)
        })
        .collect()
}

const MAXIMIZE_CAP: f64 = 2.0 + 1e-6;

/// Checks the implication chain between separability, the entropy
/// inequalities, and the CHSH bound:
/// (i) separable states satisfy the linear entropy inequalities;
/// (ii) linear entropy >= 1/2 forces `maximize_beta <= 2`;
/// (iii) a non-negative linear conditional sum forces `maximize_beta <= 2`;
/// (iv) and the von Neumann conditional sum does NOT: a witness state with
/// non-negative conditional sum still violates the CHSH bound.
pub fn implication_chain_test(n_separable: u64, n_maximize: u64, seed: u64) -> VerificationReport {
    let start = Instant::now();
    let part = |p: u64, k: u64| stream_rng(seed, (p << 56) | k);

    let (v1, m1, f1) = run_samples(n_separable, |k| {
        let mut rng = part(0, k);
        let (_, rho) = sample_separable(&mut rng, DEFAULT_SEPARABLE_TERMS);
        let lin = linear_entropy(&rho);
        let margin = (lin.s12 - lin.s1).min(lin.s12 - lin.s2);
        let bad = margin < -1e-12;
        let failure = bad.then(|| {
            format!(
                "separable sample {k}: entropy inequality violated by {:.3e}",
                -margin
            )
        });
        (u64::from(bad), margin, failure)
    });

    // Rejection-sample states satisfying an entropy condition, then confirm
    // that no Bell operator pushes them past the classical bound.
    let conditioned = |p: u64, accept: fn(&DensityMatrix) -> bool, label: &'static str| {
        run_samples(n_maximize, move |k| {
            let mut rng = part(p, k);
            let mut found = None;
            for _ in 0..10_000 {
                let rank = 3 + (k % 2) as usize;
                let rho = sample_density(&mut rng, rank);
                if accept(&rho) {
                    found = Some(rho);
                    break;
                }
            }
            let Some(rho) = found else {
                return (
                    1,
                    f64::NEG_INFINITY,
                    Some(format!(
                        "sample {k}: no state met the {label} condition in 10000 draws"
                    )),
                );
            };
            let (best, _) = maximize_beta(&rho, DEFAULT_RESTARTS, rng.random());
            let margin = MAXIMIZE_CAP - best;
            let failure = (margin < 0.0)
                .then(|| format!("sample {k}: betaMax {best:.9} above 2 despite {label}"));
            (u64::from(margin < 0.0), margin, failure)
        })
    };
    let (v2, m2, f2) = conditioned(1, |rho| linear_entropy(rho).s12 >= 0.5, "s12 >= 1/2");
    let (v3, m3, f3) = conditioned(2, |rho| linear_entropy(rho).cond_sum >= 0.0, "condSum >= 0");

    // Existence side: near the zero crossing of the conditional von Neumann
    // bound, Gibbs states keep a non-negative conditional sum while clearly
    // violating the classical bound.
    let witness_beta = threshold(ThresholdId::VnCondZeroBeta) - 0.05;
    let b = BellOperator::with_top_eigenvalue(tsirelson_bound()).expect("in range");
    let lambda = (witness_beta / tsirelson_bound()).atanh() / 2.0_f64.sqrt();
    let (witness, _) = gibbs_state(lambda, &b).expect("within overflow guard");
    let vn = von_neumann_entropy(&witness);
    let (witness_max, _) = maximize_beta(&witness, DEFAULT_RESTARTS, seed);
    let witness_ok = vn.cond_sum >= 0.0 && witness_max >= 2.1;
    let witness_margin = vn.cond_sum.min(witness_max - 2.1);

    let mut violations = v1 + v2 + v3;
    let mut failures: Vec<String> = f1
        .into_iter()
        .chain(f2)
        .chain(f3)
        .take(MAX_LISTED_FAILURES)
        .collect();
    let mut notes = vec![format!(
        "witness: Gibbs state at lambda {lambda:.6} has vn condSum {:.6} and betaMax {:.6}",
        vn.cond_sum, witness_max
    )];
    if !witness_ok {
        violations += 1;
        failures.push(format!(
            "no witness: vn condSum {:.6}, betaMax {:.6}",
            vn.cond_sum, witness_max
        ));
        notes.clear();
    }

    let worst_margin = [m1, m2, m3]
        .into_iter()
        .flatten()
        .chain(std::iter::once(witness_margin))
        .fold(f64::INFINITY, f64::min);
    VerificationReport {
        suite: "implications".into(),
        samples: n_separable + 2 * n_maximize + 1,
        violations,
        worst_margin: worst_margin.is_finite().then_some(worst_margin),
        seed,
        failures,
        notes,
        elapsed: start.elapsed(),
    }
}
