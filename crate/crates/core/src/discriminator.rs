//! Programmable unambiguous discrimination of two elliptical states.
//!
//! The program photon is prepared in the `+` data state. A `Ψ+` coincidence
//! identifies the `+` data state, a `Ψ−` coincidence the `−` one, and the
//! remaining Bell states are inconclusive.

use crate::error::{Error, Result};
use crate::experiment::{measure_point, point_rng, CountRecord, ExperimentConfig, InputSetting};
use crate::polarization::{overlap, prepare_elliptical, recipe_discriminator, Sign};
use crate::stats::{binomial_stderr, normalized_rate, Estimate};
use rayon::prelude::*;

/// `|a|² = x² cos² ϑ + y² sin² ϑ` with `x = cos ε`, `y = sin ε`.
pub fn h_weight(epsilon: f64, theta: f64) -> f64 {
    let (y, x) = epsilon.to_radians().sin_cos();
    let (s, c) = theta.to_radians().sin_cos();
    x * x * c * c + y * y * s * s
}

/// Success probability of discrimination by partial Bell analysis,
/// `2(|a|² − |a|⁴)`.
pub fn success_prob_theory(epsilon: f64, theta: f64) -> f64 {
    let a2 = h_weight(epsilon, theta);
    2.0 * (a2 - a2 * a2)
}

/// Optimal unambiguous success probability `1 − |⟨φ+|φ−⟩|`.
pub fn optimal_prob(epsilon: f64, theta: f64) -> f64 {
    let plus = prepare_elliptical(epsilon, theta, Sign::Plus);
    let minus = prepare_elliptical(epsilon, theta, Sign::Minus);
    1.0 - overlap(&plus, &minus).norm()
}

/// Success probability estimated from coincidence counts, each main rate
/// normalized by half the shoulder coincidence sum of its input.
pub fn estimate_success(counts: &CountRecord) -> Result<f64> {
    estimate_success_with_error(counts).map(|e| e.value)
}

/// [`estimate_success`] with a first-order error from Poisson counting
/// statistics of all four contributing counts.
pub fn estimate_success_with_error(counts: &CountRecord) -> Result<Estimate> {
    let (s1, s2) = shoulder_sums(counts)?;
    let (r1, v1) = normalized_rate(counts.c_pp as f64, s1);
    let (r2, v2) = normalized_rate(counts.c_mm as f64, s2);
    Ok(Estimate::new(0.5 * (r1 + r2), 0.5 * (v1 + v2).sqrt()))
}

pub(crate) fn shoulder_sums(counts: &CountRecord) -> Result<(f64, f64)> {
    if counts.shoulder_plus() == 0 {
        return Err(Error::InvalidNormalization("sh_pp + sh_mp"));
    }
    if counts.shoulder_minus() == 0 {
        return Err(Error::InvalidNormalization("sh_mm + sh_pm"));
    }
    Ok((counts.shoulder_plus() as f64, counts.shoulder_minus() as f64))
}

/// Fraction of conclusive results that name the wrong state.
pub fn error_rate(counts: &CountRecord) -> Result<f64> {
    error_rate_with_error(counts).map(|e| e.value)
}

pub fn error_rate_with_error(counts: &CountRecord) -> Result<Estimate> {
    let total = counts.conclusive();
    if total == 0 {
        return Err(Error::NoData);
    }
    let wrong = (counts.c_mp + counts.c_pm) as f64;
    Ok(Estimate::new(
        wrong / total as f64,
        binomial_stderr(wrong, total as f64),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationPoint {
    pub epsilon: f64,
    pub theta: f64,
    pub p_theory: f64,
    pub p_optimal: f64,
    pub p_estimated: Result<Estimate>,
    pub error_rate: Result<Estimate>,
    pub counts: CountRecord,
}

/// Simulates every `(ε, ϑ)` grid point: the `+` and `−` data states against
/// the `+` program state, with shoulder normalizations.
pub fn run_discriminator_sweep(
    epsilons: &[f64],
    thetas: &[f64],
    config: &ExperimentConfig,
    pairs_per_point: f64,
    seed: u64,
) -> Result<Vec<DiscriminationPoint>> {
    if epsilons.is_empty() || thetas.is_empty() {
        return Err(Error::param("grid", "ε and ϑ grids must be nonempty"));
    }
    for &eps in epsilons {
        if !(0.0..90.0).contains(&eps) {
            return Err(Error::param("epsilon", format!("{eps} not in [0, 90)")));
        }
    }
    let config = config.with_pairs_per_setting(pairs_per_point);
    config.validate()?;
    let grid: Vec<(f64, f64)> = epsilons
        .iter()
        .flat_map(|&e| thetas.iter().map(move |&t| (e, t)))
        .collect();

    grid.par_iter()
        .enumerate()
        .map(|(i, &(epsilon, theta))| {
            let mut rng = point_rng(seed, i as u64);
            let program = recipe_discriminator(epsilon, theta, Sign::Plus);
            let plus = InputSetting::new(program, program);
            let minus = InputSetting::new(recipe_discriminator(epsilon, theta, Sign::Minus), program);
            let measured = measure_point(&plus, &minus, &config, &mut rng)?;
            Ok(DiscriminationPoint {
                epsilon,
                theta,
                p_theory: success_prob_theory(epsilon, theta),
                p_optimal: optimal_prob(epsilon, theta),
                p_estimated: estimate_success_with_error(&measured.record),
                error_rate: error_rate_with_error(&measured.record),
                counts: measured.record,
            })
        })
        .collect()
}

/// `{0, 4, …, 90}` degrees.
pub fn default_thetas() -> Vec<f64> {
    (0..=22).map(|k| 4.0 * k as f64).collect()
}

pub const DEFAULT_EPSILONS: [f64; 4] = [0.0, 12.0, 24.0, 36.0];
