//! Phase-covariant multimeter with a single-qubit program.
//!
//! The joint POVM family is parametrized by `η ∈ [0, 1]`:
//!
//! ```text
//! Π± = |Ψ±⟩⟨Ψ±| + (1 − η)/2 · (|Φ+⟩⟨Φ+| + |Φ−⟩⟨Φ−|)
//! Π? = η · (|Φ+⟩⟨Φ+| + |Φ−⟩⟨Φ−|)
//! ```
//!
//! Only `η = 1` is a physical measurement here. Smaller `η` is obtained by
//! relabeling recorded inconclusive events at random, see [`reinterpret`].

use crate::analyzer::Outcome;
use crate::discriminator::shoulder_sums;
use crate::error::{Error, Result};
use crate::experiment::{
    measure_point, point_rng, ClassCounts, CountRecord, ExperimentConfig, InputSetting,
};
use crate::polarization::{prepare_equatorial, recipe_multimeter, PolarizationState, Sign};
use crate::stats::{binomial_stderr, normalized_rate, Estimate};
use crate::twophoton::BellState;
use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

/// Hermitian positive semidefinite operator on the two-photon space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PovmElement(pub Matrix4<Complex64>);

impl PovmElement {
    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.0 - self.0.adjoint()).norm() <= tol
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `⟨ψ|Π|ψ⟩`.
    pub fn expectation(&self, state: &Vector4<Complex64>) -> f64 {
        (state.adjoint() * self.0 * state)[(0, 0)].re
    }
}

fn projector(bell: BellState) -> Matrix4<Complex64> {
    let v = Vector4::from_column_slice(&bell.amplitudes());
    v * v.adjoint()
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::param("eta", format!("{eta} not in [0, 1]")))
    }
}

/// The three-outcome POVM `(Π+, Π−, Π?)`.
pub fn povm_elements(eta: f64) -> Result<[PovmElement; 3]> {
    check_eta(eta)?;
    let phi = projector(BellState::PhiPlus) + projector(BellState::PhiMinus);
    let shared = phi * Complex64::new((1.0 - eta) / 2.0, 0.0);
    Ok([
        PovmElement(projector(BellState::PsiPlus) + shared),
        PovmElement(projector(BellState::PsiMinus) + shared),
        PovmElement(phi * Complex64::new(eta, 0.0)),
    ])
}

/// Inconclusive probability `η/2`, the same for every equatorial input.
#[allow(non_snake_case)]
pub fn theory_PI(eta: f64) -> f64 {
    eta / 2.0
}

/// Mean fidelity `(3 − 2P_I) / (4(1 − P_I))` of the conclusive results.
#[allow(non_snake_case)]
pub fn fidelity_from_PI(p_inconclusive: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p_inconclusive) {
        return Err(Error::param(
            "p_inconclusive",
            format!("{p_inconclusive} not in [0, 1)"),
        ));
    }
    Ok((3.0 - 2.0 * p_inconclusive) / (4.0 * (1.0 - p_inconclusive)))
}

/// Only single-qubit programs are realized; larger registers are rejected.
pub fn check_program_copies(copies: u32) -> Result<()> {
    match copies {
        1 => Ok(()),
        0 => Err(Error::param("program_copies", "must be at least 1")),
        n => Err(Error::Unsupported(format!(
            "program registers of {n} copies; only single-qubit programs are implemented"
        ))),
    }
}

/// Effective data-qubit POVM `(π+, π−, π?)` obtained by contracting each
/// joint element with the program state: `π = ⟨φ_p| Π |φ_p⟩`.
pub fn effective_povm(program: &PolarizationState, eta: f64) -> Result<[Matrix2<Complex64>; 3]> {
    let half = 0.5;
    if (program.h().norm_sqr() - half).abs() > 1e-9 || (program.v().norm_sqr() - half).abs() > 1e-9 {
        return Err(Error::NonEquatorial);
    }
    let p = program.amplitudes();
    let elements = povm_elements(eta)?;
    Ok(elements.map(|e| {
        let m = e.matrix();
        Matrix2::from_fn(|d, d2| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (q, pq) in p.iter().enumerate() {
                for (q2, pq2) in p.iter().enumerate() {
                    acc += pq.conj() * m[(2 * d + q, 2 * d2 + q2)] * pq2;
                }
            }
            acc
        })
    }))
}

/// Turns the `η = 1` record into the `η` variant: each inconclusive outcome
/// is kept with probability `η`, otherwise relabeled `Ψ+` or `Ψ−` with equal
/// probability. Conclusive outcomes pass through.
pub fn reinterpret<'a, I, R>(
    outcomes: I,
    eta: f64,
    rng: &'a mut R,
) -> Result<impl Iterator<Item = Outcome> + 'a>
where
    I: IntoIterator<Item = Outcome>,
    I::IntoIter: 'a,
    R: Rng + ?Sized,
{
    check_eta(eta)?;
    Ok(outcomes.into_iter().map(move |o| match o {
        Outcome::Inconclusive if !rng.gen_bool(eta) => {
            if rng.gen_bool(0.5) {
                Outcome::PsiPlus
            } else {
                Outcome::PsiMinus
            }
        }
        other => other,
    }))
}

/// Inconclusive-result probability from counts: one minus the mean
/// normalized conclusive rate of the two inputs.
#[allow(non_snake_case)]
pub fn estimate_PI(counts: &CountRecord) -> Result<f64> {
    estimate_PI_with_error(counts).map(|e| e.value)
}

#[allow(non_snake_case)]
pub fn estimate_PI_with_error(counts: &CountRecord) -> Result<Estimate> {
    let (s1, s2) = shoulder_sums(counts)?;
    let (r1, v1) = normalized_rate((counts.c_pp + counts.c_mp) as f64, s1);
    let (r2, v2) = normalized_rate((counts.c_mm + counts.c_pm) as f64, s2);
    Ok(Estimate::new(1.0 - 0.5 * (r1 + r2), 0.5 * (v1 + v2).sqrt()))
}

/// Correct conclusive over all conclusive outcomes, averaged over the two
/// inputs with weight 1/2.
pub fn estimate_fidelity(counts: &CountRecord) -> Result<Estimate> {
    let n1 = (counts.c_pp + counts.c_mp) as f64;
    let n2 = (counts.c_mm + counts.c_pm) as f64;
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::NoData);
    }
    let f1 = counts.c_pp as f64 / n1;
    let f2 = counts.c_mm as f64 / n2;
    let e1 = binomial_stderr(counts.c_pp as f64, n1);
    let e2 = binomial_stderr(counts.c_mm as f64, n2);
    Ok(Estimate::new(0.5 * (f1 + f2), 0.5 * (e1 * e1 + e2 * e2).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultimeterPoint {
    pub phi: f64,
    pub eta: f64,
    pub theory_pi: f64,
    pub theory_fidelity: f64,
    pub p_inconclusive: Result<Estimate>,
    pub fidelity: Result<Estimate>,
    pub error_rate: Result<Estimate>,
    pub counts: CountRecord,
}

fn reinterpret_counts<R: Rng + ?Sized>(counts: &ClassCounts, eta: f64, rng: &mut R) -> Result<ClassCounts> {
    let mut out = ClassCounts::from_outcomes(reinterpret(counts.outcomes(), eta, rng)?);
    out.accidentals = counts.accidentals;
    out.generated = counts.generated;
    Ok(out)
}

/// Simulates the `η = 1` device at every phase (data `ψ±(φ)`, program
/// `ψ+(φ)`) and derives each requested `η` by reinterpreting the recorded
/// outcomes. Points are ordered phase-major.
pub fn run_multimeter_sweep(
    phis: &[f64],
    etas: &[f64],
    config: &ExperimentConfig,
    pairs_per_point: f64,
    seed: u64,
) -> Result<Vec<MultimeterPoint>> {
    if phis.is_empty() || etas.is_empty() {
        return Err(Error::param("grid", "φ and η grids must be nonempty"));
    }
    for &eta in etas {
        check_eta(eta)?;
    }
    let config = config.with_pairs_per_setting(pairs_per_point);
    config.validate()?;

    let per_phi: Vec<Vec<MultimeterPoint>> = phis
        .par_iter()
        .enumerate()
        .map(|(i, &phi)| {
            let mut rng = point_rng(seed, i as u64);
            let program = recipe_multimeter(phi, Sign::Plus);
            let plus = InputSetting::new(program, program);
            let minus = InputSetting::new(recipe_multimeter(phi, Sign::Minus), program);
            let measured = measure_point(&plus, &minus, &config, &mut rng)?;
            etas.iter()
                .map(|&eta| {
                    let main_plus = reinterpret_counts(&measured.main_plus, eta, &mut rng)?;
                    let main_minus = reinterpret_counts(&measured.main_minus, eta, &mut rng)?;
                    let counts = CountRecord {
                        c_pp: main_plus.psi_plus,
                        c_mp: main_plus.psi_minus,
                        c_pm: main_minus.psi_plus,
                        c_mm: main_minus.psi_minus,
                        ..measured.record
                    };
                    let theory_pi = theory_PI(eta);
                    Ok(MultimeterPoint {
                        phi,
                        eta,
                        theory_pi,
                        theory_fidelity: fidelity_from_PI(theory_pi)?,
                        p_inconclusive: estimate_PI_with_error(&counts),
                        fidelity: estimate_fidelity(&counts),
                        error_rate: crate::discriminator::error_rate_with_error(&counts),
                        counts,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_phi.into_iter().flatten().collect())
}

/// `{−90, −82, …, 90}` degrees.
pub fn default_phis() -> Vec<f64> {
    (0..=22).map(|k| -90.0 + 8.0 * k as f64).collect()
}

/// Equatorial basis state, kept here for callers that think in `ψ±(φ)`.
pub fn basis_state(phi: f64, sign: Sign) -> PolarizationState {
    prepare_equatorial(phi, sign)
}
