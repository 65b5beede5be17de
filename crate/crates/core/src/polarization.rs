//! Single-photon polarization qubits in Jones calculus.
//!
//! A [`PolarizationState`] is a normalized complex 2-vector over the
//! horizontal/vertical basis. States are only ever compared up to a global
//! phase, since wave-plate recipes fix them only up to phase.
//!
//! Wave plates are ideal retarders, `R(θ) · diag(1, e^{-iδ}) · R(-θ)` with
//! `δ = 180°` (half) or `δ = 90°` (quarter) and `R` a real rotation. This is
//! the handedness under which the preparation recipes below land on their
//! analytic targets. All angles are in degrees.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Complex 2×2 Jones matrix.
pub type JonesMatrix = Matrix2<Complex64>;

/// The `±` label carried by data/program states throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Pure polarization state `h|H⟩ + v|V⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    h: Complex64,
    v: Complex64,
}

impl PolarizationState {
    /// Builds a state from raw amplitudes, normalizing them.
    ///
    /// Returns `None` for the zero vector.
    pub fn new(h: Complex64, v: Complex64) -> Option<Self> {
        let norm = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return None;
        }
        Some(Self {
            h: h / norm,
            v: v / norm,
        })
    }

    pub fn horizontal() -> Self {
        Self {
            h: Complex64::new(1.0, 0.0),
            v: Complex64::new(0.0, 0.0),
        }
    }

    pub fn vertical() -> Self {
        Self {
            h: Complex64::new(0.0, 0.0),
            v: Complex64::new(1.0, 0.0),
        }
    }

    /// Linear polarization at `angle` degrees from horizontal.
    pub fn linear(angle: f64) -> Self {
        let (s, c) = angle.to_radians().sin_cos();
        Self {
            h: Complex64::new(c, 0.0),
            v: Complex64::new(s, 0.0),
        }
    }

    pub fn h(&self) -> Complex64 {
        self.h
    }

    pub fn v(&self) -> Complex64 {
        self.v
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [self.h, self.v]
    }

    pub fn as_vector(&self) -> Vector2<Complex64> {
        Vector2::new(self.h, self.v)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn overlap(&self, other: &Self) -> Complex64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    /// `|⟨self|other⟩|`, the phase-insensitive similarity used for all
    /// state comparisons.
    pub fn fidelity_amplitude(&self, other: &Self) -> f64 {
        self.overlap(other).norm()
    }

    fn from_vector(v: Vector2<Complex64>) -> Self {
        Self { h: v[0], v: v[1] }
    }
}

/// `⟨s1|s2⟩`.
pub fn overlap(s1: &PolarizationState, s2: &PolarizationState) -> Complex64 {
    s1.overlap(s2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlateKind {
    Half,
    Quarter,
}

impl PlateKind {
    /// Retardance in degrees.
    pub fn retardance(self) -> f64 {
        match self {
            PlateKind::Half => 180.0,
            PlateKind::Quarter => 90.0,
        }
    }
}

/// An ideal wave plate with its fast axis at `angle` degrees from horizontal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePlate {
    pub kind: PlateKind,
    pub angle: f64,
}

impl WavePlate {
    pub fn half(angle: f64) -> Self {
        Self {
            kind: PlateKind::Half,
            angle,
        }
    }

    pub fn quarter(angle: f64) -> Self {
        Self {
            kind: PlateKind::Quarter,
            angle,
        }
    }

    pub fn matrix(&self) -> JonesMatrix {
        waveplate_matrix(self)
    }
}

fn rotation(angle: f64) -> JonesMatrix {
    let (s, c) = angle.to_radians().sin_cos();
    Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    )
}

/// Jones matrix of an ideal retarder. The angle is taken modulo 180°.
pub fn waveplate_matrix(plate: &WavePlate) -> JonesMatrix {
    let angle = plate.angle.rem_euclid(180.0);
    let retard = Complex64::from_polar(1.0, -plate.kind.retardance().to_radians());
    let core = Matrix2::new(
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        retard,
    );
    rotation(angle) * core * rotation(-angle)
}

pub fn apply_plate(state: &PolarizationState, plate: &WavePlate) -> PolarizationState {
    PolarizationState::from_vector(waveplate_matrix(plate) * state.as_vector())
}

/// Quarter-wave plate followed by half-wave plate, acting on `|H⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepRecipe {
    pub qwp_angle: f64,
    pub hwp_angle: f64,
}

impl PrepRecipe {
    pub fn new(qwp_angle: f64, hwp_angle: f64) -> Self {
        Self {
            qwp_angle,
            hwp_angle,
        }
    }

    /// Linear polarization at `angle` degrees, made with the half-wave plate only.
    pub fn linear(angle: f64) -> Self {
        Self::new(0.0, angle / 2.0)
    }

    pub fn plates(&self) -> [WavePlate; 2] {
        [WavePlate::quarter(self.qwp_angle), WavePlate::half(self.hwp_angle)]
    }

    /// Recipe with both plates offset by the given errors (degrees).
    pub fn perturbed(&self, qwp_error: f64, hwp_error: f64) -> Self {
        Self::new(self.qwp_angle + qwp_error, self.hwp_angle + hwp_error)
    }

    pub fn prepare(&self) -> PolarizationState {
        self.plates()
            .iter()
            .fold(PolarizationState::horizontal(), |s, p| apply_plate(&s, p))
    }
}

/// Elliptical state `(x cos ϑ + i y sin ϑ)|H⟩ ± (x sin ϑ − i y cos ϑ)|V⟩`
/// with `x = cos ε`, `y = sin ε`.
pub fn prepare_elliptical(epsilon: f64, theta: f64, sign: Sign) -> PolarizationState {
    let (y, x) = epsilon.to_radians().sin_cos();
    let (st, ct) = theta.to_radians().sin_cos();
    let h = Complex64::new(x * ct, y * st);
    let v = Complex64::new(x * st, -y * ct) * sign.value();
    // Already unit norm: |h|² + |v|² = x² + y².
    PolarizationState { h, v }
}

/// Plate settings producing [`prepare_elliptical`] from `|H⟩`.
pub fn recipe_discriminator(epsilon: f64, theta: f64, sign: Sign) -> PrepRecipe {
    let s = sign.value();
    PrepRecipe::new(s * epsilon, s * (epsilon + theta) / 2.0)
}

/// Equatorial state `(|H⟩ ± e^{iφ}|V⟩)/√2`.
pub fn prepare_equatorial(phi: f64, sign: Sign) -> PolarizationState {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    PolarizationState {
        h: Complex64::new(r, 0.0),
        v: Complex64::from_polar(r, phi.rem_euclid(360.0).to_radians()) * sign.value(),
    }
}

/// Plate settings producing [`prepare_equatorial`] from `|H⟩`; the minus
/// state uses the negated angles.
pub fn recipe_multimeter(phi: f64, sign: Sign) -> PrepRecipe {
    let s = sign.value();
    PrepRecipe::new(s * (-phi / 2.0), s * (90.0 - phi) / 4.0)
}
