//! Joint data ⊗ program polarization states and the Bell basis.
//!
//! Product basis ordering is `(HH, HV, VH, VV)` with the data photon first.
//! Bell ordering is `(Φ+, Φ−, Ψ+, Ψ−)` everywhere.

use crate::polarization::PolarizationState;
use nalgebra::Vector4;
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

pub const HH: usize = 0;
pub const HV: usize = 1;
pub const VH: usize = 2;
pub const VV: usize = 3;

/// Labels of the four Bell states, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Amplitudes of the Bell state in the product basis.
    pub fn amplitudes(self) -> [Complex64; 4] {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        match self {
            BellState::PhiPlus => [r, z, z, r],
            BellState::PhiMinus => [r, z, z, -r],
            BellState::PsiPlus => [z, r, r, z],
            BellState::PsiMinus => [z, r, -r, z],
        }
    }

    pub fn state(self) -> TwoPhotonState {
        TwoPhotonState {
            amplitudes: self.amplitudes(),
        }
    }
}

/// Pure two-photon polarization state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonState {
    amplitudes: [Complex64; 4],
}

impl TwoPhotonState {
    /// Normalizing constructor; `None` for the zero vector.
    pub fn new(amplitudes: [Complex64; 4]) -> Option<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return None;
        }
        Some(Self {
            amplitudes: amplitudes.map(|a| a / norm),
        })
    }

    pub fn product(data: &PolarizationState, program: &PolarizationState) -> Self {
        tensor(data, program)
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }

    /// Amplitude for data polarization `d` and program polarization `p`
    /// (0 = H, 1 = V).
    pub fn amplitude(&self, d: usize, p: usize) -> Complex64 {
        self.amplitudes[2 * d + p]
    }

    pub fn as_vector(&self) -> Vector4<Complex64> {
        Vector4::from_column_slice(&self.amplitudes)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// State with the two photons' roles exchanged.
    pub fn swapped(&self) -> Self {
        let a = self.amplitudes;
        Self {
            amplitudes: [a[HH], a[VH], a[HV], a[VV]],
        }
    }
}

/// `data ⊗ program`.
pub fn tensor(data: &PolarizationState, program: &PolarizationState) -> TwoPhotonState {
    let d = data.amplitudes();
    let p = program.amplitudes();
    TwoPhotonState {
        amplitudes: [d[0] * p[0], d[0] * p[1], d[1] * p[0], d[1] * p[1]],
    }
}

/// Coefficients of a two-photon state in the Bell basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDecomposition {
    pub c_phi_plus: Complex64,
    pub c_phi_minus: Complex64,
    pub c_psi_plus: Complex64,
    pub c_psi_minus: Complex64,
}

impl BellDecomposition {
    pub fn coefficient(&self, bell: BellState) -> Complex64 {
        match bell {
            BellState::PhiPlus => self.c_phi_plus,
            BellState::PhiMinus => self.c_phi_minus,
            BellState::PsiPlus => self.c_psi_plus,
            BellState::PsiMinus => self.c_psi_minus,
        }
    }

    pub fn as_array(&self) -> [Complex64; 4] {
        [
            self.c_phi_plus,
            self.c_phi_minus,
            self.c_psi_plus,
            self.c_psi_minus,
        ]
    }

    /// Rebuilds the product-basis amplitudes.
    pub fn reconstruct(&self) -> TwoPhotonState {
        let mut amplitudes = [Complex64::new(0.0, 0.0); 4];
        for bell in BellState::ALL {
            let c = self.coefficient(bell);
            for (out, b) in amplitudes.iter_mut().zip(bell.amplitudes()) {
                *out += c * b;
            }
        }
        TwoPhotonState { amplitudes }
    }
}

pub fn bell_decompose(state: &TwoPhotonState) -> BellDecomposition {
    let a = state.amplitudes;
    let r = FRAC_1_SQRT_2;
    BellDecomposition {
        c_phi_plus: (a[HH] + a[VV]) * r,
        c_phi_minus: (a[HH] - a[VV]) * r,
        c_psi_plus: (a[HV] + a[VH]) * r,
        c_psi_minus: (a[HV] - a[VH]) * r,
    }
}

/// Bell-outcome probabilities in `(Φ+, Φ−, Ψ+, Ψ−)` order.
pub fn bell_probabilities(state: &TwoPhotonState) -> [f64; 4] {
    bell_decompose(state).as_array().map(|c| c.norm_sqr())
}
