//! Linear-optics partial Bell analyzer.
//!
//! The data photon enters beamsplitter port `a`, the program photon port `b`.
//! Each beamsplitter output is followed by a polarizing beamsplitter, giving
//! four detectors:
//!
//! | detector | output port | polarization |
//! |----------|-------------|--------------|
//! | D1       | 1           | H            |
//! | D2       | 1           | V            |
//! | D3       | 2           | V            |
//! | D4       | 2           | H            |
//!
//! Photons counter-propagating onto a cube beamsplitter see an extra 180°
//! between their horizontal field components. With that geometric phase the
//! triplet `Ψ+` anti-bunches into `{D1,D3}`/`{D2,D4}` and the singlet `Ψ−`
//! bunches into `{D1,D2}`/`{D3,D4}`. `Φ±` always land both photons on one
//! detector.

use crate::error::{Error, Result};
use crate::twophoton::TwoPhotonState;
use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Detector {
    D1,
    D2,
    D3,
    D4,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::D1, Detector::D2, Detector::D3, Detector::D4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Detector behind output mode `mode` (see [`bs_transform`] for mode order).
    pub fn for_output_mode(mode: usize) -> Self {
        match mode {
            0 => Detector::D1,
            1 => Detector::D2,
            2 => Detector::D4,
            3 => Detector::D3,
            _ => panic!("output mode {mode} out of range"),
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}", self.index() + 1)
    }
}

/// Result of one analyzed photon pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    PsiPlus,
    PsiMinus,
    Inconclusive,
}

/// The two detectors hit by a photon pair; a detector may appear twice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoincidencePattern {
    fired: [Detector; 2],
}

impl CoincidencePattern {
    pub fn new(fired: &[Detector]) -> Result<Self> {
        match *fired {
            [a, b] => Ok(Self::pair(a, b)),
            _ => Err(Error::PhotonCount(fired.len())),
        }
    }

    pub fn pair(a: Detector, b: Detector) -> Self {
        Self {
            fired: if a <= b { [a, b] } else { [b, a] },
        }
    }

    pub fn detectors(&self) -> [Detector; 2] {
        self.fired
    }

    pub fn is_same_detector(&self) -> bool {
        self.fired[0] == self.fired[1]
    }

    /// All ten unordered patterns, in `(i ≤ j)` lexical order.
    pub fn all() -> impl Iterator<Item = Self> {
        (0..4).flat_map(|i| {
            (i..4).map(move |j| Self {
                fired: [Detector::ALL[i], Detector::ALL[j]],
            })
        })
    }
}

/// Which detector pairs count as `Ψ+` and `Ψ−` coincidences. Everything else,
/// including two photons on the same detector, is inconclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorMapping {
    pub psi_plus: Vec<[Detector; 2]>,
    pub psi_minus: Vec<[Detector; 2]>,
}

impl Default for DetectorMapping {
    fn default() -> Self {
        use Detector::*;
        Self {
            psi_plus: vec![[D1, D3], [D2, D4]],
            psi_minus: vec![[D1, D2], [D3, D4]],
        }
    }
}

impl DetectorMapping {
    pub fn validate(&self) -> Result<()> {
        for p in &self.psi_plus {
            let p = CoincidencePattern::pair(p[0], p[1]);
            if self
                .psi_minus
                .iter()
                .any(|m| CoincidencePattern::pair(m[0], m[1]) == p)
            {
                return Err(Error::Config(format!(
                    "detector pair {{{}, {}}} mapped to both outcomes",
                    p.fired[0], p.fired[1]
                )));
            }
        }
        Ok(())
    }

    pub fn classify(&self, pattern: &CoincidencePattern) -> Outcome {
        let hit = |pairs: &[[Detector; 2]]| {
            pairs
                .iter()
                .any(|p| CoincidencePattern::pair(p[0], p[1]) == *pattern)
        };
        if pattern.is_same_detector() {
            Outcome::Inconclusive
        } else if hit(&self.psi_plus) {
            Outcome::PsiPlus
        } else if hit(&self.psi_minus) {
            Outcome::PsiMinus
        } else {
            Outcome::Inconclusive
        }
    }
}

/// Classifies with the default detector mapping.
pub fn classify(pattern: &CoincidencePattern) -> Outcome {
    DetectorMapping::default().classify(pattern)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzerConfig {
    /// Intensity transmittance of the beamsplitter for H light.
    pub transmittance_h: f64,
    /// Intensity transmittance of the beamsplitter for V light.
    pub transmittance_v: f64,
    /// Indistinguishability `M` of the two photons at the beamsplitter.
    pub mode_overlap: f64,
    pub geometric_phase: bool,
    pub detector_mapping: DetectorMapping,
}

/// Balanced splitter with the calibrated overlap `M = 0.92`.
impl Default for AnalyzerConfig {
    fn default() -> Self {
        Self::ideal().with_mode_overlap(0.92)
    }
}

impl AnalyzerConfig {
    pub fn ideal() -> Self {
        Self {
            transmittance_h: 0.5,
            transmittance_v: 0.5,
            mode_overlap: 1.0,
            geometric_phase: true,
            detector_mapping: DetectorMapping::default(),
        }
    }

    pub fn with_mode_overlap(mut self, m: f64) -> Self {
        self.mode_overlap = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("transmittance_h", self.transmittance_h),
            ("transmittance_v", self.transmittance_v),
        ] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::param(name, format!("{t} not in (0, 1)")));
            }
        }
        if !(0.0..=1.0).contains(&self.mode_overlap) {
            return Err(Error::param(
                "mode_overlap",
                format!("{} not in [0, 1]", self.mode_overlap),
            ));
        }
        self.detector_mapping.validate()
    }
}

/// Mode transformation of beamsplitter plus polarizing beamsplitters.
///
/// Input modes are `(a,H), (a,V), (b,H), (b,V)`; output modes are
/// `(1,H), (1,V), (2,H), (2,V)`, i.e. detectors D1, D2, D4, D3. Entry
/// `[out, in]` is the amplitude for a photon in `in` to leave in `out`.
pub fn bs_transform(config: &AnalyzerConfig) -> Result<Matrix4<Complex64>> {
    config.validate()?;
    let zero = Complex64::new(0.0, 0.0);
    let mut u = Matrix4::from_element(zero);
    for (pol, transmittance) in [(0, config.transmittance_h), (1, config.transmittance_v)] {
        let t = Complex64::new(transmittance.sqrt(), 0.0);
        let r = Complex64::new(0.0, (1.0 - transmittance).sqrt());
        // Extra 180° on the horizontal component arriving from port b.
        let phase = if pol == 0 && config.geometric_phase {
            -1.0
        } else {
            1.0
        };
        let (a_in, b_in) = (pol, 2 + pol);
        let (out1, out2) = (pol, 2 + pol);
        u[(out1, a_in)] = t;
        u[(out2, a_in)] = r;
        u[(out1, b_in)] = r * phase;
        u[(out2, b_in)] = t * phase;
    }
    Ok(u)
}

/// Probability of each unordered detector pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternProbs {
    // Indexed by detector index, upper triangle (i ≤ j) only.
    table: [[f64; 4]; 4],
}

impl PatternProbs {
    fn zero() -> Self {
        Self {
            table: [[0.0; 4]; 4],
        }
    }

    fn add(&mut self, mode_k: usize, mode_l: usize, p: f64) {
        let a = Detector::for_output_mode(mode_k).index();
        let b = Detector::for_output_mode(mode_l).index();
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        self.table[i][j] += p;
    }

    pub fn get(&self, pattern: &CoincidencePattern) -> f64 {
        let [a, b] = pattern.detectors();
        self.table[a.index()][b.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (CoincidencePattern, f64)> + '_ {
        CoincidencePattern::all().map(move |p| (p, self.get(&p)))
    }

    pub fn total(&self) -> f64 {
        self.iter().map(|(_, p)| p).sum()
    }

    /// `weight · self + (1 − weight) · other`.
    pub fn mix(&self, other: &Self, weight: f64) -> Self {
        let mut out = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.table[i][j] = weight * self.table[i][j] + (1.0 - weight) * other.table[i][j];
            }
        }
        out
    }

    pub fn outcomes(&self, mapping: &DetectorMapping) -> OutcomeProbs {
        let mut out = OutcomeProbs::default();
        for (pattern, p) in self.iter() {
            match mapping.classify(&pattern) {
                Outcome::PsiPlus => out.psi_plus += p,
                Outcome::PsiMinus => out.psi_minus += p,
                Outcome::Inconclusive => out.inconclusive += p,
            }
        }
        out
    }

    /// Probability that both photons leave the beamsplitter by the same port.
    pub fn same_port(&self) -> f64 {
        use Detector::*;
        let port1 = [D1, D2];
        let port2 = [D3, D4];
        self.iter()
            .filter(|(pat, _)| {
                let [a, b] = pat.detectors();
                (port1.contains(&a) && port1.contains(&b)) || (port2.contains(&a) && port2.contains(&b))
            })
            .map(|(_, p)| p)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OutcomeProbs {
    pub psi_plus: f64,
    pub psi_minus: f64,
    pub inconclusive: f64,
}

impl OutcomeProbs {
    pub fn get(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::PsiPlus => self.psi_plus,
            Outcome::PsiMinus => self.psi_minus,
            Outcome::Inconclusive => self.inconclusive,
        }
    }

    pub fn total(&self) -> f64 {
        self.psi_plus + self.psi_minus + self.inconclusive
    }
}

/// `S[k][l]`: amplitude for the data photon to reach output mode `k` and the
/// program photon output mode `l`.
fn routing_amplitudes(state: &TwoPhotonState, u: &Matrix4<Complex64>) -> [[Complex64; 4]; 4] {
    let mut s = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (k, row) in s.iter_mut().enumerate() {
        for (l, cell) in row.iter_mut().enumerate() {
            for x in 0..2 {
                for y in 0..2 {
                    *cell += state.amplitude(x, y) * u[(k, x)] * u[(l, 2 + y)];
                }
            }
        }
    }
    s
}

/// Pattern probabilities for perfectly indistinguishable photons.
///
/// The input creation-operator polynomial is propagated mode by mode; for
/// `k ≠ l` the coefficient of `b†_k b†_l` is `S_kl + S_lk`, and a doubly
/// occupied mode carries the bosonic factor 2 in its probability.
pub fn quantum_pattern_probs(state: &TwoPhotonState, config: &AnalyzerConfig) -> Result<PatternProbs> {
    let s = routing_amplitudes(state, &bs_transform(config)?);
    let mut probs = PatternProbs::zero();
    for k in 0..4 {
        probs.add(k, k, 2.0 * s[k][k].norm_sqr());
        for l in (k + 1)..4 {
            probs.add(k, l, (s[k][l] + s[l][k]).norm_sqr());
        }
    }
    Ok(probs)
}

/// Pattern probabilities for fully distinguishable photons, each routed
/// through the beamsplitter on its own.
pub fn distinguishable_pattern_probs(
    state: &TwoPhotonState,
    config: &AnalyzerConfig,
) -> Result<PatternProbs> {
    let s = routing_amplitudes(state, &bs_transform(config)?);
    let mut probs = PatternProbs::zero();
    for (k, row) in s.iter().enumerate() {
        for (l, amp) in row.iter().enumerate() {
            probs.add(k, l, amp.norm_sqr());
        }
    }
    Ok(probs)
}

/// Pattern probabilities at mode overlap `overlap`:
/// `M · quantum + (1 − M) · distinguishable`.
pub fn mixed_pattern_probs(
    state: &TwoPhotonState,
    config: &AnalyzerConfig,
    overlap: f64,
) -> Result<PatternProbs> {
    let q = quantum_pattern_probs(state, config)?;
    let d = distinguishable_pattern_probs(state, config)?;
    Ok(q.mix(&d, overlap))
}

/// Outcome probabilities of the fully interfering branch.
pub fn ideal_outcome_probs(state: &TwoPhotonState, config: &AnalyzerConfig) -> Result<OutcomeProbs> {
    Ok(quantum_pattern_probs(state, config)?.outcomes(&config.detector_mapping))
}

/// Outcome probabilities of the non-interfering branch.
pub fn distinguishable_outcome_probs(
    state: &TwoPhotonState,
    config: &AnalyzerConfig,
) -> Result<OutcomeProbs> {
    Ok(distinguishable_pattern_probs(state, config)?.outcomes(&config.detector_mapping))
}

/// Outcome probabilities at the configured mode overlap.
pub fn outcome_probs(state: &TwoPhotonState, config: &AnalyzerConfig) -> Result<OutcomeProbs> {
    Ok(mixed_pattern_probs(state, config, config.mode_overlap)?.outcomes(&config.detector_mapping))
}
