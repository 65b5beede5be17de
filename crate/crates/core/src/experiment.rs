//! Monte Carlo emulation of the photon-counting experiment.
//!
//! A measurement of one input setting consists of `repetitions` periods.
//! In every period the wave-plate angles are perturbed (uniform jitter), a
//! Poisson number of pairs is generated, each pair is routed through the
//! analyzer at the current mode overlap, and a pair registers only if both
//! photons are detected. Dark counts produce accidental two-detector
//! coincidences within the coincidence window.
//!
//! Each sweep point draws from its own ChaCha stream, selected from the
//! master seed by the point index, so results do not depend on scheduling.

use crate::analyzer::{mixed_pattern_probs, AnalyzerConfig, CoincidencePattern, Detector, Outcome};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::polarization::{PrepRecipe, Sign};
use crate::twophoton::tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Pairs per second.
    pub pair_rate: f64,
    /// Length of one measurement period, seconds.
    pub period: f64,
    pub repetitions: u32,
    pub detector_efficiency: f64,
    /// Dark counts per second per detector.
    pub dark_count_rate: f64,
    /// Coincidence window, seconds.
    pub coincidence_window: f64,
    pub analyzer: AnalyzerConfig,
    /// Width of the Gaussian mode-overlap dip, micrometers.
    pub dip_sigma: f64,
    /// Mirror displacement used for shoulder measurements, micrometers.
    pub shoulder_position: f64,
    /// Half-width of the uniform wave-plate angle error, degrees.
    pub angle_jitter: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            pair_rate: 100_000.0,
            period: 1.0,
            repetitions: 10,
            detector_efficiency: 0.5,
            dark_count_rate: 100.0,
            coincidence_window: 10e-9,
            analyzer: AnalyzerConfig::default(),
            dip_sigma: 35.0,
            shoulder_position: 150.0,
            angle_jitter: 1.0,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Perfect detectors, no dark counts, no jitter, balanced splitter, M = 1.
    pub fn ideal() -> Self {
        Self {
            detector_efficiency: 1.0,
            dark_count_rate: 0.0,
            analyzer: AnalyzerConfig::ideal(),
            angle_jitter: 0.0,
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("pair_rate", self.pair_rate),
            ("dark_count_rate", self.dark_count_rate),
            ("coincidence_window", self.coincidence_window),
            ("shoulder_position", self.shoulder_position),
            ("angle_jitter", self.angle_jitter),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("{v} must be finite and nonnegative")));
            }
        }
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Error::param("period", format!("{} must be positive", self.period)));
        }
        if self.repetitions == 0 {
            return Err(Error::param("repetitions", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.detector_efficiency) {
            return Err(Error::param(
                "detector_efficiency",
                format!("{} not in [0, 1]", self.detector_efficiency),
            ));
        }
        if !(self.dip_sigma > 0.0) {
            return Err(Error::param("dip_sigma", format!("{} must be positive", self.dip_sigma)));
        }
        self.analyzer.validate()
    }

    /// Total measurement time of one setting, seconds.
    pub fn measurement_time(&self) -> f64 {
        self.period * self.repetitions as f64
    }

    /// Mean number of generated pairs per setting.
    pub fn pairs_per_setting(&self) -> f64 {
        self.pair_rate * self.measurement_time()
    }

    /// Copy with `pair_rate` chosen so one setting sees `pairs` pairs on average.
    pub fn with_pairs_per_setting(&self, pairs: f64) -> Self {
        Self {
            pair_rate: pairs / self.measurement_time(),
            ..self.clone()
        }
    }
}

/// Coincidence counts in the notation `C^{outcome, input}`: `c_mp` is the
/// number of `Ψ−` coincidences for the `+` input, and so on. Shoulder counts
/// use the 45°/45° (`+`) and −45°/45° (`−`) settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CountRecord {
    pub c_pp: u64,
    pub c_pm: u64,
    pub c_mp: u64,
    pub c_mm: u64,
    pub sh_pp: u64,
    pub sh_pm: u64,
    pub sh_mp: u64,
    pub sh_mm: u64,
}

impl CountRecord {
    pub const COLUMNS: [&'static str; 8] = [
        "c_pp", "c_pm", "c_mp", "c_mm", "sh_pp", "sh_pm", "sh_mp", "sh_mm",
    ];

    pub fn from_settings(
        main_plus: &ClassCounts,
        main_minus: &ClassCounts,
        shoulder_plus: &ClassCounts,
        shoulder_minus: &ClassCounts,
    ) -> Self {
        Self {
            c_pp: main_plus.psi_plus,
            c_mp: main_plus.psi_minus,
            c_pm: main_minus.psi_plus,
            c_mm: main_minus.psi_minus,
            sh_pp: shoulder_plus.psi_plus,
            sh_mp: shoulder_plus.psi_minus,
            sh_pm: shoulder_minus.psi_plus,
            sh_mm: shoulder_minus.psi_minus,
        }
    }

    pub fn values(&self) -> [u64; 8] {
        [
            self.c_pp, self.c_pm, self.c_mp, self.c_mm, self.sh_pp, self.sh_pm, self.sh_mp,
            self.sh_mm,
        ]
    }

    pub fn from_values(v: [u64; 8]) -> Self {
        Self {
            c_pp: v[0],
            c_pm: v[1],
            c_mp: v[2],
            c_mm: v[3],
            sh_pp: v[4],
            sh_pm: v[5],
            sh_mp: v[6],
            sh_mm: v[7],
        }
    }

    /// Shoulder normalization for the `+` input, `C^{++}_sh + C^{−+}_sh`.
    pub fn shoulder_plus(&self) -> u64 {
        self.sh_pp + self.sh_mp
    }

    /// Shoulder normalization for the `−` input, `C^{−−}_sh + C^{+−}_sh`.
    pub fn shoulder_minus(&self) -> u64 {
        self.sh_mm + self.sh_pm
    }

    pub fn conclusive(&self) -> u64 {
        self.c_pp + self.c_pm + self.c_mp + self.c_mm
    }
}

/// Per-setting tally of classified events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub psi_plus: u64,
    pub psi_minus: u64,
    /// Pairs with both photons detected but an inconclusive pattern.
    pub inconclusive: u64,
    /// Accidental dark-count coincidences (already included in the Ψ± counts
    /// when they fall on a conclusive detector pair).
    pub accidentals: u64,
    /// Pairs generated, detected or not.
    pub generated: u64,
}

impl ClassCounts {
    pub fn add(&mut self, outcome: Outcome, n: u64) {
        match outcome {
            Outcome::PsiPlus => self.psi_plus += n,
            Outcome::PsiMinus => self.psi_minus += n,
            Outcome::Inconclusive => self.inconclusive += n,
        }
    }

    pub fn get(&self, outcome: Outcome) -> u64 {
        match outcome {
            Outcome::PsiPlus => self.psi_plus,
            Outcome::PsiMinus => self.psi_minus,
            Outcome::Inconclusive => self.inconclusive,
        }
    }

    /// The recorded events as a stream, in `Ψ+`, `Ψ−`, inconclusive order.
    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> {
        std::iter::repeat_n(Outcome::PsiPlus, self.psi_plus as usize)
            .chain(std::iter::repeat_n(Outcome::PsiMinus, self.psi_minus as usize))
            .chain(std::iter::repeat_n(Outcome::Inconclusive, self.inconclusive as usize))
    }

    pub fn from_outcomes(outcomes: impl IntoIterator<Item = Outcome>) -> Self {
        let mut c = Self::default();
        for o in outcomes {
            c.add(o, 1);
        }
        c
    }
}

/// Wave-plate settings for the data and program photons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputSetting {
    pub data: PrepRecipe,
    pub program: PrepRecipe,
}

impl InputSetting {
    pub fn new(data: PrepRecipe, program: PrepRecipe) -> Self {
        Self { data, program }
    }

    /// Shoulder normalization setting: data at ±45°, program at 45°.
    pub fn shoulder(sign: Sign) -> Self {
        Self::new(PrepRecipe::linear(sign.value() * 45.0), PrepRecipe::linear(45.0))
    }
}

/// Random stream for sweep point `index` under master seed `seed`.
pub fn point_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mode overlap `M₀ · exp(−x² / 2σ²)` at mirror displacement `position` (μm).
pub fn mode_overlap_at(position: f64, config: &ExperimentConfig) -> f64 {
    let sigma = config.dip_sigma;
    config.analyzer.mode_overlap * (-(position * position) / (2.0 * sigma * sigma)).exp()
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean > 0.0 {
        Poisson::new(mean).expect("positive mean").sample(rng) as u64
    } else {
        0
    }
}

fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
    }
}

/// Multinomial draw of `n` trials over `probs` (which may sum to less than 1;
/// the remainder is an implicit "lost" category).
fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut remaining_n = n;
    let mut remaining_p = 1.0;
    probs
        .iter()
        .map(|&p| {
            if remaining_n == 0 || remaining_p <= 0.0 {
                return 0;
            }
            let k = binomial(rng, remaining_n, (p / remaining_p).min(1.0));
            remaining_n -= k;
            remaining_p -= p;
            k
        })
        .collect()
}

fn jitter<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.gen_range(-half_width..=half_width)
    } else {
        0.0
    }
}

/// Simulates the coincidence counts of one input setting at mirror
/// displacement `position`.
pub fn simulate_counts<R: Rng + ?Sized>(
    setting: &InputSetting,
    position: f64,
    config: &ExperimentConfig,
    rng: &mut R,
) -> Result<ClassCounts> {
    config.validate()?;
    let overlap = mode_overlap_at(position, config);
    let mapping = &config.analyzer.detector_mapping;
    let both_detected = config.detector_efficiency * config.detector_efficiency;
    let patterns: Vec<CoincidencePattern> = CoincidencePattern::all().collect();
    let mut counts = ClassCounts::default();

    for _ in 0..config.repetitions {
        let j = config.angle_jitter;
        let data = setting.data.perturbed(jitter(rng, j), jitter(rng, j));
        let program = setting.program.perturbed(jitter(rng, j), jitter(rng, j));
        let state = tensor(&data.prepare(), &program.prepare());
        let probs = mixed_pattern_probs(&state, &config.analyzer, overlap)?;
        let weights: Vec<f64> = patterns.iter().map(|p| probs.get(p) * both_detected).collect();

        let pairs = poisson(rng, config.pair_rate * config.period);
        counts.generated += pairs;
        for (pattern, n) in patterns.iter().zip(multinomial(rng, pairs, &weights)) {
            counts.add(mapping.classify(pattern), n);
        }

        if config.dark_count_rate > 0.0 {
            let darks: Vec<u64> = Detector::ALL
                .iter()
                .map(|_| poisson(rng, config.dark_count_rate * config.period))
                .collect();
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let mean = 2.0 * config.coincidence_window * (darks[i] * darks[j]) as f64
                        / config.period;
                    let n = poisson(rng, mean);
                    if n > 0 {
                        let pattern = CoincidencePattern::pair(Detector::ALL[i], Detector::ALL[j]);
                        match mapping.classify(&pattern) {
                            Outcome::Inconclusive => {}
                            o => counts.add(o, n),
                        }
                        counts.accidentals += n;
                    }
                }
            }
        }
    }
    Ok(counts)
}

/// Normalization counts outside the dip for the `+` (45°, 45°) or `−`
/// (−45°, 45°) shoulder setting.
pub fn shoulder_counts<R: Rng + ?Sized>(
    sign: Sign,
    config: &ExperimentConfig,
    rng: &mut R,
) -> Result<ClassCounts> {
    simulate_counts(&InputSetting::shoulder(sign), config.shoulder_position, config, rng)
}

/// Everything measured for one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCounts {
    pub record: CountRecord,
    pub main_plus: ClassCounts,
    pub main_minus: ClassCounts,
}

/// Measures the `+` and `−` inputs at zero mirror displacement, each preceded
/// by its shoulder normalization.
pub fn measure_point<R: Rng + ?Sized>(
    plus: &InputSetting,
    minus: &InputSetting,
    config: &ExperimentConfig,
    rng: &mut R,
) -> Result<PointCounts> {
    let shoulder_plus = shoulder_counts(Sign::Plus, config, rng)?;
    let main_plus = simulate_counts(plus, 0.0, config, rng)?;
    let shoulder_minus = shoulder_counts(Sign::Minus, config, rng)?;
    let main_minus = simulate_counts(minus, 0.0, config, rng)?;
    Ok(PointCounts {
        record: CountRecord::from_settings(&main_plus, &main_minus, &shoulder_plus, &shoulder_minus),
        main_plus,
        main_minus,
    })
}

/// Coincidence rates (per second) at one mirror position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomRow {
    pub position: f64,
    /// `Ψ+` class, inputs 45°/45°.
    pub c_pp: f64,
    /// `Ψ+` class, inputs −45°/45°.
    pub c_pm: f64,
    /// `Ψ−` class, inputs 45°/45°.
    pub c_mp: f64,
    /// `Ψ−` class, inputs −45°/45°.
    pub c_mm: f64,
    /// Mean number of both-detected pairs per second for this setting pair.
    pub detected_pair_rate: f64,
}

/// Least-squares fit of `s · (1 − V · exp(−x²/2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipFit {
    pub shoulder: f64,
    pub visibility: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomScan {
    pub rows: Vec<HomRow>,
    /// Fit of the `Ψ−` class at 45°/45°.
    pub fit_mp: Option<DipFit>,
    /// Fit of the `Ψ+` class at −45°/45°.
    pub fit_pm: Option<DipFit>,
}

impl HomScan {
    /// Mean fitted visibility of the two dipping curves.
    pub fn visibility(&self) -> Option<f64> {
        match (self.fit_mp, self.fit_pm) {
            (Some(a), Some(b)) => Some(0.5 * (a.visibility + b.visibility)),
            (Some(a), None) | (None, Some(a)) => Some(a.visibility),
            (None, None) => None,
        }
    }
}

fn fit_at_sigma(xs: &[f64], ys: &[f64], sigma: f64) -> Option<(f64, f64, f64)> {
    // y = s − w·g(x), linear in (s, w).
    let g: Vec<f64> = xs.iter().map(|x| (-(x * x) / (2.0 * sigma * sigma)).exp()).collect();
    let n = xs.len() as f64;
    let sg: f64 = g.iter().sum();
    let sgg: f64 = g.iter().map(|v| v * v).sum();
    let sy: f64 = ys.iter().sum();
    let sgy: f64 = g.iter().zip(ys).map(|(a, b)| a * b).sum();
    let det = n * sgg - sg * sg;
    if !(det.abs() > 1e-9 * n * n) {
        return None;
    }
    let s = (sgg * sy - sg * sgy) / det;
    let w = (sg * sy - n * sgy) / det;
    let resid: f64 = g
        .iter()
        .zip(ys)
        .map(|(gi, yi)| (yi - (s - w * gi)).powi(2))
        .sum();
    Some((s, w, resid))
}

/// Fits a Gaussian dip centered at zero. Returns `None` when the positions do
/// not constrain the dip depth.
pub fn fit_dip(positions: &[f64], rates: &[f64]) -> Option<DipFit> {
    if positions.len() < 3 || positions.len() != rates.len() {
        return None;
    }
    let span = positions.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if span <= 0.0 {
        return None;
    }
    let (lo, hi) = ((span * 1e-3).ln(), (span * 10.0).ln());
    let resid = |ln_sigma: f64| fit_at_sigma(positions, rates, ln_sigma.exp()).map(|f| f.2);

    let steps = 400;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=steps {
        let t = lo + (hi - lo) * k as f64 / steps as f64;
        if let Some(r) = resid(t) {
            if best.is_none_or(|(_, br)| r < br) {
                best = Some((t, r));
            }
        }
    }
    let (mut a, mut b) = {
        let (t, _) = best?;
        let h = (hi - lo) / steps as f64;
        (t - h, t + h)
    };
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        match (resid(c), resid(d)) {
            (Some(rc), Some(rd)) if rc < rd => b = d,
            _ => a = c,
        }
    }
    let sigma = (0.5 * (a + b)).exp();
    let (s, w, _) = fit_at_sigma(positions, rates, sigma)?;
    if s <= 0.0 {
        return None;
    }
    Some(DipFit {
        shoulder: s,
        visibility: w / s,
        sigma,
    })
}

/// Scans the mirror position and records the four coincidence classes for
/// the 45°/45° and −45°/45° inputs.
pub fn hom_scan(positions: &[f64], config: &ExperimentConfig, seed: u64) -> Result<HomScan> {
    if positions.is_empty() {
        return Err(Error::param("positions", "must be nonempty"));
    }
    config.validate()?;
    let time = config.measurement_time();
    let rows = positions
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut rng = point_rng(seed, i as u64);
            let plus = simulate_counts(&InputSetting::shoulder(Sign::Plus), x, config, &mut rng)?;
            let minus = simulate_counts(&InputSetting::shoulder(Sign::Minus), x, config, &mut rng)?;
            Ok(HomRow {
                position: x,
                c_pp: plus.psi_plus as f64 / time,
                c_mp: plus.psi_minus as f64 / time,
                c_pm: minus.psi_plus as f64 / time,
                c_mm: minus.psi_minus as f64 / time,
                detected_pair_rate: config.pair_rate * config.detector_efficiency.powi(2),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.position).collect();
    let mp: Vec<f64> = rows.iter().map(|r| r.c_mp).collect();
    let pm: Vec<f64> = rows.iter().map(|r| r.c_pm).collect();
    Ok(HomScan {
        fit_mp: fit_dip(&xs, &mp),
        fit_pm: fit_dip(&xs, &pm),
        rows,
    })
}

/// What [`run_full_experiment`] should measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Discriminator { epsilons: Vec<f64>, thetas: Vec<f64> },
    Multimeter { phis: Vec<f64>, etas: Vec<f64> },
    HomScan { positions: Vec<f64> },
}

/// Runs a whole measurement campaign at the configured pair rate and seed
/// and returns it as a dataset. Failed points are recorded in the metadata.
pub fn run_full_experiment(task: &Task, config: &ExperimentConfig) -> Result<Dataset> {
    config.validate()?;
    let pairs = config.pairs_per_setting();
    let seed = config.seed;
    match task {
        Task::Discriminator { epsilons, thetas } => {
            let points = if epsilons.is_empty() || thetas.is_empty() {
                vec![]
            } else {
                crate::discriminator::run_discriminator_sweep(epsilons, thetas, config, pairs, seed)?
            };
            Ok(Dataset::from_discrimination(&points, config, seed))
        }
        Task::Multimeter { phis, etas } => {
            let points = if phis.is_empty() || etas.is_empty() {
                vec![]
            } else {
                crate::multimeter::run_multimeter_sweep(phis, etas, config, pairs, seed)?
            };
            Ok(Dataset::from_multimeter(&points, config, seed))
        }
        Task::HomScan { positions } => {
            let scan = if positions.is_empty() {
                HomScan {
                    rows: vec![],
                    fit_mp: None,
                    fit_pm: None,
                }
            } else {
                hom_scan(positions, config, seed)?
            };
            Ok(Dataset::from_hom_scan(&scan, config, seed))
        }
    }
}
