//! Programmable quantum measurements on polarization qubits with a partial
//! Bell-state analyzer: state preparation, two-photon analysis, Monte Carlo
//! photon counting and the estimators applied to the counts.

pub mod analyzer;
pub mod dataset;
pub mod discriminator;
pub mod error;
pub mod experiment;
pub mod multimeter;
pub mod polarization;
pub mod stats;
pub mod twophoton;

pub use analyzer::{AnalyzerConfig, CoincidencePattern, Detector, DetectorMapping, Outcome, OutcomeProbs};
pub use dataset::{Dataset, Metadata};
pub use discriminator::DiscriminationPoint;
pub use error::{Error, Result};
pub use experiment::{CountRecord, ExperimentConfig, HomScan, Task};
pub use multimeter::MultimeterPoint;
pub use polarization::{PolarizationState, PrepRecipe, Sign};
pub use stats::Estimate;
pub use twophoton::{BellState, TwoPhotonState};
