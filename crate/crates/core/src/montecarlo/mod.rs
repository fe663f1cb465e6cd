//! Monte Carlo size and power experiments on synthetic shift-share data.

mod config;
mod dgp;
mod experiment;

pub use config::{parse_sidedness, ExperimentConfig, KEYS as CONFIG_KEYS};
pub use dgp::{
    generate_dataset, BetaHeterogeneity, BetaTarget, DgpSpec, ErrorModel, ExposureDesign, FirstStage, FixedDesign,
    GeneratedData, Loading, ShockLaw, DOMINANT_SHARE,
};
pub use experiment::{
    power_curve, results_to_csv, size_experiment, ExperimentResult, Method, RiSettings, SchemeChoice, MAX_FAILURE_RATE,
    MIN_REPS,
};
