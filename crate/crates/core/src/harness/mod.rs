//! Monte Carlo tail experiments: sample a statistic over an ensemble,
//! center it, and compare the empirical tail with a bound envelope.

pub mod envelope;
pub mod experiment;
pub mod statistic;
pub mod studies;

pub use envelope::{BoundEnvelope, CenterRule, Envelope, EnvelopeKind};
pub use experiment::{
    analyze, config_hash, prepare, run_tail_experiment, sample_statistics, ExperimentConfig, OutputFormat, Spacing,
    TGrid, TailPoint, TailReport, Verdict,
};
pub use statistic::{evaluate_all, Exponent, StatisticSpec};
pub use studies::{run_study, StudyConfig, StudyKind, StudyOutcome, StudyReport};
