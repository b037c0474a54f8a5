//! Seeded Monte-Carlo experiments verifying the bounds at desk scale.

pub mod config;
pub mod report;
mod runner;

pub use config::{
    AuditConfig, ComplexityReplicates, DataConfig, DistConfig, ExcessRiskTarget, ExperimentConfig,
    ExperimentKind, FitKind, OracleChoice, OracleConfig, OutputConfig,
};
pub use report::{
    AuditCheck, ComplexityTerms, DecayPoint, ExperimentReport, ExperimentSummary, TrialRecord,
};
pub use runner::run;
