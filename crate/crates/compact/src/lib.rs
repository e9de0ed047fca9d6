//! Complexity-aware cascade training.
//!
//! Boosted classifier cascades where each round pays for the features it
//! touches: candidate weak learners are scored on classification edge minus
//! the evaluation cost they would incur on the examples still in flight, so
//! cheap feature families get picked early and expensive ones only once the
//! survivor set has thinned out. The trained model is an embedded cascade
//! with per-stage rejection thresholds, exact test-time cost metering per
//! example, and optional embedding of a precomputed external score as the
//! terminal stage.

pub mod boost;
pub mod cascade;
pub mod data;
pub mod error;
pub mod pool;
pub mod risk;
pub mod tree;
pub mod util;

pub use boost::{
    bootstrap_negatives, calibrate_threshold, closed_form_alpha, embed_external_stage,
    line_search_alpha, score_direction, score_direction_fast, select_weak_learner, train_compact,
    BootstrapOutcome, Candidate, CandidateFeatures, LearnerCost, RoundRecord, SelectionOutcome,
    ThresholdPolicy, TrainConfig, TrainOutcome,
};
pub use cascade::{
    batch_metrics, BatchMetrics, Cascade, CostSummary, EvalTrace, ExternalScores, ModelMetadata,
    RocPoint, Stage, StageLearner, MODEL_VERSION,
};
pub use data::{Dataset, Example, Label};
pub use error::{Error, Result};
pub use pool::{
    default_cost_ladder, synth_generate, FamilyManifest, FamilySpec, FeatureFamily,
    GeneratorConfig, TriggerGroup, TriggerState, MANIFEST_VERSION,
};
pub use risk::{complexity_risk, empirical_risk, exp_weight, ComplexityLoss, LagrangianConfig};
pub use tree::{fit_stump, fit_tree, FeatureColumns, Node, Stump, StumpFit, Tree, TreeFit};
