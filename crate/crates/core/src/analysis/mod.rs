//! Post-processing of episode traces.

pub mod charts;
mod metrics;
mod pareto;
mod pathway;
mod stats;

pub use metrics::{episode_metrics, output_variants, summarize_variants, MetricPoint, OutputVariants, VariantSummary};
pub use pareto::{pareto_front, pareto_points};
pub use pathway::{map_to_pathway, PathwayLabel};
pub use stats::{abatement_correlations, pearson, pearson_r, Correlation, CorrelationResult, PermutationTest, CORRELATION_VARIABLES};
