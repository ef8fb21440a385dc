use crate::engine::EpisodeTrace;
use crate::fsum::fsum;

use super::pareto::pareto_front;
use super::pathway::{map_to_pathway, PathwayLabel};

/// Headline metrics of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPoint {
    pub label: String,
    pub seed: u64,
    /// Final atmospheric temperature, degC above preindustrial.
    pub temperature_rise: f64,
    /// Gross output summed over steps and regions, trillion USD per year.
    pub gross_output_total: f64,
}

pub fn episode_metrics(trace: &EpisodeTrace) -> MetricPoint {
    MetricPoint {
        label: trace.label.clone(),
        seed: trace.seed,
        temperature_rise: trace.final_temperature(),
        gross_output_total: trace.gross_output_total(),
    }
}

/// Three readings of the economic axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputVariants {
    pub total: f64,
    /// World gross output in the last step.
    pub final_step: f64,
    /// Step outputs discounted to the start at `rate` per year.
    pub discounted: f64,
}

pub fn output_variants(trace: &EpisodeTrace, dt_years: f64, rate: f64) -> OutputVariants {
    let world = |s: &crate::engine::StepRecord| fsum(s.regions.iter().map(|r| r.gross_output));
    OutputVariants {
        total: trace.gross_output_total(),
        final_step: trace.steps.last().map_or(0.0, world),
        discounted: fsum(
            trace
                .steps
                .iter()
                .map(|s| world(s) * (1.0 + rate).powf(-dt_years * s.step as f64)),
        ),
    }
}

/// Ensemble means of one protocol variant.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub label: String,
    pub runs: usize,
    pub temperature_rise: f64,
    pub gross_output_total: f64,
    pub final_output: f64,
    pub discounted_output: f64,
    pub pathway: PathwayLabel,
    pub pareto_dominant: bool,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    fsum(v.iter().copied()) / v.len() as f64
}

/// Average each variant's ensemble and classify the means against each other.
/// `groups` pairs a label with that variant's traces; empty groups are skipped.
pub fn summarize_variants(groups: &[(String, Vec<EpisodeTrace>)], dt_years: f64, rate: f64) -> Vec<VariantSummary> {
    let mut out: Vec<VariantSummary> = groups
        .iter()
        .filter(|(_, t)| !t.is_empty())
        .map(|(label, traces)| {
            let ov: Vec<OutputVariants> = traces.iter().map(|t| output_variants(t, dt_years, rate)).collect();
            let temp = mean(traces.iter().map(|t| t.final_temperature()));
            VariantSummary {
                label: label.clone(),
                runs: traces.len(),
                temperature_rise: temp,
                gross_output_total: mean(ov.iter().map(|o| o.total)),
                final_output: mean(ov.iter().map(|o| o.final_step)),
                discounted_output: mean(ov.iter().map(|o| o.discounted)),
                pathway: map_to_pathway(temp),
                pareto_dominant: false,
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = out.iter().map(|s| (s.temperature_rise, s.gross_output_total)).collect();
    for (s, d) in out.iter_mut().zip(pareto_front(&pts)) {
        s.pareto_dominant = d;
    }
    out
}
