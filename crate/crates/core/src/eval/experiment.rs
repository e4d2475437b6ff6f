use serde::{Deserialize, Serialize};

use super::{aggregate, fit_model, split::stratified_split, EvaluationReport, Method, MethodParams, PipelineOptions};
use crate::data::PairedDataset;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub replications: usize,
    pub per_class: usize,
    /// Replication `r` splits with seed `seed + r`.
    pub seed: u64,
    /// Modality used at test time.
    pub test_modality: u8,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            replications: 10,
            per_class: 200,
            seed: 0,
            test_modality: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub method: Method,
    pub params: MethodParams,
    pub aggregate: EvaluationReport,
    pub replications: Vec<EvaluationReport>,
    pub warnings: Vec<String>,
}

/// Repeated split → fit on both modalities → test on one modality.
pub fn run_experiment(
    data: &PairedDataset,
    method: Method,
    params: &MethodParams,
    options: &PipelineOptions,
    config: &ExperimentConfig,
) -> Result<ExperimentOutcome> {
    let mut reports = Vec::with_capacity(config.replications);
    let mut warnings = Vec::new();
    for r in 0..config.replications {
        let split = stratified_split(data.labels.labels(), config.per_class, config.seed + r as u64)?;
        warnings.extend(split.warnings.iter().map(|w| format!("replication {r}: {w}")));
        let model = fit_model(&data.select(&split.train)?, method, params, options)?;
        let x = data.modality(config.test_modality)?.select_samples(&split.test)?;
        let truth: Vec<usize> = split.test.iter().map(|&i| data.labels.labels()[i]).collect();
        let (report, _) = model.evaluate(config.test_modality, &x, &truth)?;
        reports.push(report);
    }
    Ok(ExperimentOutcome {
        method,
        params: *params,
        aggregate: aggregate(&reports)?,
        replications: reports,
        warnings,
    })
}
