//! Parallel drivers: replicate evaluations and respondent generation run on
//! the rayon pool and are reduced in index order, so results do not depend on
//! scheduling.

use rayon::prelude::*;
use rita_core::{EstimateReport, PipelineConfig, PreparedPipeline, Result, SimConfig, SimOutput, Simulator, SurveyDataset};

/// Point estimates plus jackknife standard errors, re-running the full
/// pipeline for every replicate weight vector.
pub fn estimate(data: &SurveyDataset, config: &PipelineConfig) -> Result<EstimateReport> {
    let prepared = PreparedPipeline::new(data, config)?;
    let main = prepared.evaluate_main()?;
    let replicates = (0..prepared.replicate_count())
        .into_par_iter()
        .map(|k| prepared.evaluate_replicate(k, &main))
        .collect();
    prepared.combine(main, replicates)
}

/// Same output as `rita_core::simulate`, generated in parallel.
pub fn simulate(cfg: &SimConfig) -> Result<SimOutput> {
    let sim = Simulator::new(cfg.clone())?;
    let rows = (0..cfg.n_respondents as u64).into_par_iter().map(|i| sim.respondent(i)).collect();
    sim.assemble(rows)
}
