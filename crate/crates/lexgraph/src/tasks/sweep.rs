//! Temporal sweeps: one independent training run per cutoff year.

use serde::{Deserialize, Serialize};

use super::classify::run_node_classification;
use super::{EvalReport, ExperimentSpec, FeatureCatalog, TaskError};
use crate::corpus::{build_graph, CaseDoc, CorpusError, Direction, SplitPlan, TemporalPool};
use crate::rng::derive_seed;

/// Reports per cutoff, plus the cutoffs that could not run.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub reports: Vec<EvalReport>,
    pub skipped_cutoffs: Vec<(i32, String)>,
}

/// Run the temporal sweep: for every cutoff, re-split, train from scratch
/// (with a cutoff-derived seed), and evaluate on the 5-year buckets beyond
/// the cutoff. Cutoffs with an empty train side are recorded and skipped.
pub fn run_temporal_sweep(
    docs: &[CaseDoc],
    catalog: &FeatureCatalog,
    base_spec: &ExperimentSpec,
    direction: Direction,
    cutoffs: &[i32],
    pool: TemporalPool,
) -> Result<SweepOutcome, TaskError> {
    let (graph, _) = build_graph(docs, base_spec.include_time, base_spec.include_acts, base_spec.mode)?;
    let mut outcome = SweepOutcome::default();

    for &cutoff in cutoffs {
        let mut spec = base_spec.clone();
        spec.split = SplitPlan::Temporal {
            direction,
            cutoff_year: cutoff,
            pool,
        };
        spec.train.seed = derive_seed(base_spec.train.seed, &format!("cutoff/{cutoff}"));
        match run_node_classification(&graph, docs, catalog, &spec) {
            Ok(run) => outcome.reports.push(run.report),
            Err(TaskError::Corpus(CorpusError::EmptyTrain)) => {
                outcome
                    .skipped_cutoffs
                    .push((cutoff, "empty train side".into()));
            }
            Err(other) => return Err(other),
        }
    }
    Ok(outcome)
}
