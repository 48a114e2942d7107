//! End-to-end completion: partial clustering, retrieval, backward
//! selection, merge and resampling.

use crate::database::Database;
use crate::envelope::build_envelope;
use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;
use crate::resample::{upsample, CompletionOutput, UpsampleParams};
use crate::retrieval::{
    backward_select_missing, default_rate_grid, merge_structure, missing_rate_sweep, pick_rate, retrieve, MatchConfig,
    RateCandidate, RetrievalResult,
};
use crate::structure::{extract_structure, partial_cluster_count, StructureCloud};

/// How the partial cloud's missing rate is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum MissingRate {
    Given(f64),
    /// Sweep over the grid and keep the best-scoring rate.
    Estimate(Vec<f64>),
}

impl MissingRate {
    pub fn estimate_default() -> Self {
        MissingRate::Estimate(default_rate_grid())
    }
}

#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub config: MatchConfig,
    pub missing_rate: MissingRate,
    pub output_points: usize,
    pub top_n: usize,
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub missing_rate: f64,
    pub sweep: Vec<RateCandidate>,
    pub partial_structure: StructureCloud,
    /// Top results of the retrieval, best first.
    pub ranking: Vec<RetrievalResult>,
    pub matched_entry: String,
    pub missing: usize,
    pub merged: StructureCloud,
    pub output: CompletionOutput,
}

/// Raised when every database entry rejects the query.
#[derive(Debug)]
pub struct AllRejected {
    pub ranking: Vec<RetrievalResult>,
    pub missing_rate: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CompletionError {
    #[error("every database entry rejected the query")]
    AllRejected(AllRejected),
    #[error(transparent)]
    Other(#[from] Error),
}

pub fn complete(db: &Database, partial: &PointCloud, req: &CompletionRequest) -> Result<Completion, CompletionError> {
    let cfg = &req.config;
    let (missing_rate, sweep) = match &req.missing_rate {
        MissingRate::Given(r) => (*r, Vec::new()),
        MissingRate::Estimate(grid) => {
            let sweep = missing_rate_sweep(db, partial, cfg, grid)?;
            (pick_rate(&sweep), sweep)
        }
    };

    let clusters = partial_cluster_count(cfg.k, missing_rate)?;
    if clusters > partial.len() {
        return Err(Error::InvalidClusterCount {
            k: clusters,
            points: partial.len(),
        }
        .into());
    }
    let partial_structure = extract_structure(partial, clusters, cfg.seed)?;
    let ranking = retrieve(db, &partial_structure.centroids(), cfg, req.top_n.max(1))?;
    let best = &ranking[0];
    if best.rejected {
        return Err(CompletionError::AllRejected(AllRejected { ranking, missing_rate }));
    }
    let entry = db.get(&best.entry_id).expect("ranked id comes from the database");

    let partial_envelope = build_envelope(&partial_structure, db.lambda, db.floor)?;
    let missing = backward_select_missing(&partial_envelope, &entry.structure, cfg.gamma_back);
    let merged = merge_structure(&partial_structure, &missing);
    let output = upsample(
        &merged,
        partial_structure.k(),
        partial,
        &UpsampleParams {
            target_n: req.output_points,
            seed: cfg.seed,
            floor: db.floor,
        },
    )?;

    Ok(Completion {
        missing_rate,
        sweep,
        matched_entry: best.entry_id.clone(),
        missing: missing.len(),
        partial_structure,
        ranking,
        merged,
        output,
    })
}
