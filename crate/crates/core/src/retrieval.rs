//! Thresholded matching of partial structure points against database
//! envelopes, backward selection of missing structure, and missing-rate
//! estimation.
//!
//! The score of a candidate is `Σ_{x∈X} Q_Y(x)`, the sum of its envelope over
//! the query structure points. A candidate is rejected (score 0) as soon as
//! any query point sees an envelope value at or below `γ`: a partial shape
//! should lie entirely inside the distribution of its complete shape.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::database::{default_gamma, Database};
use crate::envelope::{envelope_eval, Envelope};
use crate::error::{Error, Result};
use crate::pointcloud::{Point3, PointCloud};
use crate::structure::{extract_structure, partial_cluster_count, StructureCloud, StructurePoint};

/// Parameters of one retrieval run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Cluster count of complete shapes.
    pub k: usize,
    pub lambda: f64,
    /// Forward rejection threshold.
    pub gamma: f64,
    /// Threshold for backward selection of missing structure points.
    pub gamma_back: f64,
    pub seed: u64,
}

impl MatchConfig {
    /// Defaults: `γ = 0.05 λ⁻³`, `γ_back = γ`, seed 0.
    pub fn new(k: usize, lambda: f64) -> Self {
        let gamma = default_gamma(lambda);
        Self {
            k,
            lambda,
            gamma,
            gamma_back: gamma,
            seed: 0,
        }
    }

    /// Config matching a database's parameters and default threshold.
    pub fn for_database(db: &Database) -> Self {
        Self {
            gamma: db.gamma_default,
            gamma_back: db.gamma_default,
            ..Self::new(db.k, db.lambda)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if !(self.gamma >= 0.0) || !(self.gamma_back >= 0.0) {
            return Err(Error::InvalidParameter("thresholds must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub entry_id: String,
    pub score: f64,
    /// Some query point fell at or below the threshold; `score` is then 0.
    pub rejected: bool,
}

/// Envelope values are strictly positive, so a value that underflowed to 0
/// must not trip a zero threshold.
#[inline]
fn at_or_below(value: f64, threshold: f64) -> bool {
    threshold > 0.0 && value <= threshold
}

/// Scores `query` against one envelope, stopping at the first rejected point.
pub fn match_score(query: &[Point3], e: &Envelope, gamma: f64) -> Result<RetrievalResult> {
    if query.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let mut score = 0.0;
    for x in query {
        let v = envelope_eval(e, x);
        if at_or_below(v, gamma) {
            return Ok(RetrievalResult {
                entry_id: e.source_id.clone(),
                score: 0.0,
                rejected: true,
            });
        }
        score += v;
    }
    Ok(RetrievalResult {
        entry_id: e.source_id.clone(),
        score,
        rejected: false,
    })
}

/// Accepted results first by descending score, then rejected ones; ties are
/// broken by entry id.
fn rank(a: &RetrievalResult, b: &RetrievalResult) -> Ordering {
    a.rejected
        .cmp(&b.rejected)
        .then_with(|| b.score.total_cmp(&a.score))
        .then_with(|| a.entry_id.cmp(&b.entry_id))
}

/// Scores every database entry and returns the best `top_n`.
pub fn retrieve(db: &Database, query: &[Point3], cfg: &MatchConfig, top_n: usize) -> Result<Vec<RetrievalResult>> {
    cfg.validate()?;
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    if db.lambda != cfg.lambda {
        return Err(Error::LambdaMismatch {
            database: db.lambda,
            query: cfg.lambda,
        });
    }
    if query.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let mut results: Vec<RetrievalResult> = db
        .entries
        .par_iter()
        .map(|entry| {
            let mut r = match_score(query, &entry.envelope, cfg.gamma)?;
            r.entry_id.clone_from(&entry.entry_id);
            Ok(r)
        })
        .collect::<Result<_>>()?;
    results.sort_by(rank);
    results.truncate(top_n);
    Ok(results)
}

/// Retrieved structure points whose centers the partial envelope barely
/// covers (value at or below `gamma_back`); these stand for the missing part.
/// Original variances are kept.
pub fn backward_select_missing(
    partial_envelope: &Envelope,
    retrieved: &StructureCloud,
    gamma_back: f64,
) -> Vec<StructurePoint> {
    retrieved
        .points
        .iter()
        .filter(|y| at_or_below(envelope_eval(partial_envelope, &y.mu), gamma_back))
        .copied()
        .collect()
}

/// Partial structure points followed by the missing ones.
pub fn merge_structure(partial: &StructureCloud, missing: &[StructurePoint]) -> StructureCloud {
    let mut points = Vec::with_capacity(partial.k() + missing.len());
    points.extend_from_slice(&partial.points);
    points.extend_from_slice(missing);
    StructureCloud {
        points,
        source_id: partial.source_id.clone(),
    }
}

/// Default sweep: 0.05, 0.10, ..., 0.75.
pub fn default_rate_grid() -> Vec<f64> {
    (1..=15).map(|i| i as f64 * 0.05).collect()
}

/// One row of a missing-rate sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCandidate {
    pub rate: f64,
    pub clusters: usize,
    pub best: Option<RetrievalResult>,
    /// Best score divided by the number of query structure points.
    pub mean_score: f64,
    /// `ln(mean partial cluster spread / mean matched-entry cluster spread)`,
    /// where spread is the variance trace. Zero when the partial was cut into
    /// clusters the same size as the complete shape's. `None` if every entry
    /// rejected the query.
    pub spread_log_ratio: Option<f64>,
}

fn mean_spread(sc: &StructureCloud) -> f64 {
    sc.points.iter().map(|p| p.var.iter().sum::<f64>()).sum::<f64>() / sc.k() as f64
}

/// Estimates how much of the shape is missing by finding the grid rate at
/// which the partial's clusters match the retrieved complete shape's
/// clusters in size.
///
/// At the true rate the partial covers `(1 - r)` of the surface with
/// `(1 - r)·K` clusters, so its clusters span the same area as the `K`
/// clusters of the complete shape. Rates whose query is rejected by every
/// entry are skipped; if all are, the first grid rate is returned. Ties go
/// to the smaller rate.
pub fn estimate_missing_rate(db: &Database, cloud: &PointCloud, cfg: &MatchConfig, grid: &[f64]) -> Result<f64> {
    let sweep = missing_rate_sweep(db, cloud, cfg, grid)?;
    Ok(pick_rate(&sweep))
}

/// Rate chosen from a sweep table; see [`estimate_missing_rate`].
pub fn pick_rate(sweep: &[RateCandidate]) -> f64 {
    let mut best: Option<(f64, f64)> = None;
    for c in sweep {
        let Some(lr) = c.spread_log_ratio else { continue };
        let d = lr.abs();
        let better = match best {
            None => true,
            Some((bd, br)) => d < bd || (d == bd && c.rate < br),
        };
        if better {
            best = Some((d, c.rate));
        }
    }
    best.map_or(sweep[0].rate, |(_, r)| r)
}

/// Full sweep table behind [`estimate_missing_rate`], in grid order.
pub fn missing_rate_sweep(
    db: &Database,
    cloud: &PointCloud,
    cfg: &MatchConfig,
    grid: &[f64],
) -> Result<Vec<RateCandidate>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("rate grid is empty".into()));
    }
    if let Some(r) = grid.iter().find(|r| !(0.0..=0.9).contains(*r)) {
        return Err(Error::InvalidParameter(format!("grid rate {r} outside [0, 0.9]")));
    }
    // keeps the ratio finite for zero-spread clusters
    let eps = 3.0 * db.floor;
    grid.iter()
        .map(|&rate| {
            let clusters = partial_cluster_count(cfg.k, rate)?.min(cloud.len());
            let structure = extract_structure(cloud, clusters, cfg.seed)?;
            let best = retrieve(db, &structure.centroids(), cfg, 1)?
                .into_iter()
                .next()
                .filter(|b| !b.rejected);
            let mean_score = best.as_ref().map_or(0.0, |b| b.score / clusters as f64);
            let spread_log_ratio = best.as_ref().map(|b| {
                let entry = db.get(&b.entry_id).expect("ranked id comes from the database");
                ((mean_spread(&structure) + eps) / (mean_spread(&entry.structure) + eps)).ln()
            });
            Ok(RateCandidate {
                rate,
                clusters,
                best,
                mean_score,
                spread_log_ratio,
            })
        })
        .collect()
}
