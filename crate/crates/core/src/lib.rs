//! Structure-point retrieval for point cloud completion.
//!
//! A complete shape is summarized by `K` k-means structure points, each
//! widened into a normalized axis-aligned Gaussian. A partial shape is matched
//! against a database of such envelopes by summing envelope values at its own
//! structure points, rejecting any candidate that leaves a query point
//! uncovered. The retrieved shape's uncovered structure points are then
//! merged with the partial structure and resampled into a dense cloud.
//!
//! ```
//! use structret::{build_database, DatabaseParams, MatchConfig, retrieve, extract_structure};
//! use structret::synth::{ShapeGenerator, SynthConfig, half_space_crop};
//! use structret::Point3;
//!
//! let mut gen = ShapeGenerator::new(SynthConfig { points: 512, ..Default::default() }, 1);
//! let shapes: Vec<_> = (0..5).map(|_| gen.next_shape()).collect();
//! let db = build_database(&shapes, &DatabaseParams::new(32, 0.2), 0).unwrap().database;
//!
//! let crop = half_space_crop(&shapes[2], Point3::new(1.0, 0.0, 0.0), 0.5);
//! let query = extract_structure(&crop, 16, 0).unwrap();
//! let top = retrieve(&db, &query.centroids(), &MatchConfig::for_database(&db), 1).unwrap();
//! assert_eq!(top[0].entry_id, shapes[2].id);
//! ```

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod database;
pub mod envelope;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod pointcloud;
pub mod resample;
pub mod retrieval;
pub mod structure;
pub mod synth;

pub use database::{
    build_database, default_gamma, filter_category, load_database, save_database, BuildReport, Database, DatabaseEntry,
    DatabaseParams,
};
pub use envelope::{
    build_envelope, envelope_eval, gaussian_eval, heat_samples, normalize_variances, Component, Envelope, HeatMap,
    DEFAULT_LAMBDA, DEFAULT_VARIANCE_FLOOR,
};
pub use error::{Error, Result};
pub use metrics::{chamfer, emd, pre_gt, Metric, MetricValue};
pub use pipeline::{complete, Completion, CompletionError, CompletionRequest, MissingRate};
pub use pointcloud::{aabb, parse_ply, parse_xyz, write_ply, write_xyz, Point3, PointCloud};
pub use resample::{upsample, CompletionOutput, Provenance, UpsampleParams, DEFAULT_OUTPUT_POINTS};
pub use retrieval::{
    backward_select_missing, estimate_missing_rate, match_score, merge_structure, retrieve, MatchConfig,
    RetrievalResult,
};
pub use structure::{
    cluster_stats, extract_structure, kmeans, partial_cluster_count, Clustering, StructureCloud, StructurePoint,
    DEFAULT_K,
};
