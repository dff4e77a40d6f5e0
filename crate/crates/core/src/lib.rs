//! Relaxation of multi-dimensional box queries so that they return at least
//! a requested number of answers, guided by an equi-depth histogram.
//!
//! ```
//! use sauna_core::{
//!     gen_array, sauna_relax, BoxQuery, Domain, GenSpec, Histogram, MetricSpec, RelaxMode,
//! };
//!
//! let domain = Domain::uniform(2, 0.0, 1000.0).unwrap();
//! let data = gen_array(&GenSpec::array(5_000, 2, 1.0, 7), &domain).unwrap();
//! let hist = Histogram::build_equi_depth(&data, 64).unwrap();
//! let query = BoxQuery::from_bounds(&[(900.0, 910.0), (900.0, 910.0)]).unwrap();
//! let metric = MetricSpec::default().resolve(&query).unwrap();
//! let out = sauna_relax(&data, &hist, &query, 10, &metric, 0.5, RelaxMode::DistancePreserving).unwrap();
//! assert_eq!(out.answers.len(), 10);
//! ```

pub mod bench;
pub mod data;
pub mod datagen;
pub mod distance;
pub mod error;
pub mod histogram;
pub mod oracle;
pub mod relax;
pub mod search;

pub use bench::{run_bench, Aggregate, BenchConfig, BenchReport, ManualComparison, QueryResult, Strategy};
pub use data::{
    Attribute, AttributeKind, BoxQuery, CategoricalColumn, CategoricalPredicate, CategoricalStats, Column, Dataset,
    Domain, Interval, Manifest, Schema,
};
pub use datagen::{
    gen_array, gen_gauss, gen_training_workload, gen_workload, generate, generated_manifest, tile_counts,
    zipf_counts, zipf_probabilities, GenKind, GenSpec,
};
pub use distance::{
    aspect_weights, categorical_distance, inverse_weights, per_dim_distance, similarity, Metric, MetricSpec, Norm,
    TupleDistance, WeightLimits, Weighting,
};
pub use error::{Error, Result};
pub use histogram::{farthest_point, max_dist, min_dist, nearest_point, Bucket, Histogram};
pub use oracle::{
    execute_box, manual_simulation, manual_step, optimal_relaxation, top_n_sequential, Answer, AnswerSet,
    ManualRun, OptimalRelaxation,
};
pub use relax::{
    dynamic_distance, expand_query, filter_distance_preserving, full_domain_distance, no_restarts_distance,
    restarts_distance, sauna_relax, train_alpha, AlphaCost, AlphaTraining, RelaxMode, RelaxOutcome, RelaxStats,
    RelaxationPlan, DEFAULT_ALPHA,
};
pub use search::{GoldenSection, Minimum};
