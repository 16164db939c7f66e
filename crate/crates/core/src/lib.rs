//! Nonparametric tests for a single change point in a sequence of
//! independent multivariate observations.
//!
//! The tests compare the empirical measures of `X_1..X_k` and `X_{k+1}..X_n`
//! on lower-left orthants (`S`, `T`) or half-spaces (`U`, `V`), combine the
//! per-k statistics by maximum or mean, and calibrate them with multiplier
//! bootstrap replicates (`hat` and `check` processes) or, for univariate
//! data, with simulated uniform samples.
//!
//! ```
//! use empcp::{run_test, Combiner, Family, Method, Sample, StatFamily};
//!
//! let x: Vec<f64> = (0..40).map(|i| if i < 20 { 0.1 * i as f64 } else { 5.0 + 0.1 * i as f64 }).collect();
//! let sample = Sample::univariate(x).unwrap();
//! let stat = StatFamily::new(Family::S, Combiner::Max);
//! let report = run_test(&sample, stat, Method::Check, 200, None, 42).unwrap();
//! assert_eq!(report.k_hat, 20);
//! assert!(report.p_value < 0.05);
//! ```

pub mod datagen;
pub mod engine;
pub mod error;
pub mod kv;
pub mod model;
pub mod montecarlo;
pub mod multiplier;
pub mod oracle;
pub mod presets;
pub mod rng;
pub mod sphere;

pub use engine::{
    build_orthant_table, build_projection_table, combine, estimate_changepoint, profile,
    profile_s, profile_t, profile_u, profile_v, IndicatorTable, OrthantTable, ProjectionTable,
};
pub use error::{Error, Result};
pub use model::{
    Combiner, DirectionSet, Family, Method, MultiplierLaw, MultiplierMatrix, Sample,
    StatFamily, StatProfile, TestReport,
};
pub use multiplier::{
    pvalue, replicate_check, replicate_hat, run_sim_test, run_test, run_tests, ReplicateSet,
    Tables,
};
pub use sphere::discretize;
