//! Online interval and box discrepancy through dyadic decompositions.

pub mod dyadic;
pub mod embed;
pub mod pipeline;
pub mod quantile;
pub mod tracker;

pub use dyadic::{build_dyadic_scheme, range_contains, AxisSplit, DyadicScheme};
pub use embed::{embed_point_boxes, embed_point_intervals, BoxEmbedding, BoxKeySpace, IntervalEmbedding, MAX_BOX_DIM};
pub use pipeline::{
    box_walk_config, interval_walk_config, run_interval_discrepancy, run_interval_offline, run_interval_with,
    run_tusnady, run_tusnady_offline, run_tusnady_with, EmbeddedPoint, GeometryRun,
};
pub use quantile::{
    build_quantile_grid, DistributionAccess, GridSource, PointMass, PointSampler, PowerMarginals, QuantileGrid,
    QuantileOracle, UniformCube, SAMPLES_PER_QUANTILE,
};
pub use tracker::{rescan_box, rescan_interval, BoxTracker, DiscrepancyTracker, QueryResult};
