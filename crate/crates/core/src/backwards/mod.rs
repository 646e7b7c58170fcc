//! Backwards paths of single-species TASEP height functions on recorded
//! trajectories, with geodesic, comparison and localisation checks.

mod checks;
mod endpoint;
mod path;

pub use checks::{
    default_tau_grid, geodesic_check, ordering_check, GeodesicCheck, GeodesicOutcome, OrderingMode, OrderingOutcome,
};
pub use endpoint::{endpoint_ensemble, EndpointConfig, EndpointKind, TailCurve};
pub use path::{check_admissible, safe_region, trace_path, BackwardsPath, PathStep, StepKind, TieRule};
