//! Heights, rescalings, normal modes and Monte Carlo estimators built on
//! stationary two-species ensembles.

mod currents;
mod decoupling;
mod delta_h;
mod ensemble;
mod height;
mod integrated;
mod laplacian;
mod normal_modes;
mod stationarity;
mod two_point;

pub use currents::{estimate_currents, CurrentEstimate};
pub use decoupling::{
    decoupling_statistics, default_cdf_grid, DecouplingConfig, DecouplingRecord, InitialKind,
    MIN_SAMPLES as DECOUPLING_MIN_SAMPLES,
};
pub use delta_h::{delta_h_diagnostic, delta_h_from_queue, Assumption15Config, Assumption15Report, DeltaHDiagnostic};
pub use ensemble::{EnsembleOptions, TimeUnits};
pub use height::{
    characteristic_site, height_profile, rescale_value, rescaled_height, round_half_down, HeightProfile,
    RescaledHeight,
};
pub use integrated::{
    integrated_scaled_correlation, IntegratedConfig, IntegratedEstimate, IntegratedValue, Redraw, TestFunction,
};
pub use laplacian::{laplacian_identity_residual, LaplacianConfig, LaplacianRow, MIN_REPLICAS as LAPLACIAN_MIN_REPLICAS};
pub use normal_modes::{
    identity_residuals, inverse, mat_mul, normal_mode_data, relative_gap, transpose, Mat2, NormalModeData,
};
pub use stationarity::{stationarity_check, FrequencyCheck, StationarityReport};
pub use two_point::{estimate_two_point, susceptibility, Susceptibility, TwoPointConfig, TwoPointEstimate};
