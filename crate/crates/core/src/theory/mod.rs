//! Perturbative localization theory: Lyapunov exponent, averaged mode
//! densities, the effective mobility edge and power-law wing fits.
//! Everything here works in SI units.

mod fit;
mod lyapunov;
mod mode_profile;

pub use fit::{power_law_fit, slope_constancy, PowerLawFit, POOR_FIT_RMS};
pub use lyapunov::{
    lyapunov_closed_form, lyapunov_from_correlator, mobility_edge, ClosedFormLyapunov,
    LyapunovCurve, LyapunovSource, MobilityEdge, TransformOptions, TransformReport,
};
pub use mode_profile::{
    averaged_profile, mode_density, scaled_mode_density, AveragedProfile, ModeDensity,
    ModeDensityTable,
};

/// γ/k above which the perturbative treatment is flagged.
pub const GAMMA_OVER_K_LIMIT: f64 = 0.1;
