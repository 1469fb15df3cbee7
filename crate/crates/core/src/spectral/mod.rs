//! Real-axis spectra and the Coulomb-analogy quantities U_k, F_k, C_k, Q_k.

mod coulomb;
mod peak;
mod slice;

pub use coulomb::{
    check_grid, compute_c, compute_f, compute_levels, compute_u, linspace, nonuniform_derivative,
    point_at, u_at, CoulombPoint, CoulombProfile, Method,
};
pub use peak::{
    detect_peak, estimate_q, linear_fit, FnSampler, LevelSampler, PeakRecord, PeakSampler,
    PeakSummary, QReport, QVerdict, RefinePolicy, WindowSample, Q_SLOPE_TOLERANCE,
};
pub use slice::{solve_slice, Derivatives, SpectrumSlice, D2_GAP_RELATIVE, ZERO_GAP_RELATIVE};
