//! Detection filter, band powers, cross-correlation, delay sweeps and
//! peak/edge timing.

pub mod filter;
pub mod peaks;
pub mod power;
pub mod sweep;
pub mod xcorr;

pub use filter::{bandpass, BandpassSpec};
pub use peaks::{
    edge_timing, fit_peak, locate_peak, peak_advance, peak_advance_from_sets, Crossing, EdgeLevel, EdgeTiming,
    Extremum, PeakAdvance, PeakLocation, PeakSet, TimeAxis,
};
pub use power::{band_power, joint_trace, NoiseBand, ShotNoiseLevel};
pub use sweep::{
    delay_sweep, delay_sweep_inseparability, delay_sweep_mutual_information, estimate_covariance,
    estimate_covariance_from_spectra, mi_peak_shift, sweep_shot, CovarianceEstimate, DelaySweepResult, LagGrid,
    PeakShift, ShotSpectra, ShotSweep, SweepSettings,
};
pub use xcorr::{cross_correlation, cross_correlation_window, normalized_cross_correlation, Correlation};
