//! Recovering motion parameters from observed trajectories and fitting
//! their dependence on γ.

mod circle;
mod curves;
mod params;

use thiserror::Error;

pub use circle::{fit_circle, CircleFit, CONDITION_THRESHOLD};
pub use curves::{
    fit_curve, fit_param_curves, predict_at_gamma, CurveFamilies, CurveFamily, FittedCurve, ParamCurves,
    MIN_PREDICTED_PERIOD,
};
pub use params::{
    extract_motion_params, extract_with_boundaries, segment_periods, unwrap_angles, wrap_angle, Extraction,
    MarkerTrack, SegmentOptions, TrackSample, MIN_ORBIT_ARC,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("points are collinear; circle fit is singular")]
    CollinearPoints,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("need at least {needed} distinct gamma values, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("fewer than two speed minima; no periods found")]
    NoPeriodsFound,
    #[error("number of periods must be at least 1")]
    NoPeriods,
    #[error("track has no heading data; the reference direction is required")]
    MissingHeading,
    #[error("heading list length differs from sample count")]
    HeadingLengthMismatch,
    #[error("time is not strictly increasing at sample {index}")]
    NonMonotonicTime { index: usize },
}
