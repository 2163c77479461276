//! Per-period motion parameters from an observed marker track.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::circle::{fit_circle, CircleFit};
use super::EstimationError;
use crate::kinematics::{half_orbit_sine_sum, MotionParams, Trajectory, STRAIGHT_LINE_EPS};

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Accumulates signed increments so consecutive angles never jump by more
/// than π.
pub fn unwrap_angles(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut prev: Option<(f64, f64)> = None;
    for &a in angles {
        let u = match prev {
            None => a,
            Some((raw, acc)) => acc + wrap_angle(a - raw),
        };
        out.push(u);
        prev = Some((a, u));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl TrackSample {
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }
}

/// Centre-marker samples plus, optionally, the heading of the reference
/// direction at each sample (from a second marker over `m1`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MarkerTrack {
    pub samples: Vec<TrackSample>,
    pub headings: Option<Vec<f64>>,
}

impl MarkerTrack {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Self {
            samples: traj
                .samples
                .iter()
                .map(|s| TrackSample {
                    t: s.t,
                    x: s.pose.position.x,
                    y: s.pose.position.y,
                })
                .collect(),
            headings: Some(traj.samples.iter().map(|s| s.pose.heading()).collect()),
        }
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        if let Some(i) = self.samples.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(EstimationError::NonMonotonicTime { index: i + 1 });
        }
        if let Some(h) = &self.headings {
            if h.len() != self.samples.len() {
                return Err(EstimationError::HeadingLengthMismatch);
            }
        }
        Ok(())
    }

    /// Applies a rigid motion: rotate by `angle` about the origin, then
    /// translate by `offset`.
    pub fn transformed(&self, angle: f64, offset: Vector2<f64>) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            samples: self
                .samples
                .iter()
                .map(|p| TrackSample {
                    t: p.t,
                    x: c * p.x - s * p.y + offset.x,
                    y: s * p.x + c * p.y + offset.y,
                })
                .collect(),
            headings: self
                .headings
                .as_ref()
                .map(|h| h.iter().map(|a| wrap_angle(a + angle)).collect()),
        }
    }

    /// Position and unwrapped heading at time `t` (linear interpolation).
    fn pose_at(&self, unwrapped: &[f64], t: f64) -> (Vector2<f64>, f64) {
        let s = &self.samples;
        let idx = s.partition_point(|p| p.t <= t);
        if idx == 0 {
            return (s[0].position(), unwrapped[0]);
        }
        if idx >= s.len() {
            let last = s.len() - 1;
            return (s[last].position(), unwrapped[last]);
        }
        let (a, b) = (&s[idx - 1], &s[idx]);
        let f = (t - a.t) / (b.t - a.t);
        let pos = a.position() + (b.position() - a.position()) * f;
        let h = unwrapped[idx - 1] + (unwrapped[idx] - unwrapped[idx - 1]) * f;
        (pos, h)
    }
}

/// Total heading change, rad, at or below which Δx comes from chords.
pub const MIN_ORBIT_ARC: f64 = std::f64::consts::FRAC_PI_2;

/// Motion parameters recovered from one track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub params: MotionParams,
    pub num_periods: usize,
    /// Circle through the period-boundary positions (absent for straight
    /// motion).
    pub circle: Option<CircleFit>,
    /// Δx from inverting the half-orbit sine-sum radius estimate.
    pub delta_x_sine_sum: Option<f64>,
    /// Set when |Δφ| was too small for a circle.
    pub straight_line: bool,
    /// Set when Δx is the mean chord between boundary positions rather
    /// than derived from the fitted radius.
    pub delta_x_from_chord: bool,
    /// Period-boundary positions the estimates were computed from.
    pub boundary_positions: Vec<Vector2<f64>>,
}

/// Extracts parameters assuming `num_periods` equal periods spanning the
/// whole track.
pub fn extract_motion_params(track: &MarkerTrack, num_periods: usize) -> Result<Extraction, EstimationError> {
    if num_periods == 0 {
        return Err(EstimationError::NoPeriods);
    }
    if track.samples.len() < 2 {
        return Err(EstimationError::TooFewPoints {
            needed: 2,
            got: track.samples.len(),
        });
    }
    let t0 = track.samples[0].t;
    let t1 = track.samples[track.samples.len() - 1].t;
    let period = (t1 - t0) / num_periods as f64;
    let mut bounds: Vec<f64> = (0..num_periods).map(|i| t0 + i as f64 * period).collect();
    bounds.push(t1);
    extract_with_boundaries(track, &bounds)
}

/// Extracts parameters from explicit period-boundary times.
pub fn extract_with_boundaries(track: &MarkerTrack, boundaries: &[f64]) -> Result<Extraction, EstimationError> {
    track.validate()?;
    if boundaries.len() < 2 {
        return Err(EstimationError::NoPeriods);
    }
    if track.samples.len() < 2 {
        return Err(EstimationError::TooFewPoints {
            needed: 2,
            got: track.samples.len(),
        });
    }
    let headings = track.headings.as_ref().ok_or(EstimationError::MissingHeading)?;
    let unwrapped = unwrap_angles(headings);
    let n = boundaries.len() - 1;

    let poses: Vec<(Vector2<f64>, f64)> = boundaries.iter().map(|&t| track.pose_at(&unwrapped, t)).collect();
    let positions: Vec<Vector2<f64>> = poses.iter().map(|p| p.0).collect();

    let delta_phi = (poses[n].1 - poses[0].1) / n as f64;
    let period_t = (boundaries[n] - boundaries[0]) / n as f64;

    let (mut sin_sum, mut cos_sum) = (0.0, 0.0);
    let mut chord_sum = 0.0;
    for k in 0..n {
        let d = poses[k + 1].0 - poses[k].0;
        let len = d.norm();
        chord_sum += len;
        if len > 0.0 {
            let b = wrap_angle(d.y.atan2(d.x) - poses[k].1);
            sin_sum += b.sin();
            cos_sum += b.cos();
        }
    }
    let beta = if sin_sum == 0.0 && cos_sum == 0.0 {
        0.0
    } else {
        sin_sum.atan2(cos_sum)
    };

    if delta_phi.abs() < STRAIGHT_LINE_EPS {
        return Ok(Extraction {
            params: MotionParams {
                delta_phi,
                delta_x: chord_sum / n as f64,
                period_t,
                beta,
            },
            num_periods: n,
            circle: None,
            delta_x_sine_sum: None,
            straight_line: true,
            delta_x_from_chord: true,
            boundary_positions: positions,
        });
    }

    // a short arc pins the radius poorly; the chord is then more reliable
    let from_chord = delta_phi.abs() * n as f64 <= MIN_ORBIT_ARC;
    let circle = match fit_circle(&positions) {
        Ok(c) => c,
        Err(_) if from_chord => {
            return Ok(Extraction {
                params: MotionParams {
                    delta_phi,
                    delta_x: chord_sum / n as f64,
                    period_t,
                    beta,
                },
                num_periods: n,
                circle: None,
                delta_x_sine_sum: None,
                straight_line: false,
                delta_x_from_chord: true,
                boundary_positions: positions,
            })
        }
        Err(e) => return Err(e),
    };
    let delta_x = if from_chord {
        chord_sum / n as f64
    } else {
        2.0 * circle.radius * (delta_phi.abs() / 2.0).sin()
    };
    let sine_sum = half_orbit_sine_sum(delta_phi).map_err(|_| EstimationError::CollinearPoints)?;
    let delta_x_sine_sum = if sine_sum > 0.0 {
        Some(2.0 * circle.radius / sine_sum)
    } else {
        None
    };

    Ok(Extraction {
        params: MotionParams {
            delta_phi,
            delta_x,
            period_t,
            beta,
        },
        num_periods: n,
        circle: Some(circle),
        delta_x_sine_sum,
        straight_line: false,
        delta_x_from_chord: from_chord,
        boundary_positions: positions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentOptions {
    /// A pause starts when speed drops below this fraction of the
    /// reference (90th-percentile) speed.
    pub speed_fraction: f64,
    /// A pause ends only when speed exceeds this fraction of the reference.
    pub resume_fraction: f64,
    /// Minimum spacing between two boundaries, s.
    pub min_period: f64,
    /// Speed is measured across a centred window this long, s; `0` uses
    /// neighbouring samples.
    pub smooth_window: f64,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            speed_fraction: 0.2,
            resume_fraction: 0.5,
            min_period: 0.0,
            smooth_window: 0.0,
        }
    }
}

/// Finds period boundaries at pauses. A pause runs from the first sample
/// slower than `speed_fraction · v_ref` until speed exceeds
/// `resume_fraction · v_ref`; it contributes the time of its slowest
/// sample (middle one on ties). Of two boundaries closer than half the
/// median spacing only the slower survives.
pub fn segment_periods(track: &MarkerTrack, opts: &SegmentOptions) -> Result<Vec<f64>, EstimationError> {
    let s = &track.samples;
    if s.len() < 3 {
        return Err(EstimationError::NoPeriodsFound);
    }
    track.validate()?;
    let speed: Vec<f64> = if opts.smooth_window > 0.0 {
        let half = 0.5 * opts.smooth_window;
        (0..s.len())
            .map(|i| {
                let j0 = s.partition_point(|p| p.t < s[i].t - half).min(i.saturating_sub(1));
                let j1 = (s.partition_point(|p| p.t <= s[i].t + half) - 1).max((i + 1).min(s.len() - 1));
                (s[j1].position() - s[j0].position()).norm() / (s[j1].t - s[j0].t)
            })
            .collect()
    } else {
        let seg_speed: Vec<f64> = s
            .windows(2)
            .map(|w| (w[1].position() - w[0].position()).norm() / (w[1].t - w[0].t))
            .collect();
        (0..s.len())
            .map(|i| match i {
                0 => seg_speed[0],
                i if i == s.len() - 1 => seg_speed[i - 1],
                i => 0.5 * (seg_speed[i - 1] + seg_speed[i]),
            })
            .collect()
    };

    if !(opts.speed_fraction > 0.0 && opts.resume_fraction >= opts.speed_fraction) {
        return Err(EstimationError::NoPeriodsFound);
    }
    let mut sorted = speed.clone();
    sorted.sort_by(f64::total_cmp);
    let v_ref = sorted[((sorted.len() - 1) as f64 * 0.9).round() as usize];
    let low = opts.speed_fraction * v_ref;
    let high = opts.resume_fraction * v_ref;

    let mut boundaries: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < speed.len() {
        if speed[i] >= low {
            i += 1;
            continue;
        }
        let start = i;
        while i < speed.len() && speed[i] <= high {
            i += 1;
        }
        let run = &speed[start..i];
        let min = run.iter().copied().fold(f64::INFINITY, f64::min);
        let ties: Vec<usize> = (start..i).filter(|&j| speed[j] <= min).collect();
        let t = s[ties[ties.len() / 2]].t;
        match boundaries.last() {
            Some(&(last, _)) if t - last < opts.min_period => {}
            _ => boundaries.push((t, min)),
        }
    }
    // a pause split by a noise spike leaves two close boundaries; keep the slower
    if boundaries.len() >= 3 {
        let mut gaps: Vec<f64> = boundaries.windows(2).map(|w| w[1].0 - w[0].0).collect();
        gaps.sort_by(f64::total_cmp);
        let min_gap = 0.5 * gaps[gaps.len() / 2];
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(boundaries.len());
        for b in boundaries {
            match merged.last_mut() {
                Some(last) if b.0 - last.0 < min_gap => {
                    if b.1 < last.1 {
                        *last = b;
                    }
                }
                _ => merged.push(b),
            }
        }
        boundaries = merged;
    }
    let boundaries: Vec<f64> = boundaries.into_iter().map(|b| b.0).collect();
    if boundaries.len() < 2 {
        return Err(EstimationError::NoPeriodsFound);
    }
    Ok(boundaries)
}
