//! Synthetic marker tracks: the periodic model sampled at a camera frame
//! rate, with a stop-go speed profile and seeded Gaussian noise.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use everting::config::RunConfig;
use everting::ingest::LengthUnit;
use everting::kinematics::{iterate_trajectory, MotionParams, Pose};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;

use crate::commands::{header, resolve_params, write_output};
use crate::{CliError, ParamArgs};

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub source: ParamArgs,
    #[arg(long, default_value_t = 12)]
    pub periods: u64,
    #[arg(long, default_value_t = 60.0)]
    pub fps: f64,
    /// Fraction of each period spent at rest.
    #[arg(long, default_value_t = 0.25)]
    pub dwell: f64,
    /// Position noise standard deviation, mm.
    #[arg(long, default_value_t = 0.0)]
    pub noise_mm: f64,
    /// Heading noise standard deviation, degrees.
    #[arg(long, default_value_t = 0.0)]
    pub heading_noise_deg: f64,
    /// Length unit written to the file.
    #[arg(long, default_value = "m")]
    pub unit: LengthUnit,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub y: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub heading_deg: f64,
    /// Track file; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// One noiseless sample `(t, x, y, heading)` per frame.
pub fn dense_track(params: &MotionParams, start: &Pose, periods: u64, fps: f64, dwell: f64) -> Vec<[f64; 4]> {
    let coarse = iterate_trajectory(params, start, periods);
    let total = periods as f64 * params.period_t;
    let frames = (total * fps).round() as u64;
    let moving = 1.0 - dwell;
    (0..=frames)
        .map(|i| {
            let t = (i as f64 / fps).min(total);
            let j = ((t / params.period_t).floor() as u64).min(periods.saturating_sub(1));
            let f = if periods == 0 {
                0.0
            } else {
                ((t - j as f64 * params.period_t) / params.period_t).clamp(0.0, 1.0)
            };
            // smoothstep: zero speed at both ends of the moving phase
            let u = (f / moving).min(1.0);
            let s = u * u * (3.0 - 2.0 * u);
            let a = coarse.samples[j as usize].pose;
            let b = coarse.samples[(j as usize + 1).min(coarse.samples.len() - 1)].pose;
            let p = a.position + (b.position - a.position) * s;
            [t, p.x, p.y, a.heading() + params.delta_phi * s]
        })
        .collect()
}

pub fn run(cfg: &RunConfig, a: SynthArgs) -> Result<(), CliError> {
    if !(a.fps.is_finite() && a.fps > 0.0) {
        return Err(CliError::Input("--fps must be > 0".into()));
    }
    if !(0.0..1.0).contains(&a.dwell) {
        return Err(CliError::Input("--dwell must be in [0, 1)".into()));
    }
    let bad_noise = |v: f64| !(v.is_finite() && v >= 0.0);
    if bad_noise(a.noise_mm) || bad_noise(a.heading_noise_deg) {
        return Err(CliError::Input("noise levels must be finite and ≥ 0".into()));
    }
    let resolved = resolve_params(&a.source)?;
    let start = Pose::new(a.x, a.y, a.heading_deg.to_radians());
    let samples = dense_track(&resolved.params, &start, a.periods, a.fps, a.dwell);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pos_noise = Normal::new(0.0, a.noise_mm * 1e-3).expect("σ ≥ 0");
    let head_noise = Normal::new(0.0, a.heading_noise_deg.to_radians()).expect("σ ≥ 0");
    let scale = 1.0 / a.unit.to_meters();

    let inputs = json!({
        "source": resolved.inputs,
        "periods": a.periods,
        "fps": a.fps,
        "dwell": a.dwell,
        "noise_mm": a.noise_mm,
        "heading_noise_deg": a.heading_noise_deg,
        "unit": format!("{:?}", a.unit),
        "start": [a.x, a.y, a.heading_deg],
    });
    let mut text = format!("# {}\nt,x,y,heading\n", header(cfg, &inputs));
    for [t, x, y, h] in samples {
        let x = (x + pos_noise.sample(&mut rng)) * scale;
        let y = (y + pos_noise.sample(&mut rng)) * scale;
        let h = h + head_noise.sample(&mut rng);
        let _ = writeln!(text, "{t},{x},{y},{h}");
    }
    write_output(a.out.as_deref(), &text)
}
