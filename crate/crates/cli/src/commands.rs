use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use everting::arena::{run_scenario, ParamSource, ScenarioKind};
use everting::config::{config_hash, RunConfig};
use everting::estimation::{
    extract_motion_params, extract_with_boundaries, fit_param_curves, predict_at_gamma, segment_periods,
    Extraction, MarkerTrack, ParamCurves, SegmentOptions,
};
use everting::ingest::{parse_track, LengthUnit, TrackFile};
use everting::kinematics::{
    iterate_trajectory, max_periods, orbit_radius_exact, orbit_radius_sine_sum, params_from_accelerations,
    MotionParams, Pose,
};
use everting::model::{evaluate, MassAngle};
use everting_steer::{ServeConfig, Server, SessionConfig};
use serde::Serialize;
use serde_json::json;

use crate::{CliError, ParamArgs};

pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Comment header carried by every output file.
pub fn header(cfg: &RunConfig, inputs: &serde_json::Value) -> String {
    format!(
        "everting {} config={} seed={}",
        everting::VERSION,
        config_hash(&json!({ "config": cfg, "inputs": inputs })),
        cfg.seed
    )
}

pub fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Output(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn load_curves(path: &Path) -> Result<ParamCurves, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read curves file {}: {e}", path.display())))?;
    ParamCurves::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub struct Resolved {
    pub gamma: Option<MassAngle>,
    pub params: MotionParams,
    pub curves: Option<ParamCurves>,
    pub inputs: serde_json::Value,
}

pub fn parse_params(s: &str) -> Result<MotionParams, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("--params `{s}`: expected four numbers")))?;
    let [dphi, dx, t, beta] = v[..] else {
        return Err(CliError::Input(format!("--params `{s}`: expected DPHI_DEG,DX,T,BETA_DEG")));
    };
    Ok(MotionParams::new(dphi.to_radians(), dx, t, beta.to_radians())?)
}

pub fn resolve_params(p: &ParamArgs) -> Result<Resolved, CliError> {
    if let Some(s) = &p.params {
        let params = parse_params(s)?;
        return Ok(Resolved {
            gamma: p.gamma.map(MassAngle::from_degrees),
            params,
            curves: None,
            inputs: json!({ "params": params, "gamma_deg": p.gamma }),
        });
    }
    let (Some(path), Some(g)) = (&p.curves, p.gamma) else {
        return Err(CliError::Input("need --params, or --curves with --gamma".into()));
    };
    let curves = load_curves(path)?;
    let gamma = MassAngle::from_degrees(g);
    Ok(Resolved {
        gamma: Some(gamma),
        params: predict_at_gamma(&curves, gamma),
        inputs: json!({ "curves": curves, "gamma_deg": g }),
        curves: Some(curves),
    })
}

fn fmt_radius(r: Result<f64, everting::kinematics::KinematicsError>) -> String {
    match r {
        Ok(v) => format!("{v}"),
        Err(_) => "inf".into(),
    }
}

fn params_summary(p: &MotionParams) -> String {
    format!(
        "delta_phi_deg={} delta_x={} period_T={} beta_deg={}",
        p.delta_phi.to_degrees(),
        p.delta_x,
        p.period_t,
        p.beta.to_degrees()
    )
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub source: ParamArgs,
    /// Derive parameters from the start-up force model instead of curves.
    #[arg(long, requires = "release_time", conflicts_with_all = ["curves", "params"])]
    pub from_model: bool,
    /// Time over which start-up accelerations act, s.
    #[arg(long)]
    pub release_time: Option<f64>,
    #[arg(long, conflicts_with = "total_time", required_unless_present = "total_time")]
    pub periods: Option<u64>,
    /// Total time, s; the trajectory stops at the last whole period.
    #[arg(long)]
    pub total_time: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub y: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub heading_deg: f64,
    /// Trajectory file; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub fn predict(cfg: &RunConfig, a: PredictArgs) -> Result<(), CliError> {
    let resolved = if a.from_model {
        let g = a
            .source
            .gamma
            .ok_or_else(|| CliError::Input("--from-model needs --gamma".into()))?;
        let t = a.release_time.unwrap_or_default();
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Input("--release-time must be > 0".into()));
        }
        let gamma = MassAngle::from_degrees(g);
        let dyn_out = evaluate(&cfg.robot, gamma)?;
        let params = params_from_accelerations(dyn_out.a0, dyn_out.alpha0, t);
        params.validate()?;
        Resolved {
            gamma: Some(gamma),
            params,
            curves: None,
            inputs: json!({ "from_model": true, "gamma_deg": g, "release_time": t }),
        }
    } else {
        resolve_params(&a.source)?
    };
    let p = resolved.params;
    let n = match (a.periods, a.total_time) {
        (Some(n), _) => n,
        (None, Some(total)) => max_periods(total, p.period_t),
        (None, None) => unreachable!("clap requires one of them"),
    };
    let start = Pose::new(a.x, a.y, a.heading_deg.to_radians());
    let traj = iterate_trajectory(&p, &start, n);
    let inputs = json!({
        "source": resolved.inputs,
        "periods": n,
        "start": [a.x, a.y, a.heading_deg],
        "format": a.format,
    });
    let head = header(cfg, &inputs);
    let body = match a.format {
        Format::Csv => traj.to_csv(&[head]),
        Format::Json => {
            let doc = json!({ "header": head, "samples": traj.to_json() });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
    };
    let mut summary = String::new();
    if let Some(g) = resolved.gamma {
        let _ = writeln!(summary, "gamma_deg={}", g.degrees());
    }
    let _ = writeln!(summary, "{}", params_summary(&p));
    let _ = writeln!(
        summary,
        "radius_sine_sum={} radius_exact={} periods={n}",
        fmt_radius(orbit_radius_sine_sum(&p)),
        fmt_radius(orbit_radius_exact(&p)),
    );
    write_output(a.out.as_deref(), &body)?;
    if a.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrackInput {
    #[arg(long, default_value = "m")]
    pub unit: LengthUnit,
    #[arg(long, default_value_t = TrackFile::DEFAULT_FRAME_RATE)]
    pub frame_rate: f64,
    /// Period detection: a pause starts below this fraction of the
    /// 90th-percentile speed.
    #[arg(long, default_value_t = SegmentOptions::default().speed_fraction)]
    pub speed_fraction: f64,
    /// Period detection: a pause ends above this fraction of the
    /// 90th-percentile speed.
    #[arg(long, default_value_t = SegmentOptions::default().resume_fraction)]
    pub resume_fraction: f64,
    /// Period detection: shortest accepted period, s.
    #[arg(long, default_value_t = SegmentOptions::default().min_period)]
    pub min_period: f64,
    /// Period detection: speed is measured across a window this long, s.
    #[arg(long, default_value_t = 0.25)]
    pub smooth_window: f64,
}

impl TrackInput {
    fn read(&self, path: &Path) -> Result<MarkerTrack, CliError> {
        let file = TrackFile {
            path: path.to_owned(),
            unit: self.unit,
            frame_rate: self.frame_rate,
        };
        parse_track(&file).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    fn extract(&self, track: &MarkerTrack, periods: Option<usize>) -> Result<Extraction, CliError> {
        Ok(match periods {
            Some(n) => extract_motion_params(track, n)?,
            None => {
                let opts = SegmentOptions {
                    speed_fraction: self.speed_fraction,
                    resume_fraction: self.resume_fraction,
                    min_period: self.min_period,
                    smooth_window: self.smooth_window,
                };
                extract_with_boundaries(track, &segment_periods(track, &opts)?)?
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrackSpec {
    pub path: PathBuf,
    pub gamma_deg: f64,
    pub periods: Option<usize>,
}

impl std::str::FromStr for TrackSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (path, rest) = s
            .rsplit_once('=')
            .ok_or_else(|| format!("`{s}`: expected TRACK=GAMMA_DEG[,PERIODS]"))?;
        let mut parts = rest.split(',');
        let gamma_deg = parts
            .next()
            .and_then(|g| g.trim().parse::<f64>().ok())
            .filter(|g| g.is_finite())
            .ok_or_else(|| format!("`{s}`: bad γ"))?;
        let periods = match parts.next() {
            Some(p) => Some(p.trim().parse::<usize>().map_err(|_| format!("`{s}`: bad period count"))?),
            None => None,
        };
        if parts.next().is_some() {
            return Err(format!("`{s}`: too many fields"));
        }
        Ok(Self {
            path: path.into(),
            gamma_deg,
            periods,
        })
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Tracks as TRACK=GAMMA_DEG[,PERIODS]; periods are detected when omitted.
    #[arg(required = true, value_name = "TRACK=GAMMA[,PERIODS]")]
    pub tracks: Vec<TrackSpec>,
    #[command(flatten)]
    pub input: TrackInput,
    /// Curves JSON output.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn fit(cfg: &RunConfig, a: FitArgs) -> Result<(), CliError> {
    let mut errors = Vec::new();
    let mut rows = Vec::new();
    for spec in &a.tracks {
        match a.input.read(&spec.path).and_then(|t| a.input.extract(&t, spec.periods)) {
            Ok(ex) => rows.push((spec, ex)),
            Err(e) => errors.push(format!("{}: {e}", spec.path.display())),
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Input(errors.join("\n")));
    }

    println!(
        "{:<28} {:>9} {:>7} {:>13} {:>10} {:>9} {:>10} {:>10}",
        "track", "gamma_deg", "periods", "delta_phi_deg", "delta_x", "period_T", "beta_deg", "radius"
    );
    for (spec, ex) in &rows {
        let p = ex.params;
        let radius = ex.circle.map_or("inf".to_string(), |c| format!("{:.5}", c.radius));
        println!(
            "{:<28} {:>9.2} {:>7} {:>13.4} {:>10.5} {:>9.4} {:>10.3} {:>10}",
            spec.path.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned()),
            spec.gamma_deg,
            ex.num_periods,
            p.delta_phi.to_degrees(),
            p.delta_x,
            p.period_t,
            p.beta.to_degrees(),
            radius
        );
    }

    let obs: Vec<(MassAngle, MotionParams)> = rows
        .iter()
        .map(|(s, ex)| (MassAngle::from_degrees(s.gamma_deg), ex.params))
        .collect();
    let curves = fit_param_curves(&obs, &cfg.curves)?;
    let inputs = json!({
        "tracks": rows.iter().map(|(s, ex)| json!({
            "gamma_deg": s.gamma_deg,
            "params": ex.params,
        })).collect::<Vec<_>>(),
    });
    let mut doc = serde_json::to_value(&curves).expect("curves serialise");
    doc["meta"] = json!(header(cfg, &inputs));
    let text = serde_json::to_string_pretty(&doc).expect("json") + "\n";
    write_output(Some(&a.out), &text)?;
    for (name, c) in [
        ("delta_phi", &curves.delta_phi),
        ("delta_x", &curves.delta_x),
        ("period_T", &curves.period_t),
        ("beta", &curves.beta),
    ] {
        println!("{name}: {} residual={:e}", c.family, c.residual);
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// free, avoidance or boundary_lap; defaults to the config's scenario.
    #[arg(long)]
    pub scenario: Option<ScenarioKind>,
    #[command(flatten)]
    pub source: ParamArgs,
    /// Number of periods; defaults to the config's max_periods.
    #[arg(long)]
    pub periods: Option<u64>,
    /// γ changes as `K:DEG,K:DEG,…` (needs --curves).
    #[arg(long, value_name = "K:DEG,...")]
    pub schedule: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub heading_deg: Option<f64>,
    /// Log CSV; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_schedule(s: &str) -> Result<Vec<(u64, MassAngle)>, CliError> {
    let mut out = Vec::new();
    for item in s.split(',').filter(|x| !x.trim().is_empty()) {
        let bad = || CliError::Input(format!("--schedule item `{item}`: expected K:DEG"));
        let (k, deg) = item.split_once(':').ok_or_else(bad)?;
        let k: u64 = k.trim().parse().map_err(|_| bad())?;
        let deg: f64 = deg.trim().parse().map_err(|_| bad())?;
        if !deg.is_finite() {
            return Err(bad());
        }
        out.push((k, MassAngle::from_degrees(deg)));
    }
    out.sort_by_key(|(k, _)| *k);
    Ok(out)
}

pub fn simulate(cfg: &RunConfig, a: SimulateArgs) -> Result<(), CliError> {
    let mut cfg = cfg.clone();
    if let Some(kind) = a.scenario {
        cfg.scenario.name = kind;
    }
    if let Some(n) = a.periods {
        cfg.scenario.max_periods = n;
    }
    cfg.scenario.start_x = a.x.or(cfg.scenario.start_x);
    cfg.scenario.start_y = a.y.or(cfg.scenario.start_y);
    cfg.scenario.start_heading_deg = a.heading_deg.or(cfg.scenario.start_heading_deg);
    cfg.validate()?;

    let resolved = resolve_params(&a.source)?;
    let schedule = match &a.schedule {
        Some(s) => parse_schedule(s)?,
        None => Vec::new(),
    };
    if !schedule.is_empty() && resolved.curves.is_none() {
        return Err(CliError::Input("--schedule needs --curves".into()));
    }
    let source = match (&resolved.curves, resolved.gamma) {
        (Some(c), Some(g)) => ParamSource::Curves {
            curves: c.clone(),
            gamma: g,
        },
        _ => ParamSource::Fixed(resolved.params),
    };
    let scenario = cfg.scenario.build(&cfg.robot);
    let log = run_scenario(&scenario, &source, cfg.scenario.max_periods, &schedule)?;
    let inputs = json!({
        "source": resolved.inputs,
        "schedule": schedule.iter().map(|(k, g)| (k, g.degrees())).collect::<Vec<_>>(),
    });
    write_output(a.out.as_deref(), &log.to_csv(&[header(&cfg, &inputs)]))?;
    let verdict = serde_json::to_string(&log.verdict).expect("json");
    if a.out.is_some() {
        println!("{verdict}");
    } else {
        eprintln!("{verdict}");
    }
    if log.verdict.passed {
        Ok(())
    } else {
        Err(CliError::Failed(format!("scenario {} failed: {}", scenario.kind, log.verdict.detail)))
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub track: PathBuf,
    #[command(flatten)]
    pub input: TrackInput,
    /// Number of periods in the track; detected from pauses when omitted.
    #[arg(long)]
    pub periods: Option<usize>,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

pub fn analyze(cfg: &RunConfig, a: AnalyzeArgs) -> Result<(), CliError> {
    let track = a.input.read(&a.track)?;
    let ex = a.input.extract(&track, a.periods)?;
    let p = ex.params;
    if a.json {
        let doc = json!({
            "header": header(cfg, &json!({ "track": track_digest(&track), "periods": a.periods })),
            "params": p,
            "num_periods": ex.num_periods,
            "straight_line": ex.straight_line,
            "circle": ex.circle,
            "delta_x_sine_sum": ex.delta_x_sine_sum,
            "radius_sine_sum": orbit_radius_sine_sum(&p).ok(),
            "radius_exact": orbit_radius_exact(&p).ok(),
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        return Ok(());
    }
    println!("periods={} straight_line={}", ex.num_periods, ex.straight_line);
    println!("{}", params_summary(&p));
    match ex.circle {
        Some(c) => println!(
            "circle_center=({}, {}) circle_radius={} radius_std={}",
            c.center.x, c.center.y, c.radius, c.radius_std
        ),
        None => println!("circle_radius=inf"),
    }
    if let Some(dx) = ex.delta_x_sine_sum {
        println!("delta_x_sine_sum={dx}");
    }
    println!(
        "radius_sine_sum={} radius_exact={}",
        fmt_radius(orbit_radius_sine_sum(&p)),
        fmt_radius(orbit_radius_exact(&p))
    );
    Ok(())
}

fn track_digest(track: &MarkerTrack) -> String {
    let flat: Vec<[f64; 3]> = track.samples.iter().map(|s| [s.t, s.x, s.y]).collect();
    config_hash(&json!({ "samples": flat, "headings": track.headings }))
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
    #[arg(long)]
    pub curves: PathBuf,
    /// Scenario for new sessions; defaults to the config's scenario.
    #[arg(long)]
    pub scenario: Option<ScenarioKind>,
    /// Initial γ in degrees.
    #[arg(long, default_value_t = 180.0, allow_hyphen_values = true)]
    pub gamma: f64,
    /// Simulated periods per period_T of wall clock.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    /// Directory for session recordings.
    #[arg(long)]
    pub record_dir: Option<PathBuf>,
}

pub fn serve(cfg: &RunConfig, a: ServeArgs) -> Result<(), CliError> {
    let curves = load_curves(&a.curves)?;
    let mut scenario = cfg.scenario.clone();
    if let Some(kind) = a.scenario {
        scenario.name = kind;
    }
    if let Some(dir) = &a.record_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    }
    let config = ServeConfig {
        addr: format!("{}:{}", a.host, a.port),
        session: SessionConfig {
            robot: cfg.robot.clone(),
            scenario,
            curves,
            gamma_deg: a.gamma,
            speed_factor: a.speed,
        },
        record_dir: a.record_dir,
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Output(e.to_string()))?;
    rt.block_on(async {
        let server = Server::bind(config).await?;
        let addr = server.local_addr().map_err(|e| CliError::Output(e.to_string()))?;
        println!("listening on {addr} (WebSocket at ws://{addr}/ or newline-delimited JSON over TCP)");
        server.run().await.map_err(|e| CliError::Output(e.to_string()))
    })
}
