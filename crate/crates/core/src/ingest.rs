//! Marker-tracking CSV import.
//!
//! Accepted header columns (comma or tab separated, `#` comment lines
//! skipped, `.` as the only decimal separator):
//!
//! * `t` (seconds) or `frame` (converted with the frame-rate hint),
//! * `x`, `y` in the declared length unit,
//! * optionally `heading` (radians) or `hx`, `hy` (heading-marker position),
//! * optionally `k`, which is ignored.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::estimation::{MarkerTrack, TrackSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LengthUnit {
    #[default]
    Meter,
    Centimeter,
    Millimeter,
}

impl LengthUnit {
    pub fn to_meters(self) -> f64 {
        match self {
            LengthUnit::Meter => 1.0,
            LengthUnit::Centimeter => 0.01,
            LengthUnit::Millimeter => 0.001,
        }
    }
}

impl FromStr for LengthUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "m" => Ok(Self::Meter),
            "cm" => Ok(Self::Centimeter),
            "mm" => Ok(Self::Millimeter),
            _ => Err(format!("unknown length unit `{s}` (expected m, cm or mm)")),
        }
    }
}

/// A track file and how to interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackFile {
    pub path: PathBuf,
    pub unit: LengthUnit,
    /// Frames per second for `frame`-indexed files.
    pub frame_rate: f64,
}

impl TrackFile {
    pub const DEFAULT_FRAME_RATE: f64 = 60.0;

    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            unit: LengthUnit::Meter,
            frame_rate: Self::DEFAULT_FRAME_RATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("file has no data rows")]
    EmptyFile,
    #[error("time does not increase at line {line}")]
    NonMonotonicTime { line: u64 },
    #[error("{} rejected row(s): {}", .0.len(), fmt_rows(.0))]
    RejectedRows(Vec<RowError>),
}

fn fmt_rows(rows: &[RowError]) -> String {
    rows.iter()
        .map(|r| format!("line {}: {}", r.line, r.reason))
        .collect::<Vec<_>>()
        .join("; ")
}

enum TimeColumn {
    Seconds(usize),
    Frame(usize),
}

enum HeadingColumns {
    None,
    Angle(usize),
    Marker(usize, usize),
}

pub fn parse_track(file: &TrackFile) -> Result<MarkerTrack, IngestError> {
    let text = std::fs::read_to_string(&file.path).map_err(|source| IngestError::Io {
        path: file.path.clone(),
        source,
    })?;
    parse_track_str(&text, file.unit, file.frame_rate)
}

pub fn parse_track_path(path: &Path, unit: LengthUnit) -> Result<MarkerTrack, IngestError> {
    parse_track(&TrackFile {
        path: path.to_owned(),
        unit,
        frame_rate: TrackFile::DEFAULT_FRAME_RATE,
    })
}

pub fn parse_track_str(text: &str, unit: LengthUnit, frame_rate: f64) -> Result<MarkerTrack, IngestError> {
    let header_line = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .ok_or(IngestError::EmptyFile)?;
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| IngestError::MalformedHeader(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    for h in headers.iter() {
        if !matches!(h, "t" | "frame" | "x" | "y" | "heading" | "hx" | "hy" | "k") {
            return Err(IngestError::MalformedHeader(format!("unexpected column `{h}`")));
        }
    }
    let time = match (col("t"), col("frame")) {
        (Some(i), None) => TimeColumn::Seconds(i),
        (None, Some(i)) => {
            if !(frame_rate.is_finite() && frame_rate > 0.0) {
                return Err(IngestError::MalformedHeader("frame column needs a positive frame rate".into()));
            }
            TimeColumn::Frame(i)
        }
        _ => return Err(IngestError::MalformedHeader("need exactly one of `t` or `frame`".into())),
    };
    let (xi, yi) = match (col("x"), col("y")) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(IngestError::MalformedHeader("missing `x` or `y` column".into())),
    };
    let heading = match (col("heading"), col("hx"), col("hy")) {
        (None, None, None) => HeadingColumns::None,
        (Some(h), None, None) => HeadingColumns::Angle(h),
        (None, Some(a), Some(b)) => HeadingColumns::Marker(a, b),
        _ => {
            return Err(IngestError::MalformedHeader(
                "use either `heading` or both `hx` and `hy`".into(),
            ))
        }
    };

    let scale = unit.to_meters();
    let mut samples = Vec::new();
    let mut headings = Vec::new();
    let mut rejected = Vec::new();
    let mut lines = Vec::new();
    for rec in reader.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                rejected.push(RowError {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != headers.len() {
            rejected.push(RowError {
                line,
                reason: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
            continue;
        }
        let field = |i: usize| -> Result<f64, String> {
            let raw = &rec[i];
            let v: f64 = raw.parse().map_err(|_| format!("`{raw}` is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("`{raw}` is not finite"))
            }
        };
        let parsed = (|| -> Result<(f64, f64, f64, Option<f64>), String> {
            let t = match time {
                TimeColumn::Seconds(i) => field(i)?,
                TimeColumn::Frame(i) => field(i)? / frame_rate,
            };
            let x = field(xi)?;
            let y = field(yi)?;
            let h = match heading {
                HeadingColumns::None => None,
                HeadingColumns::Angle(i) => Some(field(i)?),
                HeadingColumns::Marker(a, b) => {
                    let (hx, hy) = (field(a)?, field(b)?);
                    Some((hy - y).atan2(hx - x))
                }
            };
            Ok((t, x, y, h))
        })();
        match parsed {
            Ok((t, x, y, h)) => {
                samples.push(TrackSample {
                    t,
                    x: x * scale,
                    y: y * scale,
                });
                if let Some(h) = h {
                    headings.push(h);
                }
                lines.push(line);
            }
            Err(reason) => rejected.push(RowError { line, reason }),
        }
    }
    if !rejected.is_empty() {
        return Err(IngestError::RejectedRows(rejected));
    }
    if samples.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    if let Some(i) = samples.windows(2).position(|w| !(w[1].t > w[0].t)) {
        return Err(IngestError::NonMonotonicTime { line: lines[i + 1] });
    }
    Ok(MarkerTrack {
        samples,
        headings: match heading {
            HeadingColumns::None => None,
            _ => Some(headings),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn millimetre_file() {
        let text = "# exported\nt,x,y\n0,0,0\n0.5,100,-20\n1.0,250.5,3\n";
        let track = parse_track_str(text, LengthUnit::Millimeter, 60.0).unwrap();
        assert_eq!(track.samples.len(), 3);
        assert_relative_eq!(track.samples[1].x, 0.1, epsilon = 1e-15);
        assert_relative_eq!(track.samples[2].x, 0.2505, epsilon = 1e-15);
        assert!(track.headings.is_none());
    }

    #[test]
    fn tab_separated_with_heading_marker() {
        let text = "t\tx\ty\thx\thy\n0\t0\t0\t1\t0\n1\t1\t1\t1\t2\n";
        let track = parse_track_str(text, LengthUnit::Meter, 60.0).unwrap();
        let h = track.headings.unwrap();
        assert_relative_eq!(h[0], 0.0);
        assert_relative_eq!(h[1], std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn frame_column_uses_rate() {
        let text = "frame,x,y\n0,0,0\n30,1,0\n60,2,0\n";
        let track = parse_track_str(text, LengthUnit::Meter, 60.0).unwrap();
        assert_eq!(track.samples[2].t, 1.0);
    }

    #[test]
    fn decreasing_time() {
        let text = "t,x,y\n0,0,0\n2,1,0\n1,2,0\n";
        assert!(matches!(
            parse_track_str(text, LengthUnit::Meter, 60.0),
            Err(IngestError::NonMonotonicTime { line: 4 })
        ));
    }

    #[test]
    fn every_bad_row_is_reported() {
        let text = "t,x,y\n0,0,0\n1,NaN,0\n2,1,0\n3,inf,2\n4,1\n";
        match parse_track_str(text, LengthUnit::Meter, 60.0) {
            Err(IngestError::RejectedRows(rows)) => {
                let lines: Vec<u64> = rows.iter().map(|r| r.line).collect();
                assert_eq!(lines, vec![3, 5, 6]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decimal_comma_rejected() {
        let text = "t\tx\ty\n0\t1,5\t0\n";
        assert!(matches!(
            parse_track_str(text, LengthUnit::Meter, 60.0),
            Err(IngestError::RejectedRows(_))
        ));
    }

    #[test]
    fn header_errors() {
        for text in ["a,b,c\n1,2,3\n", "t,x\n0,0\n", "t,x,y,hx\n0,0,0,0\n", "t,frame,x,y\n"] {
            assert!(
                matches!(parse_track_str(text, LengthUnit::Meter, 60.0), Err(IngestError::MalformedHeader(_))),
                "{text}"
            );
        }
        assert!(matches!(parse_track_str("", LengthUnit::Meter, 60.0), Err(IngestError::EmptyFile)));
        assert!(matches!(
            parse_track_str("# only\nt,x,y\n", LengthUnit::Meter, 60.0),
            Err(IngestError::EmptyFile)
        ));
    }
}
