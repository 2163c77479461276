//! Least-squares curves mapping γ to each motion parameter.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::params::wrap_angle;
use super::EstimationError;
use crate::kinematics::MotionParams;
use crate::model::MassAngle;

/// Relative singular-value cutoff for a rank-deficient design matrix.
const RANK_TOL: f64 = 1e-12;

/// Function family used for one parameter curve. γ is in radians and, for
/// the polynomial families, wrapped into `[0, 2π)` before evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFamily {
    /// `c0`
    Constant,
    /// `c0 + c1·γ`
    Affine,
    /// `c0 + c1·sin(γ + c2)`
    Sinusoid,
    /// `Σ cᵢ·γⁱ` for `i = 0..=degree`
    Polynomial(u32),
}

impl CurveFamily {
    pub fn num_coeffs(self) -> usize {
        match self {
            CurveFamily::Constant => 1,
            CurveFamily::Affine => 2,
            CurveFamily::Sinusoid => 3,
            CurveFamily::Polynomial(d) => d as usize + 1,
        }
    }

    fn basis(self, gamma: f64) -> Vec<f64> {
        let g = MassAngle::from_radians(gamma).radians();
        match self {
            CurveFamily::Constant => vec![1.0],
            CurveFamily::Affine => vec![1.0, g],
            CurveFamily::Sinusoid => vec![1.0, gamma.sin(), gamma.cos()],
            CurveFamily::Polynomial(d) => (0..=d as i32).map(|i| g.powi(i)).collect(),
        }
    }

    /// Converts linear-basis weights to the family's public coefficients.
    fn coeffs_from_weights(self, w: &[f64]) -> Vec<f64> {
        match self {
            CurveFamily::Sinusoid => {
                // a·sin γ + b·cos γ = c1·sin(γ + c2)
                let (a, b) = (w[1], w[2]);
                let c1 = a.hypot(b);
                let c2 = if c1 == 0.0 { 0.0 } else { b.atan2(a) };
                vec![w[0], c1, c2]
            }
            _ => w.to_vec(),
        }
    }

    pub fn eval(self, coeffs: &[f64], gamma: f64) -> f64 {
        match self {
            CurveFamily::Sinusoid => coeffs[0] + coeffs[1] * (gamma + coeffs[2]).sin(),
            _ => self.basis(gamma).iter().zip(coeffs).map(|(b, c)| b * c).sum(),
        }
    }
}

impl fmt::Display for CurveFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveFamily::Constant => f.write_str("constant"),
            CurveFamily::Affine => f.write_str("affine"),
            CurveFamily::Sinusoid => f.write_str("sinusoid"),
            CurveFamily::Polynomial(d) => write!(f, "poly{d}"),
        }
    }
}

impl FromStr for CurveFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(CurveFamily::Constant),
            "affine" => Ok(CurveFamily::Affine),
            "sinusoid" => Ok(CurveFamily::Sinusoid),
            _ => s
                .strip_prefix("poly")
                .and_then(|d| d.parse::<u32>().ok())
                .filter(|d| *d <= 8)
                .map(CurveFamily::Polynomial)
                .ok_or_else(|| format!("unknown curve family `{s}`")),
        }
    }
}

impl Serialize for CurveFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CurveFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedCurve {
    pub family: CurveFamily,
    pub coeffs: Vec<f64>,
    /// Euclidean norm of the fit residuals.
    pub residual: f64,
}

impl FittedCurve {
    pub fn eval(&self, gamma: f64) -> f64 {
        self.family.eval(&self.coeffs, gamma)
    }
}

/// Which family each parameter is fitted with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveFamilies {
    pub delta_phi: CurveFamily,
    pub delta_x: CurveFamily,
    #[serde(rename = "period_T")]
    pub period_t: CurveFamily,
    pub beta: CurveFamily,
}

impl Default for CurveFamilies {
    fn default() -> Self {
        Self {
            delta_phi: CurveFamily::Sinusoid,
            delta_x: CurveFamily::Sinusoid,
            period_t: CurveFamily::Sinusoid,
            beta: CurveFamily::Affine,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCurves {
    pub delta_phi: FittedCurve,
    pub delta_x: FittedCurve,
    #[serde(rename = "period_T")]
    pub period_t: FittedCurve,
    pub beta: FittedCurve,
}

impl ParamCurves {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curves serialise")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        let curves: Self = serde_json::from_str(s)?;
        curves.validate().map_err(serde::de::Error::custom)?;
        Ok(curves)
    }

    /// Checks that each curve carries its family's coefficient count.
    pub fn validate(&self) -> Result<(), String> {
        for c in [&self.delta_phi, &self.delta_x, &self.period_t, &self.beta] {
            if c.coeffs.len() != c.family.num_coeffs() {
                return Err(format!(
                    "family {} expects {} coefficients, got {}",
                    c.family,
                    c.family.num_coeffs(),
                    c.coeffs.len()
                ));
            }
            if c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(format!("family {} has a non-finite coefficient", c.family));
            }
        }
        Ok(())
    }

    /// Curves that return `params` at every γ.
    pub fn constant(params: &MotionParams) -> Self {
        let c = |v: f64| FittedCurve {
            family: CurveFamily::Constant,
            coeffs: vec![v],
            residual: 0.0,
        };
        Self {
            delta_phi: c(params.delta_phi),
            delta_x: c(params.delta_x),
            period_t: c(params.period_t),
            beta: c(params.beta),
        }
    }
}

/// Least-squares fit of one family to `(γ, value)` pairs.
pub fn fit_curve(family: CurveFamily, data: &[(f64, f64)]) -> Result<FittedCurve, EstimationError> {
    let ncoef = family.num_coeffs();
    let needed = ncoef.max(3);
    let mut distinct: Vec<f64> = data.iter().map(|(g, _)| MassAngle::from_radians(*g).radians()).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if distinct.len() > 1 && (distinct[0] + TAU - distinct[distinct.len() - 1]) < 1e-9 {
        distinct.pop();
    }
    if distinct.len() < needed {
        return Err(EstimationError::InsufficientData {
            needed,
            got: distinct.len(),
        });
    }

    let rows: Vec<f64> = data.iter().flat_map(|(g, _)| family.basis(*g)).collect();
    let a = DMatrix::from_row_slice(data.len(), ncoef, &rows);
    let y = DVector::from_iterator(data.len(), data.iter().map(|(_, v)| *v));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.iter().any(|s| *s <= RANK_TOL * smax) {
        return Err(EstimationError::InsufficientData {
            needed,
            got: distinct.len(),
        });
    }
    let w = svd
        .solve(&y, RANK_TOL * smax)
        .map_err(|_| EstimationError::InsufficientData {
            needed,
            got: distinct.len(),
        })?;
    let residual = (&a * &w - &y).norm();
    Ok(FittedCurve {
        family,
        coeffs: family.coeffs_from_weights(w.as_slice()),
        residual,
    })
}

/// Fits every parameter curve. β observations are first unwrapped along
/// increasing γ so an affine family is not broken by the ±π seam.
pub fn fit_param_curves(
    observations: &[(MassAngle, MotionParams)],
    families: &CurveFamilies,
) -> Result<ParamCurves, EstimationError> {
    let mut obs: Vec<(f64, MotionParams)> = observations.iter().map(|(g, p)| (g.radians(), *p)).collect();
    obs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let column = |f: fn(&MotionParams) -> f64| -> Vec<(f64, f64)> { obs.iter().map(|(g, p)| (*g, f(p))).collect() };

    let mut beta = column(|p| p.beta);
    for i in 1..beta.len() {
        let prev = beta[i - 1].1;
        beta[i].1 = prev + wrap_angle(beta[i].1 - prev);
    }

    Ok(ParamCurves {
        delta_phi: fit_curve(families.delta_phi, &column(|p| p.delta_phi))?,
        delta_x: fit_curve(families.delta_x, &column(|p| p.delta_x))?,
        period_t: fit_curve(families.period_t, &column(|p| p.period_t))?,
        beta: fit_curve(families.beta, &beta)?,
    })
}

/// Smallest period the predictor will return, s.
pub const MIN_PREDICTED_PERIOD: f64 = 1e-6;

/// Evaluates every curve at γ. Out-of-range values from extrapolation are
/// clamped: Δx ≥ 0, T ≥ [`MIN_PREDICTED_PERIOD`], |Δφ| ≤ π.
pub fn predict_at_gamma(curves: &ParamCurves, gamma: MassAngle) -> MotionParams {
    let g = gamma.radians();
    MotionParams {
        delta_phi: curves.delta_phi.eval(g).clamp(-PI, PI),
        delta_x: curves.delta_x.eval(g).max(0.0),
        period_t: curves.period_t.eval(g).max(MIN_PREDICTED_PERIOD),
        beta: curves.beta.eval(g),
    }
}
