//! Initial profiles that meet both planes orthogonally.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, GeometrySample, Grid, Profile};
use crate::monitors::theorem_bounds;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: radius reaches {min} (must stay positive)")]
    NonPositiveRadius { min: f64 },
    #[error("invalid scenario: {0}")]
    Parameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Family {
    Cylinder {
        r0: f64,
    },
    /// `r0 + ε cos(kπz/d)`.
    Cosine {
        r0: f64,
        epsilon: f64,
        k: u32,
    },
    /// Gaussian bump multiplied by a cutoff that is flat near both planes.
    Bump {
        r0: f64,
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(flatten)]
    pub family: Family,
    pub n: u32,
    pub d: f64,
    pub m: usize,
}

impl ScenarioSpec {
    pub fn cosine(r0: f64, epsilon: f64, k: u32) -> Self {
        Self {
            family: Family::Cosine { r0, epsilon, k },
            n: 2,
            d: 1.0,
            m: 201,
        }
    }

    pub fn cylinder(r0: f64) -> Self {
        Self {
            family: Family::Cylinder { r0 },
            n: 2,
            d: 1.0,
            m: 201,
        }
    }

    /// Cosine `r0 = 3, ε = 0.02, k = 1` with `n = 2, d = 1, m = 201`: mean
    /// convex and inside `|M₀| ≤ V/d`.
    pub fn headline() -> Self {
        Self::cosine(3.0, 0.02, 1)
    }

    pub fn with_grid(mut self, n: u32, d: f64, m: usize) -> Self {
        self.n = n;
        self.d = d;
        self.m = m;
        self
    }
}

/// Quintic smoothstep on `[0, 1]`; value, slope and curvature vanish at 0.
fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

fn cutoff(z: f64, d: f64) -> f64 {
    let band = 0.1 * d;
    smoothstep(z / band) * smoothstep((d - z) / band)
}

pub fn build(spec: &ScenarioSpec) -> Result<Profile, ScenarioError> {
    let grid = Grid::new(spec.d, spec.m)?;
    if spec.n < 2 {
        return Err(GeometryError::ProfileDimension(spec.n).into());
    }
    let d = spec.d;
    let rho: Vec<f64> = match spec.family {
        Family::Cylinder { r0 } => grid.nodes().map(|_| r0).collect(),
        Family::Cosine { r0, epsilon, k } => {
            if k < 1 {
                return Err(ScenarioError::Parameter("cosine mode k must be >= 1".into()));
            }
            let freq = k as f64 * std::f64::consts::PI / d;
            grid.nodes().map(|z| r0 + epsilon * (freq * z).cos()).collect()
        }
        Family::Bump {
            r0,
            amplitude,
            center,
            width,
        } => {
            if !(center > 0.0 && center < d) {
                return Err(ScenarioError::Parameter(format!(
                    "bump center {center} must lie in (0, {d})"
                )));
            }
            if !(width > 0.0) {
                return Err(ScenarioError::Parameter(format!(
                    "bump width {width} must be positive"
                )));
            }
            grid.nodes()
                .map(|z| {
                    let s = (z - center) / width;
                    r0 + amplitude * (-s * s).exp() * cutoff(z, d)
                })
                .collect()
        }
    };
    let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(ScenarioError::NonPositiveRadius { min });
    }
    Ok(Profile::new(grid, spec.n, rho)?)
}

/// Whether a profile meets the hypotheses of the convergence theorem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub mean_convex: bool,
    #[serde(rename = "H_min")]
    pub h_min: f64,
    pub hypothesis_holds: bool,
    pub area: f64,
    #[serde(rename = "V_over_d")]
    pub v_over_d: f64,
}

pub fn validate(p: &Profile) -> ValidationReport {
    let g = GeometrySample::evaluate(p);
    let bounds = theorem_bounds(p);
    let h_min = g.mean_curvature.min();
    ValidationReport {
        mean_convex: h_min > 0.0,
        h_min,
        hypothesis_holds: bounds.hypothesis_holds,
        area: g.area,
        v_over_d: g.volume / p.grid().width(),
    }
}
