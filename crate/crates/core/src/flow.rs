//! Flow laws and their normal speeds.
//!
//! Every law moves the surface along its outer normal with a speed of the
//! form `a(t) - b(t)·H`:
//!
//! | law               | speed       | `h(t)`              |
//! |-------------------|-------------|---------------------|
//! | area preserving   | `1 - h H`   | `∫H dμ / ∫H² dμ`    |
//! | volume preserving | `h - H`     | `∫H dμ / |M|`       |
//! | plain MCF         | `-H`        | `0`                 |
//!
//! In the radius chart a normal speed `F` becomes `∂ρ/∂t = F √(1+ρ'²)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometrySample, Profile, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowLaw {
    AreaPreserving,
    VolumePreserving,
    #[serde(rename = "PlainMCF")]
    PlainMcf,
}

impl FlowLaw {
    pub const ALL: [FlowLaw; 3] = [
        FlowLaw::AreaPreserving,
        FlowLaw::VolumePreserving,
        FlowLaw::PlainMcf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FlowLaw::AreaPreserving => "AreaPreserving",
            FlowLaw::VolumePreserving => "VolumePreserving",
            FlowLaw::PlainMcf => "PlainMCF",
        }
    }

    /// `(a, b)` in the normal speed `a - b·H`, given the rate `h`.
    pub fn speed_coefficients(&self, h: f64) -> (f64, f64) {
        match self {
            FlowLaw::AreaPreserving => (1.0, h),
            FlowLaw::VolumePreserving => (h, 1.0),
            FlowLaw::PlainMcf => (0.0, 1.0),
        }
    }

    /// Laws with a constant-mean-curvature equilibrium.
    pub fn is_constrained(&self) -> bool {
        !matches!(self, FlowLaw::PlainMcf)
    }
}

impl fmt::Display for FlowLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown flow law `{0}` (expected AreaPreserving, VolumePreserving or PlainMCF)")]
pub struct UnknownLaw(pub String);

impl FromStr for FlowLaw {
    type Err = UnknownLaw;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FlowLaw::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| UnknownLaw(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("∫H² dμ = {0} is not positive; the area-preserving rate is undefined")]
    DegenerateGeometry(f64),
}

/// The nonlocal rate `h(t)` of a law.
pub fn nonlocal_rate(law: FlowLaw, g: &GeometrySample) -> Result<f64, FlowError> {
    match law {
        FlowLaw::AreaPreserving => {
            if !(g.int_h2 > 0.0) {
                return Err(FlowError::DegenerateGeometry(g.int_h2));
            }
            Ok(g.int_h / g.int_h2)
        }
        FlowLaw::VolumePreserving => Ok(g.int_h / g.area),
        FlowLaw::PlainMcf => Ok(0.0),
    }
}

/// Evaluates the geometry of `p` and fills in the rate of `law`.
pub fn sample(law: FlowLaw, p: &Profile) -> Result<GeometrySample, FlowError> {
    let mut g = GeometrySample::evaluate(p);
    g.h = nonlocal_rate(law, &g)?;
    Ok(g)
}

/// Normal speed along the outer normal; `g.h` must already be filled.
pub fn normal_speed(law: FlowLaw, g: &GeometrySample) -> ScalarField {
    let (a, b) = law.speed_coefficients(g.h);
    ScalarField::new(
        g.mean_curvature.iter().map(|hh| a - b * hh).collect(),
        "length/time",
    )
}

/// `∂ρ/∂t = F·v` at every node.
pub fn graph_velocity(p: &Profile, speed: &ScalarField) -> ScalarField {
    let v = crate::geometry::tilt(p);
    graph_velocity_with_tilt(speed, &v)
}

pub(crate) fn graph_velocity_with_tilt(speed: &ScalarField, tilt: &ScalarField) -> ScalarField {
    ScalarField::new(
        speed.iter().zip(tilt.iter()).map(|(f, v)| f * v).collect(),
        "length/time",
    )
}

/// `∂ρ/∂t` for `law` at the profile `p`, together with its geometry.
pub fn radial_velocity(law: FlowLaw, p: &Profile) -> Result<(ScalarField, GeometrySample), FlowError> {
    let g = sample(law, p)?;
    let vel = graph_velocity_with_tilt(&normal_speed(law, &g), &g.tilt);
    Ok((vel, g))
}
