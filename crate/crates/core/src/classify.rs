//! Convergence detection and identification of the limit shape.
//!
//! Rotationally symmetric constant mean curvature surfaces are Delaunay
//! surfaces. Between two planes met orthogonally only the cylinder and
//! periodic pieces of unduloids remain; the two are told apart by how far the
//! profile is from constant.

use serde::{Deserialize, Serialize};

use crate::geometry::{unit_ball_volume, GeometrySample, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Cylinder,
    NonCylinderCMC,
    NotConverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTolerances {
    /// Bound on `(H_max - H_min)/H_mean`.
    pub convergence: f64,
    /// Bound on `max|ρ - mean ρ| / mean ρ` for a cylinder.
    pub cylinder: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        Self {
            convergence: 1e-6,
            cylinder: 1e-5,
        }
    }
}

/// Area and volume of the initial surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub area: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub verdict: Verdict,
    /// Mean radius, present for the `Cylinder` verdict.
    pub limit_radius: Option<f64>,
    /// Radius of the cylinder with the initial area.
    pub predicted_radius: f64,
    /// Radius of the cylinder with the initial volume.
    pub volume_matched_radius: f64,
    #[serde(rename = "H_spread")]
    pub h_spread: f64,
    pub profile_residual: f64,
    pub volume_gain: f64,
}

/// Radius `ρ` with `n ω_n ρ^{n-1} d = area`.
pub fn predicted_cylinder_radius(area: f64, n: u32, d: f64) -> f64 {
    let omega = unit_ball_volume(n as i64).expect("n >= 1");
    (area / (n as f64 * omega * d)).powf(1.0 / (n as f64 - 1.0))
}

/// Radius `ρ` with `ω_n ρ^n d = volume`.
pub fn volume_matched_radius(volume: f64, n: u32, d: f64) -> f64 {
    let omega = unit_ball_volume(n as i64).expect("n >= 1");
    (volume / (omega * d)).powf(1.0 / n as f64)
}

/// The mean curvature is constant to within `tol` (relative spread).
pub fn convergence_test(g: &GeometrySample, tol: f64) -> bool {
    g.h_spread() <= tol
}

pub fn profile_residual(p: &Profile) -> f64 {
    let mean = p.mean_radius();
    p.rho().iter().fold(0.0f64, |acc, r| acc.max((r - mean).abs())) / mean
}

pub fn classify_limit(
    p: &Profile,
    g: &GeometrySample,
    reference: &Reference,
    tol: &ClassifyTolerances,
) -> ClassificationResult {
    let n = p.dim();
    let d = p.grid().width();
    let residual = profile_residual(p);
    let verdict = if !convergence_test(g, tol.convergence) {
        Verdict::NotConverged
    } else if residual <= tol.cylinder {
        Verdict::Cylinder
    } else {
        Verdict::NonCylinderCMC
    };
    ClassificationResult {
        verdict,
        limit_radius: (verdict == Verdict::Cylinder).then(|| p.mean_radius()),
        predicted_radius: predicted_cylinder_radius(reference.area, n, d),
        volume_matched_radius: volume_matched_radius(reference.volume, n, d),
        h_spread: g.h_spread(),
        profile_residual: residual,
        volume_gain: g.volume - reference.volume,
    }
}
