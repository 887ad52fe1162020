//! Run-time bookkeeping of the quantities the flow is known to conserve,
//! increase, keep positive, or keep bounded.
//!
//! A [`Ledger`] is filled by the stepper and audited afterwards. Violations
//! are data: a run outside the theorem's hypotheses is still a valid
//! experiment, so nothing in here aborts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{self, FlowError, FlowLaw};
use crate::geometry::{enclosed_volume, area, laplace_beltrami, GeometrySample, Profile, ScalarField};

/// One recorded instant. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub area: f64,
    pub volume: f64,
    pub h: f64,
    #[serde(rename = "H_min")]
    pub h_min: f64,
    #[serde(rename = "H_max")]
    pub h_max: f64,
    pub v_max: f64,
    #[serde(rename = "A2_max")]
    pub a2_max: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    #[serde(rename = "intH")]
    pub int_h: f64,
    #[serde(rename = "intH2")]
    pub int_h2: f64,
    pub speed_max: f64,
}

impl LedgerRow {
    pub const COLUMNS: [&'static str; 13] = [
        "t", "area", "volume", "h", "H_min", "H_max", "v_max", "A2_max", "rho_min", "rho_max",
        "intH", "intH2", "speed_max",
    ];

    /// `g.h` must already hold the rate of `law`.
    pub fn from_sample(t: f64, law: FlowLaw, p: &Profile, g: &GeometrySample) -> Self {
        Self {
            t,
            area: g.area,
            volume: g.volume,
            h: g.h,
            h_min: g.mean_curvature.min(),
            h_max: g.mean_curvature.max(),
            v_max: g.tilt.max(),
            a2_max: g.a2.max(),
            rho_min: p.min_radius(),
            rho_max: p.max_radius(),
            int_h: g.int_h,
            int_h2: g.int_h2,
            speed_max: flow::normal_speed(law, g).max_abs(),
        }
    }

    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.area,
            self.volume,
            self.h,
            self.h_min,
            self.h_max,
            self.v_max,
            self.a2_max,
            self.rho_min,
            self.rho_max,
            self.int_h,
            self.int_h2,
            self.speed_max,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    AreaConservation,
    VolumeMonotone,
    MeanConvexity,
    RadiusUpper,
    RadiusPositive,
    RatePositive,
    CauchySchwarz,
    TiltTrend,
    CurvatureTrend,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub check: Check,
    pub measured: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("ledger time must increase strictly: {t} after {last}")]
pub struct NonIncreasingTime {
    pub t: f64,
    pub last: f64,
}

/// Append-only time series of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ledger {
    law: FlowLaw,
    rows: Vec<LedgerRow>,
    violations: Vec<Violation>,
}

impl Ledger {
    pub fn new(law: FlowLaw) -> Self {
        Self {
            law,
            rows: Vec::new(),
            violations: Vec::new(),
        }
    }

    /// Builds a ledger from existing rows, e.g. a synthetic series in tests.
    pub fn from_rows(
        law: FlowLaw,
        rows: impl IntoIterator<Item = LedgerRow>,
    ) -> Result<Self, NonIncreasingTime> {
        let mut l = Self::new(law);
        for r in rows {
            l.push(r)?;
        }
        Ok(l)
    }

    pub fn law(&self) -> FlowLaw {
        self.law
    }

    pub fn push(&mut self, row: LedgerRow) -> Result<(), NonIncreasingTime> {
        if let Some(last) = self.rows.last() {
            if !(row.t > last.t) {
                return Err(NonIncreasingTime { t: row.t, last: last.t });
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn record_violations(&mut self, v: impl IntoIterator<Item = Violation>) {
        self.violations.extend(v);
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&LedgerRow> {
        self.rows.last()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }
}

/// Explicit constants of the radius bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBounds {
    /// Radius of the cylinder enclosing the same volume, `(V/(ω_n d))^{1/n}`.
    pub rho_c: f64,
    /// `ρ_C + (|M₀|/ω_n)^{1/n}`.
    pub r_bound: f64,
    /// `|M₀| ≤ V/d`.
    pub hypothesis_holds: bool,
    pub area: f64,
    pub volume: f64,
}

pub fn theorem_bounds(p0: &Profile) -> TheoremBounds {
    let n = p0.dim() as f64;
    let omega = p0.omega();
    let d = p0.grid().width();
    let volume = enclosed_volume(p0);
    let area = area(p0);
    let rho_c = (volume / (omega * d)).powf(1.0 / n);
    TheoremBounds {
        rho_c,
        r_bound: rho_c + (area / omega).powf(1.0 / n),
        hypothesis_holds: area <= volume / d,
        area,
        volume,
    }
}

/// Rows whose area left `area(0)` by more than `tol_rel` (area-preserving runs only).
pub fn check_area_conservation(l: &Ledger, tol_rel: f64) -> Vec<Violation> {
    if l.law != FlowLaw::AreaPreserving {
        return Vec::new();
    }
    let Some(first) = l.rows.first() else {
        return Vec::new();
    };
    let a0 = first.area;
    l.rows
        .iter()
        .filter_map(|r| {
            let drift = (r.area - a0).abs() / a0;
            (drift > tol_rel).then_some(Violation {
                t: r.t,
                check: Check::AreaConservation,
                measured: drift,
                threshold: tol_rel,
            })
        })
        .collect()
}

/// Consecutive rows where the volume dropped by more than `tol_rel·V(0)`
/// (area-preserving runs only). `measured` is the relative drop.
pub fn check_volume_monotone(l: &Ledger, tol_rel: f64) -> Vec<Violation> {
    if l.law != FlowLaw::AreaPreserving {
        return Vec::new();
    }
    let Some(first) = l.rows.first() else {
        return Vec::new();
    };
    let v0 = first.volume;
    l.rows
        .windows(2)
        .filter_map(|w| {
            let drop = (w[0].volume - w[1].volume) / v0;
            (drop > tol_rel).then_some(Violation {
                t: w[1].t,
                check: Check::VolumeMonotone,
                measured: drop,
                threshold: tol_rel,
            })
        })
        .collect()
}

pub fn check_mean_convexity(l: &Ledger) -> Vec<Violation> {
    l.rows
        .iter()
        .filter(|r| !(r.h_min > 0.0))
        .map(|r| Violation {
            t: r.t,
            check: Check::MeanConvexity,
            measured: r.h_min,
            threshold: 0.0,
        })
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

/// Factor over the run median above which the final tilt or curvature counts
/// as a blow-up trend.
pub const TREND_FACTOR: f64 = 10.0;

/// Relative slack of the Cauchy–Schwarz bound `h ∫H dμ ≤ |M|`.
pub const CAUCHY_SCHWARZ_SLACK: f64 = 1e-12;

pub fn check_bounds(l: &Ledger, b: &TheoremBounds) -> Vec<Violation> {
    let ap = l.law == FlowLaw::AreaPreserving;
    let mut out = Vec::new();
    for r in &l.rows {
        let mut flag = |check, measured, threshold| {
            out.push(Violation {
                t: r.t,
                check,
                measured,
                threshold,
            })
        };
        if r.rho_max >= b.r_bound {
            flag(Check::RadiusUpper, r.rho_max, b.r_bound);
        }
        if !(r.rho_min > 0.0) {
            flag(Check::RadiusPositive, r.rho_min, 0.0);
        }
        if ap && !(r.h > 0.0) {
            flag(Check::RatePositive, r.h, 0.0);
        }
        if ap && r.h * r.int_h > r.area * (1.0 + CAUCHY_SCHWARZ_SLACK) {
            flag(Check::CauchySchwarz, r.h * r.int_h, r.area);
        }
    }
    if let Some(last) = l.rows.last() {
        let trends = [
            (Check::TiltTrend, l.rows.iter().map(|r| r.v_max).collect::<Vec<_>>(), last.v_max),
            (Check::CurvatureTrend, l.rows.iter().map(|r| r.a2_max).collect(), last.a2_max),
        ];
        for (check, series, final_value) in trends {
            let threshold = TREND_FACTOR * median(series);
            if final_value > threshold {
                out.push(Violation {
                    t: last.t,
                    check,
                    measured: final_value,
                    threshold,
                });
            }
        }
    }
    out
}

/// Runs every checker and appends the findings to the ledger.
pub fn audit(l: &mut Ledger, b: &TheoremBounds, area_rel: f64, volume_rel: f64) {
    let mut found = check_area_conservation(l, area_rel);
    found.extend(check_volume_monotone(l, volume_rel));
    found.extend(check_mean_convexity(l));
    found.extend(check_bounds(l, b));
    found.sort_by(|a, b| a.t.total_cmp(&b.t));
    l.record_violations(found);
}

/// Consistency of a step with the evolution equation of the mean curvature.
///
/// For a normal speed `F` the mean curvature obeys `∂H/∂t = -ΔF - F|A|²`
/// along normal trajectories; for the area-preserving law that is
/// `hΔH - (1 - hH)|A|²`. Grid nodes move radially rather than normally, which
/// adds the transport term `F ρ' ∂_z H / v` at fixed `z`.
///
/// Returns the max-norm over interior nodes of the difference between
/// `(H_next - H_prev)/dt` and the right-hand side evaluated at the midpoint
/// profile.
pub fn check_h_evolution(
    law: FlowLaw,
    prev: &Profile,
    next: &Profile,
    dt: f64,
) -> Result<f64, FlowError> {
    let mid_rho: Vec<f64> = prev
        .rho()
        .iter()
        .zip(next.rho())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let mid = Profile::new(*prev.grid(), prev.dim(), mid_rho)
        .expect("average of two positive profiles is positive");
    let g = flow::sample(law, &mid)?;
    let speed = flow::normal_speed(law, &g);
    let lap = laplace_beltrami(&mid, &speed);
    let h_prev = GeometrySample::evaluate(prev).mean_curvature;
    let h_next = GeometrySample::evaluate(next).mean_curvature;
    let dz = mid.grid().spacing();
    let hm = &g.mean_curvature;
    let m = hm.len();
    let residual = (1..m - 1)
        .map(|i| {
            let dh_dz = (hm[i + 1] - hm[i - 1]) / (2.0 * dz);
            let f = speed[i];
            let rhs = -lap[i] - f * g.a2[i] + f * g.rho_dot[i] * dh_dz / g.tilt[i];
            ((h_next[i] - h_prev[i]) / dt - rhs).abs()
        })
        .fold(0.0f64, f64::max);
    Ok(residual)
}

/// Exposed for callers that want the right-hand side itself.
pub fn mean_curvature_rate(law: FlowLaw, p: &Profile) -> Result<ScalarField, FlowError> {
    let g = flow::sample(law, p)?;
    let speed = flow::normal_speed(law, &g);
    let lap = laplace_beltrami(p, &speed);
    let dz = p.grid().spacing();
    let hm = &g.mean_curvature;
    let m = hm.len();
    let values = (0..m)
        .map(|i| {
            let dh_dz = if i == 0 || i + 1 == m {
                0.0
            } else {
                (hm[i + 1] - hm[i - 1]) / (2.0 * dz)
            };
            let f = speed[i];
            -lap[i] - f * g.a2[i] + f * g.rho_dot[i] * dh_dz / g.tilt[i]
        })
        .collect();
    Ok(ScalarField::new(values, "1/(length·time)"))
}
