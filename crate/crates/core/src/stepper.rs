//! Time integration of the radius function.
//!
//! With normal speed `a - bH` the radius obeys
//!
//! ```text
//! ∂ρ/∂t = b ρ''/(1+ρ'²) + [a √(1+ρ'²) - b (n-1)/ρ]
//! ```
//!
//! The explicit schemes advance the whole right-hand side. The IMEX schemes
//! treat the diffusion term implicitly with its coefficient lagged, so every
//! step is one tridiagonal solve, and treat the bracket explicitly. The rate
//! `h(t)` is frozen over a step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{self, ClassificationResult, ClassifyTolerances, Reference};
use crate::config::{SimConfig, Tolerances};
use crate::flow::{self, FlowError, FlowLaw};
use crate::geometry::{derivative_second, GeometrySample, Profile};
use crate::monitors::{self, Ledger, LedgerRow, TheoremBounds};
use crate::scenarios::{self, ScenarioError};
use crate::tridiag::{Tridiagonal, TridiagError};

/// Smallest diffusivity used by [`stable_dt`].
pub const H_FLOOR: f64 = 1e-12;
/// Cap on automatically chosen explicit steps.
pub const DT_MAX: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    ExplicitEuler,
    #[serde(rename = "ExplicitRK2")]
    ExplicitRk2,
    /// Linearly implicit Euler.
    #[serde(rename = "IMEXEuler")]
    ImexEuler,
    /// Second-order IMEX BDF, started with one linearly implicit Euler step.
    #[serde(rename = "IMEX")]
    Imex,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::ExplicitEuler,
        Scheme::ExplicitRk2,
        Scheme::ImexEuler,
        Scheme::Imex,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ExplicitEuler => "ExplicitEuler",
            Scheme::ExplicitRk2 => "ExplicitRK2",
            Scheme::ImexEuler => "IMEXEuler",
            Scheme::Imex => "IMEX",
        }
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self, Scheme::ExplicitEuler | Scheme::ExplicitRk2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// `Δz` for IMEX schemes, [`stable_dt`] for explicit ones.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub dt: TimeStep,
    pub cfl_safety: f64,
    pub t_end: f64,
    pub max_steps: usize,
    /// Fraction of the initial minimum radius below which the run stops.
    pub pinch_floor: f64,
    pub record_every: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Imex,
            dt: TimeStep::Auto,
            cfl_safety: 0.8,
            t_end: 100.0,
            max_steps: 1_000_000,
            pinch_floor: 1e-3,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    /// No guard fired; reached `t_end`.
    Ok,
    Converged,
    PinchOff,
    MeanConvexityLost,
    BlowUp,
    MaxSteps,
}

impl Status {
    /// Stops caused by a guard rather than by convergence or the end time.
    pub fn is_guarded_stop(&self) -> bool {
        !matches!(self, Status::Ok | Status::Converged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub profile: Profile,
    pub t: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("non-finite radius after step")]
    NonFinite,
    #[error("radius reached {min}")]
    NonPositive { min: f64 },
    #[error(transparent)]
    Degenerate(#[from] FlowError),
    #[error("implicit system lost diagonal dominance")]
    NotDominant,
    #[error(transparent)]
    Singular(#[from] TridiagError),
}

/// Parabolic step limit `σ Δz² / (2 max(b, 1e-12))`, capped at [`DT_MAX`].
///
/// `diffusivity` is the coefficient `b` of `-H` in the normal speed: `h` for
/// the area-preserving law and `1` for the others.
pub fn stable_dt(p: &Profile, diffusivity: f64, sigma: f64) -> f64 {
    let dz = p.grid().spacing();
    (sigma * dz * dz / (2.0 * diffusivity.max(H_FLOOR))).min(DT_MAX)
}

/// Diffusion coefficient of the explicit schemes.
pub fn diffusivity(law: FlowLaw, h: f64) -> f64 {
    law.speed_coefficients(h).1
}

fn checked_profile(template: &Profile, rho: Vec<f64>) -> Result<Profile, StepError> {
    if rho.iter().any(|r| !r.is_finite()) {
        return Err(StepError::NonFinite);
    }
    let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(StepError::NonPositive { min });
    }
    Ok(Profile::new(*template.grid(), template.dim(), rho).expect("checked above"))
}

fn axpy(p: &Profile, dt: f64, vel: &[f64]) -> Vec<f64> {
    p.rho().iter().zip(vel).map(|(r, v)| r + dt * v).collect()
}

/// One explicit step: forward Euler, or the midpoint rule with the geometry
/// and rate recomputed at the half step.
pub fn step_explicit(p: &Profile, law: FlowLaw, dt: f64, scheme: Scheme) -> Result<Profile, StepError> {
    let (k1, _) = flow::radial_velocity(law, p)?;
    match scheme {
        Scheme::ExplicitRk2 => {
            let half = checked_profile(p, axpy(p, 0.5 * dt, &k1))?;
            let (k2, _) = flow::radial_velocity(law, &half)?;
            checked_profile(p, axpy(p, dt, &k2))
        }
        _ => checked_profile(p, axpy(p, dt, &k1)),
    }
}

/// Implicit coefficient `C = b/(1+ρ'²)` and explicit remainder
/// `E = a v - b (n-1)/ρ`.
fn imex_split(law: FlowLaw, p: &Profile, g: &GeometrySample) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = law.speed_coefficients(g.h);
    let nm1 = (p.dim() - 1) as f64;
    let c = g.rho_dot.iter().map(|rd| b / (1.0 + rd * rd)).collect();
    let e = g
        .tilt
        .iter()
        .zip(p.rho())
        .map(|(v, r)| a * v - b * nm1 / r)
        .collect();
    (c, e)
}

/// `lead·I - dt·diag(C)·D₂` with the reflection folded into the first and last rows.
fn implicit_matrix(c: &[f64], dt: f64, dz: f64, lead: f64) -> Tridiagonal {
    let m = c.len();
    let s = dt / (dz * dz);
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    for i in 0..m {
        let k = s * c[i];
        diag[i] = lead + 2.0 * k;
        if i == 0 {
            upper[i] = -2.0 * k;
        } else if i + 1 == m {
            lower[i] = -2.0 * k;
        } else {
            lower[i] = -k;
            upper[i] = -k;
        }
    }
    Tridiagonal { lower, diag, upper }
}

/// Solves `A δ = incr` for `A = lead·I - dt C D₂` and returns `ρ + δ`.
///
/// Working with the increment keeps the rounding error of the solve relative
/// to `δ` rather than to `ρ`; with `dt C/Δz²` in the hundreds the full-form
/// solve would let a stationary cylinder drift by about `1e-14` per step.
fn solve_increment(
    p: &Profile,
    c: &[f64],
    incr: &[f64],
    dt: f64,
    lead: f64,
) -> Result<Profile, StepError> {
    let a = implicit_matrix(c, dt, p.grid().spacing(), lead);
    if !a.is_diagonally_dominant() {
        return Err(StepError::NotDominant);
    }
    let delta = a.solve(incr)?;
    checked_profile(p, p.rho().iter().zip(&delta).map(|(r, d)| r + d).collect())
}

/// One linearly implicit Euler step
/// `(I - dt C D₂) ρ^{k+1} = ρ^k + dt E(ρ^k)`.
pub fn step_imex(p: &Profile, law: FlowLaw, dt: f64) -> Result<Profile, StepError> {
    let g = flow::sample(law, p)?;
    let (c, e) = imex_split(law, p, &g);
    solve_increment(p, &c, &euler_increment(p, &c, &e, dt), dt, 1.0)
}

/// Right-hand side of the increment form of the Euler step, `dt (C D₂ρ + E)`.
fn euler_increment(p: &Profile, c: &[f64], e: &[f64], dt: f64) -> Vec<f64> {
    let d2 = derivative_second(p);
    (0..c.len()).map(|i| dt * (c[i] * d2[i] + e[i])).collect()
}

/// What the second-order IMEX step remembers from the previous step.
#[derive(Debug, Clone)]
struct ImexHistory {
    rho: Vec<f64>,
    c: Vec<f64>,
    e: Vec<f64>,
    dt: f64,
}

/// Compensated accumulation of simulated time.
#[derive(Debug, Clone, Copy, Default)]
struct Clock {
    t: f64,
    carry: f64,
}

impl Clock {
    fn advance(&mut self, dt: f64) {
        let y = dt - self.carry;
        let t = self.t + y;
        self.carry = (t - self.t) - y;
        self.t = t;
    }
}

/// A single evolving surface. Runs are independent values; nothing is shared
/// between simulations.
#[derive(Debug, Clone)]
pub struct Simulation {
    law: FlowLaw,
    scheme: Scheme,
    profile: Profile,
    clock: Clock,
    steps: usize,
    history: Option<ImexHistory>,
}

impl Simulation {
    pub fn new(profile: Profile, law: FlowLaw, scheme: Scheme) -> Self {
        Self {
            law,
            scheme,
            profile,
            clock: Clock::default(),
            steps: 0,
            history: None,
        }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn t(&self) -> f64 {
        self.clock.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn law(&self) -> FlowLaw {
        self.law
    }

    pub fn sample(&self) -> Result<GeometrySample, FlowError> {
        flow::sample(self.law, &self.profile)
    }

    /// Step size requested by `dt`, before clipping to the end time.
    pub fn step_size(&self, dt: TimeStep, sigma: f64, h: f64) -> f64 {
        match dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto if self.scheme.is_explicit() => {
                stable_dt(&self.profile, diffusivity(self.law, h), sigma)
            }
            TimeStep::Auto => self.profile.grid().spacing(),
        }
    }

    /// Advances by `dt`. On error the state is left untouched.
    pub fn advance(&mut self, dt: f64) -> Result<(), StepError> {
        let next = match self.scheme {
            Scheme::ExplicitEuler | Scheme::ExplicitRk2 => {
                step_explicit(&self.profile, self.law, dt, self.scheme)?
            }
            Scheme::ImexEuler => step_imex(&self.profile, self.law, dt)?,
            Scheme::Imex => return self.advance_bdf2(dt),
        };
        self.commit(next, dt);
        Ok(())
    }

    fn commit(&mut self, next: Profile, dt: f64) {
        self.profile = next;
        self.clock.advance(dt);
        self.steps += 1;
    }

    /// `(3/2 I - dt C* D₂) ρ^{k+1} = 2ρ^k - ρ^{k-1}/2 + dt (2E^k - E^{k-1})`
    /// with `C* = 2C^k - C^{k-1}`; falls back to implicit Euler without a
    /// matching previous step.
    fn advance_bdf2(&mut self, dt: f64) -> Result<(), StepError> {
        let g = flow::sample(self.law, &self.profile)?;
        let (c, e) = imex_split(self.law, &self.profile, &g);
        let next = match &self.history {
            Some(hist) if (hist.dt - dt).abs() <= 1e-9 * dt => {
                let mut c_star: Vec<f64> = c.iter().zip(&hist.c).map(|(a, b)| 2.0 * a - b).collect();
                if c_star.iter().any(|&x| x < 0.0) {
                    c_star.clone_from(&c);
                }
                // (3/2 I - dt C* D₂) δ = (ρ^k - ρ^{k-1})/2 + dt (C* D₂ρ^k + 2E^k - E^{k-1})
                let d2 = derivative_second(&self.profile);
                let rho = self.profile.rho();
                let incr: Vec<f64> = (0..c.len())
                    .map(|i| {
                        0.5 * (rho[i] - hist.rho[i])
                            + dt * (c_star[i] * d2[i] + 2.0 * e[i] - hist.e[i])
                    })
                    .collect();
                solve_increment(&self.profile, &c_star, &incr, dt, 1.5)?
            }
            _ => {
                let incr = euler_increment(&self.profile, &c, &e, dt);
                solve_increment(&self.profile, &c, &incr, dt, 1.0)?
            }
        };
        let rho = self.profile.rho().to_vec();
        self.history = Some(ImexHistory { rho, c, e, dt });
        self.commit(next, dt);
        Ok(())
    }
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub outcome: StepOutcome,
    pub steps: usize,
    pub ledger: Ledger,
    pub classification: ClassificationResult,
    pub bounds: TheoremBounds,
    pub initial: Profile,
}

/// Builds the scenario of `cfg` and runs it.
pub fn run(cfg: &SimConfig) -> Result<RunOutput, ScenarioError> {
    let p0 = scenarios::build(&cfg.scenario)?;
    Ok(run_profile(p0, cfg.law, &cfg.stepper, &cfg.tolerances, |_, _, _| {}))
}

/// Runs from `p0`, calling `observe(step, t, profile)` before every step and
/// once more on the final state.
pub fn run_profile(
    p0: Profile,
    law: FlowLaw,
    cfg: &StepperConfig,
    tol: &Tolerances,
    mut observe: impl FnMut(usize, f64, &Profile),
) -> RunOutput {
    let bounds = monitors::theorem_bounds(&p0);
    let reference = Reference {
        area: bounds.area,
        volume: bounds.volume,
    };
    let floor = cfg.pinch_floor * p0.min_radius();
    let classify_tol = ClassifyTolerances {
        convergence: tol.convergence,
        cylinder: tol.cylinder,
    };
    let mut ledger = Ledger::new(law);
    let mut sim = Simulation::new(p0.clone(), law, cfg.scheme);
    let record_every = cfg.record_every.max(1);

    let status = loop {
        observe(sim.steps(), sim.t(), sim.profile());
        let g = match sim.sample() {
            Ok(g) => g,
            Err(FlowError::DegenerateGeometry(_)) => break Status::MeanConvexityLost,
        };
        let row = LedgerRow::from_sample(sim.t(), law, sim.profile(), &g);
        if row.values().iter().any(|x| !x.is_finite()) {
            break Status::BlowUp;
        }
        let lost_convexity = !(row.h_min > 0.0);
        if sim.steps() % record_every == 0 || lost_convexity {
            // strictly increasing by construction of the loop
            let _ = ledger.push(row);
        }
        // A non-positive rate turns the area-preserving law backward parabolic.
        if law == FlowLaw::AreaPreserving && !(g.h > 0.0) {
            break Status::MeanConvexityLost;
        }
        if sim.profile().min_radius() < floor {
            break Status::PinchOff;
        }
        if law.is_constrained() && classify::convergence_test(&g, tol.convergence) {
            break Status::Converged;
        }
        let remaining = cfg.t_end - sim.t();
        if remaining <= 0.0 {
            break Status::Ok;
        }
        if sim.steps() >= cfg.max_steps {
            break Status::MaxSteps;
        }
        let dt = sim.step_size(cfg.dt, cfg.cfl_safety, g.h);
        let dt = if remaining <= dt * (1.0 + 1e-9) { remaining } else { dt };
        match sim.advance(dt) {
            Ok(()) => {}
            Err(StepError::NonPositive { .. }) => break Status::PinchOff,
            Err(StepError::Degenerate(_)) => break Status::MeanConvexityLost,
            Err(StepError::NonFinite | StepError::NotDominant | StepError::Singular(_)) => {
                break Status::BlowUp
            }
        }
    };

    let final_profile = sim.profile().clone();
    let t = sim.t();
    observe(sim.steps(), t, &final_profile);
    let g_final = sim
        .sample()
        .unwrap_or_else(|_| GeometrySample::evaluate(&final_profile));
    if ledger.last().map_or(true, |r| r.t < t) {
        let row = LedgerRow::from_sample(t, law, &final_profile, &g_final);
        let _ = ledger.push(row);
    }
    monitors::audit(&mut ledger, &bounds, tol.area_rel, tol.volume_rel);
    let classification = classify::classify_limit(&final_profile, &g_final, &reference, &classify_tol);
    RunOutput {
        outcome: StepOutcome {
            profile: final_profile,
            t,
            status,
        },
        steps: sim.steps(),
        ledger,
        classification,
        bounds,
        initial: p0,
    }
}
