//! Area-preserving mean curvature flow of rotationally symmetric
//! hypersurfaces between two parallel planes, with free Neumann boundaries.
//!
//! The surface is stored as its radius function on a uniform axial grid
//! ([`geometry`]), evolved under one of three flow laws ([`flow`]) by an
//! explicit or IMEX integrator ([`stepper`]), watched by monitors that check
//! what the flow is known to conserve or bound ([`monitors`]), and finally
//! classified as a cylinder or another constant mean curvature surface
//! ([`classify`]).

pub mod classify;
pub mod config;
pub mod flow;
pub mod geometry;
pub mod monitors;
pub mod scenarios;
pub mod stepper;
pub mod tridiag;

pub use classify::{ClassificationResult, ClassifyTolerances, Verdict};
pub use config::{parse_config, ConfigError, OutputConfig, SimConfig, Tolerances};
pub use flow::FlowLaw;
pub use geometry::{GeometrySample, Grid, Profile, ScalarField};
pub use monitors::{Ledger, LedgerRow, TheoremBounds, Violation};
pub use scenarios::{Family, ScenarioSpec, ValidationReport};
pub use stepper::{run, run_profile, RunOutput, Scheme, Simulation, Status, StepperConfig, TimeStep};
