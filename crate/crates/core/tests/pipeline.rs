//! Whole runs through `run`.

use capflow::monitors::Check;
use capflow::{run, FlowLaw, ScenarioSpec, SimConfig, Status, TimeStep, Verdict};

#[test]
fn cosine_that_starts_without_mean_convexity_still_converges() {
    let mut cfg = SimConfig::new(ScenarioSpec::cosine(3.0, 0.1, 1), FlowLaw::AreaPreserving);
    cfg.stepper.dt = TimeStep::Fixed(1e-3);
    let out = run(&cfg).unwrap();
    assert_eq!(out.outcome.status, Status::Converged);
    let c = out.classification;
    assert_eq!(c.verdict, Verdict::Cylinder);
    let err = (c.limit_radius.unwrap() - c.predicted_radius).abs() / c.predicted_radius;
    assert!(err < 1e-3, "{err}");
    // H < 0 near z = d at the start is recorded, not fatal
    let first = &out.ledger.violations()[0];
    assert_eq!((first.t, first.check), (0.0, Check::MeanConvexity));
    assert!(out.ledger.violations().iter().all(|v| v.check == Check::MeanConvexity));
}

#[test]
fn default_time_step_reaches_the_same_cylinder() {
    let cfg = SimConfig::new(ScenarioSpec::headline(), FlowLaw::AreaPreserving);
    let out = run(&cfg).unwrap();
    assert_eq!(out.outcome.status, Status::Converged);
    let c = out.classification;
    let err = (c.limit_radius.unwrap() - c.predicted_radius).abs() / c.predicted_radius;
    assert!(err < 1e-3, "{err}");
    assert!(out.ledger.violations().is_empty(), "{:?}", out.ledger.violations());
}

#[test]
fn every_law_and_scheme_terminates() {
    use capflow::Scheme;
    for law in FlowLaw::ALL {
        for scheme in Scheme::ALL {
            let mut cfg = SimConfig::new(ScenarioSpec::cosine(0.3, 0.25, 2), law);
            cfg.stepper.scheme = scheme;
            cfg.stepper.t_end = 0.5;
            cfg.stepper.max_steps = 20_000;
            let out = run(&cfg).unwrap();
            assert!(out.outcome.t <= 0.5 + 1e-12);
            assert!(out.ledger.rows().iter().all(|r| r.t <= out.outcome.t));
        }
    }
}

#[test]
fn plain_flow_shrinks_a_cylinder_until_the_floor() {
    let mut cfg = SimConfig::new(ScenarioSpec::cylinder(1.0), FlowLaw::PlainMcf);
    cfg.stepper.dt = TimeStep::Fixed(1e-3);
    cfg.stepper.pinch_floor = 0.1;
    let out = run(&cfg).unwrap();
    assert_eq!(out.outcome.status, Status::PinchOff);
    // ρ² = 1 - 2t reaches 0.1² at t = 0.495
    assert!((out.outcome.t - 0.495).abs() < 2e-3, "{}", out.outcome.t);
}
