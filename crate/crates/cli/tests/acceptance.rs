//! Acceptance gate. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};

use capflow::classify::volume_matched_radius;
use capflow::flow;
use capflow::monitors::{check_h_evolution, Check};
use capflow::scenarios::build;
use capflow::{
    run_profile, FlowLaw, Grid, Ledger, Profile, RunOutput, ScenarioSpec, Scheme, SimConfig,
    Simulation, Status, StepperConfig, TimeStep, Tolerances, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn stepper(dt: f64) -> StepperConfig {
    StepperConfig {
        dt: TimeStep::Fixed(dt),
        ..StepperConfig::default()
    }
}

fn headline(m: usize, law: FlowLaw, dt: f64) -> RunOutput {
    let p0 = build(&ScenarioSpec::headline().with_grid(2, 1.0, m)).unwrap();
    run_profile(p0, law, &stepper(dt), &Tolerances::default(), |_, _, _| {})
}

fn area_drift(l: &Ledger) -> f64 {
    let a0 = l.rows()[0].area;
    l.rows().iter().map(|r| (r.area - a0).abs() / a0).fold(0.0, f64::max)
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

/// Worst value of `(∫H)²/∫H² / area - 1` over the ledger; never positive.
fn cauchy_schwarz_excess(l: &Ledger) -> f64 {
    l.rows()
        .iter()
        .map(|r| r.int_h * r.int_h / r.int_h2 / r.area - 1.0)
        .fold(f64::NEG_INFINITY, f64::max)
}

struct Runs {
    coarse: RunOutput,
    fine: RunOutput,
    volume_preserving: RunOutput,
}

fn c1_cylinder() -> Outcome {
    let p = Profile::from_fn(Grid::new(1.0, 201).unwrap(), 2, |_| 3.0).unwrap();
    let mut sim = Simulation::new(p, FlowLaw::AreaPreserving, Scheme::Imex);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        sim.advance(1e-3).map_err(|e| e.to_string())?;
        worst = sim.profile().rho().iter().map(|r| (r - 3.0).abs()).fold(worst, f64::max);
    }
    ensure(worst <= 1e-12, format!("max |rho - 3| = {worst:.3e} over 1000 steps (<= 1e-12)"))
}

fn c2_area(r: &Runs) -> Outcome {
    let (coarse, fine) = (area_drift(&r.coarse.ledger), area_drift(&r.fine.ledger));
    let ratio = coarse / fine;
    let converged = r.coarse.outcome.status == Status::Converged;
    ensure(
        converged && coarse <= 1e-4 && ratio >= 3.0,
        format!(
            "{:?} at t = {:.3}; drift {coarse:.3e} (<= 1e-4), refined {fine:.3e}, ratio {ratio:.2} (>= 3)",
            r.coarse.outcome.status, r.coarse.outcome.t
        ),
    )
}

fn c3_volume(r: &Runs) -> Outcome {
    let rows = r.coarse.ledger.rows();
    let v0 = rows[0].volume;
    let worst_drop = rows
        .windows(2)
        .map(|w| (w[0].volume - w[1].volume) / v0)
        .fold(f64::NEG_INFINITY, f64::max);
    let gain = rows[rows.len() - 1].volume - v0;
    ensure(
        worst_drop <= 1e-8 && gain >= 0.0,
        format!("largest relative drop {worst_drop:.3e} (<= 1e-8), final gain {gain:.3e} (>= 0)"),
    )
}

fn c4_mean_convexity(r: &Runs) -> Outcome {
    let rows = r.coarse.ledger.rows();
    let h_min = rows.iter().map(|r| r.h_min).fold(f64::INFINITY, f64::min);
    ensure(h_min > 0.0, format!("min H_min over {} rows = {h_min:.4e} (> 0)", rows.len()))
}

fn c5_cauchy_schwarz(r: &Runs) -> Outcome {
    let runs = [&r.coarse, &r.fine, &r.volume_preserving];
    let excess = runs
        .iter()
        .map(|o| cauchy_schwarz_excess(&o.ledger))
        .fold(f64::NEG_INFINITY, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut fuzz_worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for _ in 0..1000 {
        let m = rng.random_range(5..=300);
        let n = rng.random_range(2..=6);
        let d = rng.random_range(0.05..5.0);
        let base = rng.random_range(0.05..10.0);
        let rough = rng.random_bool(0.5);
        let modes: Vec<(f64, f64)> = (0..4)
            .map(|k| (rng.random_range(-0.4..0.4) * base, (k + 1) as f64))
            .collect();
        let grid = Grid::new(d, m).unwrap();
        let rho: Vec<f64> = grid
            .nodes()
            .map(|z| {
                if rough {
                    base * rng.random_range(0.2..1.8)
                } else {
                    let wave: f64 = modes.iter().map(|(a, k)| a * (k * PI * z / d).cos()).sum();
                    (base + wave).max(0.01 * base)
                }
            })
            .collect();
        let p = Profile::new(grid, n, rho).unwrap();
        let g = flow::sample(FlowLaw::AreaPreserving, &p).unwrap();
        let e = g.h * g.int_h / g.area - 1.0;
        fuzz_worst = fuzz_worst.max(e);
        if e > 1e-12 {
            failures += 1;
        }
    }
    ensure(
        excess <= 1e-12 && failures == 0,
        format!(
            "worst h·intH/area - 1 over run rows {excess:.3e}; fuzz of 1000 profiles: {failures} violations, worst {fuzz_worst:.3e}"
        ),
    )
}

fn c6_bounds(r: &Runs) -> Outcome {
    let rows = r.coarse.ledger.rows();
    let r_bound = r.coarse.bounds.r_bound;
    let rho_max = rows.iter().map(|r| r.rho_max).fold(0.0, f64::max);
    let last = rows[rows.len() - 1];
    let v_med = median(rows.iter().map(|r| r.v_max).collect());
    let a_med = median(rows.iter().map(|r| r.a2_max).collect());
    ensure(
        rho_max < r_bound && last.v_max <= 2.0 * v_med && last.a2_max <= 2.0 * a_med,
        format!(
            "rho_max {rho_max:.6} < R {r_bound:.6}; final v_max/median {:.4}, A2_max/median {:.4} (<= 2)",
            last.v_max / v_med,
            last.a2_max / a_med
        ),
    )
}

fn c7_limit(r: &Runs) -> Outcome {
    let c = &r.coarse.classification;
    let limit = c.limit_radius.unwrap_or(f64::NAN);
    let err = (limit - c.predicted_radius).abs() / c.predicted_radius;
    ensure(
        c.verdict == Verdict::Cylinder && err <= 1e-3 && c.h_spread <= 1e-6,
        format!(
            "{:?}, radius {limit:.8} vs predicted {:.8} (rel {err:.2e} <= 1e-3), H_spread {:.2e} (<= 1e-6)",
            c.verdict, c.predicted_radius, c.h_spread
        ),
    )
}

/// Per-step residuals `(t, r)` over the whole headline run at grid `m`.
fn h_residuals(m: usize, dt: f64) -> Vec<(f64, f64)> {
    let p0 = build(&ScenarioSpec::headline().with_grid(2, 1.0, m)).unwrap();
    let mut prev: Option<(usize, Profile)> = None;
    let mut out = Vec::new();
    run_profile(p0, FlowLaw::AreaPreserving, &stepper(dt), &Tolerances::default(), |step, t, p| {
        if let Some((k, q)) = &prev {
            if *k + 1 == step {
                let r = check_h_evolution(FlowLaw::AreaPreserving, q, p, dt).unwrap();
                out.push((t, r));
            }
        }
        prev = Some((step, p.clone()));
    });
    out
}

fn max_from(series: &[(f64, f64)], t0: f64) -> f64 {
    series.iter().filter(|(t, _)| *t >= t0).map(|(_, r)| *r).fold(0.0, f64::max)
}

fn c8_h_evolution() -> Outcome {
    let coarse = h_residuals(201, 1e-3);
    let fine = h_residuals(401, 5e-4);
    let (rc, rf) = (max_from(&coarse, 0.0), max_from(&fine, 0.0));
    let ratio = rc / rf;
    // after the start-up transient the fine grid sits on the rounding floor
    // of the fourth difference hidden in ΔH, about 16 ulp(ρ) h / Δz⁴
    let (lc, lf) = (max_from(&coarse, 0.02), max_from(&fine, 0.02));
    ensure(
        ratio >= 1.8 && !coarse.is_empty() && !fine.is_empty(),
        format!(
            "max over the run {rc:.3e} -> {rf:.3e}, ratio {ratio:.2} (>= 1.8); for t >= 0.02 only: {lc:.2e} -> {lf:.2e}"
        ),
    )
}

fn c9_cross_flow(r: &Runs) -> Outcome {
    let vp = &r.volume_preserving;
    let rows = vp.ledger.rows();
    let v0 = rows[0].volume;
    let drift = rows.iter().map(|r| (r.volume - v0).abs() / v0).fold(0.0, f64::max);
    let target = volume_matched_radius(v0, 2, 1.0);
    let limit = vp.classification.limit_radius.unwrap_or(f64::NAN);
    let radius_err = (limit - target).abs() / target;

    let p = Profile::from_fn(Grid::new(1.0, 201).unwrap(), 2, |_| 3.0).unwrap();
    let mut sim = Simulation::new(p, FlowLaw::PlainMcf, Scheme::Imex);
    for _ in 0..500 {
        sim.advance(1e-3).map_err(|e| e.to_string())?;
    }
    let exact = (9.0f64 - 2.0 * 0.5).sqrt();
    let mcf_err = sim.profile().rho().iter().map(|r| (r - exact).abs()).fold(0.0, f64::max);
    ensure(
        vp.outcome.status == Status::Converged
            && drift <= 1e-4
            && radius_err <= 1e-3
            && mcf_err <= 1e-6,
        format!(
            "volume-preserving: {:?}, drift {drift:.3e} (<= 1e-4), radius rel err {radius_err:.2e} (<= 1e-3); plain flow at t = {:.3}: err {mcf_err:.2e} (<= 1e-6)",
            vp.outcome.status,
            sim.t()
        ),
    )
}

fn c10_oracle() -> Outcome {
    let p0 = build(&ScenarioSpec::headline()).unwrap();
    let mut imex = Simulation::new(p0.clone(), FlowLaw::AreaPreserving, Scheme::Imex);
    for _ in 0..100 {
        imex.advance(1e-3).map_err(|e| e.to_string())?;
    }
    let mut rk2 = Simulation::new(p0, FlowLaw::AreaPreserving, Scheme::ExplicitRk2);
    for _ in 0..100_000 {
        rk2.advance(1e-6).map_err(|e| e.to_string())?;
    }
    let diff = imex
        .profile()
        .rho()
        .iter()
        .zip(rk2.profile().rho())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(
        diff <= 1e-5,
        format!("t = {:.6} / {:.6}: max |Δrho| = {diff:.3e} (<= 1e-5)", imex.t(), rk2.t()),
    )
}

/// Violations the ledger must contain, recomputed from its rows.
fn expected_violations(out: &RunOutput, tol: &Tolerances) -> HashSet<(u64, Check)> {
    let rows = out.ledger.rows();
    let (a0, v0) = (rows[0].area, rows[0].volume);
    let mut set = HashSet::new();
    for (i, r) in rows.iter().enumerate() {
        let t = r.t.to_bits();
        if (r.area - a0).abs() / a0 > tol.area_rel {
            set.insert((t, Check::AreaConservation));
        }
        if i > 0 && (rows[i - 1].volume - r.volume) / v0 > tol.volume_rel {
            set.insert((t, Check::VolumeMonotone));
        }
        if r.h_min <= 0.0 {
            set.insert((t, Check::MeanConvexity));
        }
        if r.rho_max >= out.bounds.r_bound {
            set.insert((t, Check::RadiusUpper));
        }
        if r.h <= 0.0 {
            set.insert((t, Check::RatePositive));
        }
    }
    set
}

fn c11_robustness() -> Outcome {
    let spec = ScenarioSpec::cosine(0.3, 0.25, 2);
    let p0 = build(&spec).unwrap();
    let hypothesis = capflow::scenarios::validate(&p0).hypothesis_holds;
    let tol = Tolerances::default();
    let out = run_profile(p0, FlowLaw::AreaPreserving, &StepperConfig::default(), &tol, |_, _, _| {});
    let status = out.outcome.status;
    let definite = matches!(status, Status::Converged | Status::PinchOff | Status::MeanConvexityLost);

    let recorded: HashSet<(u64, Check)> =
        out.ledger.violations().iter().map(|v| (v.t.to_bits(), v.check)).collect();
    let expected = expected_violations(&out, &tol);
    let missing = expected.difference(&recorded).count();

    // the same scenario through the binary
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = SimConfig::new(spec, FlowLaw::AreaPreserving);
    cfg.output.dir = dir.path().join("out");
    let path = dir.path().join("run.toml");
    std::fs::write(&path, cfg.to_toml()).map_err(|e| e.to_string())?;
    let code = Command::new(env!("CARGO_BIN_EXE_capflow"))
        .args(["simulate", "--config"])
        .arg(&path)
        .env_remove("CAPFLOW_OUT")
        .output()
        .map_err(|e| e.to_string())?
        .status
        .code();

    ensure(
        !hypothesis && definite && matches!(code, Some(0 | 2)) && missing == 0,
        format!(
            "hypothesis_holds {hypothesis}; {status:?} at t = {:.4}; exit {code:?}; {} expected violations, {missing} missing from {} recorded",
            out.outcome.t,
            expected.len(),
            recorded.len()
        ),
    )
}

fn main() -> ExitCode {
    // keep panics from the criteria inside their own line
    panic::set_hook(Box::new(|_| {}));
    let runs = panic::catch_unwind(|| Runs {
        coarse: headline(201, FlowLaw::AreaPreserving, 1e-3),
        fine: headline(401, FlowLaw::AreaPreserving, 2.5e-4),
        volume_preserving: headline(201, FlowLaw::VolumePreserving, 1e-3),
    })
    .expect("headline runs");

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("C1 cylinder stationarity", Box::new(c1_cylinder)),
        ("C2 area conservation", Box::new(|| c2_area(&runs))),
        ("C3 volume monotonicity", Box::new(|| c3_volume(&runs))),
        ("C4 mean convexity", Box::new(|| c4_mean_convexity(&runs))),
        ("C5 Cauchy-Schwarz bound", Box::new(|| c5_cauchy_schwarz(&runs))),
        ("C6 boundedness monitors", Box::new(|| c6_bounds(&runs))),
        ("C7 limit cylinder", Box::new(|| c7_limit(&runs))),
        ("C8 mean curvature evolution", Box::new(c8_h_evolution)),
        ("C9 cross-flow control", Box::new(|| c9_cross_flow(&runs))),
        ("C10 oracle equivalence", Box::new(c10_oracle)),
        ("C11 robustness outside hypotheses", Box::new(c11_robustness)),
    ];

    let mut failed = 0;
    for (name, check) in &criteria {
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match result {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
