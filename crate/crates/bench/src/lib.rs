//! Shared fixtures for the criterion benches.

use capflow::scenarios::{self, ScenarioSpec};
use capflow::Profile;

/// The headline cosine profile resampled on `m` nodes.
pub fn headline(m: usize) -> Profile {
    let spec = ScenarioSpec::headline().with_grid(2, 1.0, m);
    scenarios::build(&spec).expect("headline scenario is valid")
}
